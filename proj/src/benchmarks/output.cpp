#include "fliga/benchmarks/output.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "fliga/errors.hpp"

namespace fliga {

namespace {

std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw Error("cannot open '" + path + "' for writing");
    return out;
}

void check_write(const std::ofstream& out, const std::string& path) {
    if (!out)
        throw Error("write to '" + path + "' failed");
}

/// %.17g: shortest text that parses back to the identical double.
std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

FieldSnapshot make_snapshot(int step, double time, const std::vector<MaterialPoint>& points,
                            const Assembler& assembler, const Eigen::VectorXd& u,
                            const FloatingPatch& velocity) {
    if (assembler.cached_points() != static_cast<int>(points.size()))
        throw ConfigError("snapshot points do not match the assembler cache");
    FieldSnapshot snap;
    snap.step = step;
    snap.time = time;
    snap.points.reserve(points.size());
    for (std::size_t s = 0; s < points.size(); ++s) {
        const MaterialPoint& q = points[s];
        const int slot = static_cast<int>(s);
        const Vector2d v = assembler.point_velocity(slot, u);
        PointRecord rec;
        rec.id = q.id;
        rec.x = q.x[0];
        rec.y = q.x[1];
        rec.W = q.W;
        rec.vx = v[0];
        rec.vy = v[1];
        rec.p = assembler.point_pressure(slot, u);
        rec.pi_xx = q.pi(0, 0);
        rec.pi_xy = q.pi(0, 1);
        rec.pi_yy = q.pi(1, 1);
        snap.points.push_back(rec);
    }
    snap.control_net = velocity.control_net();
    snap.regulation = velocity.regulation();
    return snap;
}

void write_points_csv(const FieldSnapshot& snapshot, const std::string& path) {
    std::ofstream out = open_for_write(path);
    out << "id,x,y,W,vx,vy,p,pi_xx,pi_xy,pi_yy\n";
    for (const PointRecord& r : snapshot.points)
        out << r.id << ',' << g17(r.x) << ',' << g17(r.y) << ',' << g17(r.W) << ','
            << g17(r.vx) << ',' << g17(r.vy) << ',' << g17(r.p) << ',' << g17(r.pi_xx)
            << ',' << g17(r.pi_xy) << ',' << g17(r.pi_yy) << '\n';
    check_write(out, path);
}

std::vector<PointRecord> read_points_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line) || line.rfind("id,", 0) != 0)
        throw Error("'" + path + "' is not a points CSV");
    std::vector<PointRecord> records;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::istringstream ss(line);
        std::string field;
        double values[10];
        for (int k = 0; k < 10; ++k) {
            if (!std::getline(ss, field, ','))
                throw Error("short row in '" + path + "'");
            values[k] = std::strtod(field.c_str(), nullptr);
        }
        PointRecord r;
        r.id = static_cast<int>(values[0]);
        r.x = values[1];
        r.y = values[2];
        r.W = values[3];
        r.vx = values[4];
        r.vy = values[5];
        r.p = values[6];
        r.pi_xx = values[7];
        r.pi_xy = values[8];
        r.pi_yy = values[9];
        records.push_back(r);
    }
    return records;
}

void write_points_vtk(const FieldSnapshot& snapshot, const std::string& path) {
    std::ofstream out = open_for_write(path);
    const std::size_t n = snapshot.points.size();
    out << "# vtk DataFile Version 3.0\n"
        << "material point cloud, step " << snapshot.step << ", time " << g17(snapshot.time)
        << "\nASCII\nDATASET POLYDATA\n";
    out << "POINTS " << n << " double\n";
    for (const PointRecord& r : snapshot.points)
        out << g17(r.x) << ' ' << g17(r.y) << " 0\n";
    out << "VERTICES " << n << ' ' << 2 * n << '\n';
    for (std::size_t k = 0; k < n; ++k)
        out << "1 " << k << '\n';
    out << "POINT_DATA " << n << '\n';
    out << "SCALARS id int 1\nLOOKUP_TABLE default\n";
    for (const PointRecord& r : snapshot.points)
        out << r.id << '\n';
    out << "SCALARS weight double 1\nLOOKUP_TABLE default\n";
    for (const PointRecord& r : snapshot.points)
        out << g17(r.W) << '\n';
    out << "VECTORS velocity double\n";
    for (const PointRecord& r : snapshot.points)
        out << g17(r.vx) << ' ' << g17(r.vy) << " 0\n";
    out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
    for (const PointRecord& r : snapshot.points)
        out << g17(r.p) << '\n';
    out << "SCALARS pi_xx double 1\nLOOKUP_TABLE default\n";
    for (const PointRecord& r : snapshot.points)
        out << g17(r.pi_xx) << '\n';
    out << "SCALARS pi_xy double 1\nLOOKUP_TABLE default\n";
    for (const PointRecord& r : snapshot.points)
        out << g17(r.pi_xy) << '\n';
    out << "SCALARS pi_yy double 1\nLOOKUP_TABLE default\n";
    for (const PointRecord& r : snapshot.points)
        out << g17(r.pi_yy) << '\n';
    check_write(out, path);
}

void write_errors_csv(const std::vector<ErrorSeriesRow>& rows, const std::string& path) {
    std::ofstream out = open_for_write(path);
    out << "step,time,err_vx,err_p\n";
    for (const ErrorSeriesRow& r : rows)
        out << r.step << ',' << g17(r.time) << ',' << g17(r.err_vx) << ',' << g17(r.err_p)
            << '\n';
    check_write(out, path);
}

void write_report(const std::string& path, const std::string& title,
                  const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ofstream out = open_for_write(path);
    out << title << '\n';
    std::size_t width = 0;
    for (const auto& [key, value] : entries)
        width = std::max(width, key.size());
    for (const auto& [key, value] : entries) {
        out << key;
        for (std::size_t k = key.size(); k < width; ++k)
            out << ' ';
        out << " = " << value << '\n';
    }
    check_write(out, path);
}

} // namespace fliga

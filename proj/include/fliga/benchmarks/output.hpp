#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fliga/assembly.hpp"
#include "fliga/floating_patch.hpp"
#include "fliga/material_points.hpp"

namespace fliga {

/// One material-point record of a snapshot (CSV column order).
struct PointRecord {
    int id = 0;
    double x = 0, y = 0, W = 0;
    double vx = 0, vy = 0, p = 0;
    double pi_xx = 0, pi_xy = 0, pi_yy = 0;
};

/// State of a run at one step: material-point records plus the control net
/// and regulation grid, and error norms when an analytic reference exists.
struct FieldSnapshot {
    int step = 0;
    double time = 0;
    std::vector<PointRecord> points;
    Eigen::MatrixX2d control_net;
    RegulationGrid regulation;
    double err_vx = std::numeric_limits<double>::quiet_NaN();
    double err_p = std::numeric_limits<double>::quiet_NaN();
};

/// Snapshot consumer wired by the CLI to the file writers.
using SnapshotSink = std::function<void(const FieldSnapshot&)>;

/// Assemble a snapshot from the solved state; `assembler` must have been
/// refreshed with exactly `points` (slots match vector positions).
FieldSnapshot make_snapshot(int step, double time, const std::vector<MaterialPoint>& points,
                            const Assembler& assembler, const Eigen::VectorXd& u,
                            const FloatingPatch& velocity);

/// CSV with header id,x,y,W,vx,vy,p,pi_xx,pi_xy,pi_yy; floats printed with
/// 17 significant digits (lossless text round-trip).
void write_points_csv(const FieldSnapshot& snapshot, const std::string& path);

/// Parse a points CSV written by write_points_csv.
std::vector<PointRecord> read_points_csv(const std::string& path);

/// Legacy-VTK point cloud (POLYDATA with one vertex cell per point) carrying
/// the same fields as point data.
void write_points_vtk(const FieldSnapshot& snapshot, const std::string& path);

/// Error-norm time series row.
struct ErrorSeriesRow {
    int step = 0;
    double time = 0;
    double err_vx = 0;
    double err_p = 0;
};

/// CSV with header step,time,err_vx,err_p.
void write_errors_csv(const std::vector<ErrorSeriesRow>& rows, const std::string& path);

/// Plain-text report: title line followed by aligned key = value pairs.
void write_report(const std::string& path, const std::string& title,
                  const std::vector<std::pair<std::string, std::string>>& entries);

} // namespace fliga

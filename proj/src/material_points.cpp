#include "fliga/material_points.hpp"

#include <cmath>
#include <limits>

#include "fliga/errors.hpp"

namespace fliga {

std::vector<MaterialPoint> init_material_points(const FloatingPatch& velocity_patch,
                                                std::pair<int, int> points_per_element,
                                                const Matrix2d& pi0) {
    const auto [nx, ny] = points_per_element;
    if (nx < 1 || nx > 16 || ny < 1 || ny > 16)
        throw ConfigError("points per element must be in 1..16 per direction");
    if (!velocity_patch.has_net())
        throw ConfigError("material point initialization requires a control net");

    const GaussRule gx = gauss_legendre(nx);
    const GaussRule gy = gauss_legendre(ny);
    const std::vector<double> bx = velocity_patch.parent().breakpoints();
    const std::vector<double> by = velocity_patch.normal().breakpoints();

    std::vector<MaterialPoint> points;
    points.reserve((bx.size() - 1) * (by.size() - 1) *
                   static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    int id = 0;
    for (std::size_t ey = 0; ey + 1 < by.size(); ++ey)
        for (std::size_t ex = 0; ex + 1 < bx.size(); ++ex) {
            const double x0 = bx[ex], x1 = bx[ex + 1];
            const double y0 = by[ey], y1 = by[ey + 1];
            const double half_area = 0.25 * (x1 - x0) * (y1 - y0);
            for (int qy = 0; qy < ny; ++qy)
                for (int qx = 0; qx < nx; ++qx) {
                    MaterialPoint p;
                    p.id = id++;
                    p.xi = Vector2d{0.5 * (x0 + x1) + 0.5 * (x1 - x0) * gx.nodes[static_cast<std::size_t>(qx)],
                                    0.5 * (y0 + y1) + 0.5 * (y1 - y0) * gy.nodes[static_cast<std::size_t>(qy)]};
                    const BasisEval2D ev = velocity_patch.geometry(p.xi);
                    const double det = ev.jacobian.determinant();
                    if (!(det > 0))
                        throw TanglingError("initial geometry map is inverted at a quadrature point");
                    p.x = ev.x;
                    p.W = gx.weights[static_cast<std::size_t>(qx)] *
                          gy.weights[static_cast<std::size_t>(qy)] * half_area * det;
                    p.pi = pi0;
                    points.push_back(p);
                }
        }
    return points;
}

void advect_material_points(
    std::vector<MaterialPoint>& points,
    const std::function<std::pair<Vector2d, Matrix2d>(const MaterialPoint&)>& velocity_field,
    double dt) {
    for (MaterialPoint& p : points) {
        const auto [v, L] = velocity_field(p);
        const double det = (Matrix2d::Identity() + dt * L).determinant();
        if (!(det > 0))
            throw StepTooLargeError("weight update det(I + L dt) <= 0 at point " +
                                    std::to_string(p.id));
        p.x += dt * v;
        p.W *= det;
        p.prev_L = L;
        p.prev_D = 0.5 * (L + L.transpose());
    }
}

void pull_back_material_points(std::vector<MaterialPoint>& points,
                               const FloatingPatch& velocity_patch) {
    const int rows = velocity_patch.num_normal();
    std::vector<double> guesses(static_cast<std::size_t>(rows));
    for (MaterialPoint& p : points) {
        std::fill(guesses.begin(), guesses.end(), std::numeric_limits<double>::quiet_NaN());
        if (p.cache_first_row >= 0)
            for (int m = 0; m <= velocity_patch.normal().order(); ++m) {
                const int j = p.cache_first_row + m;
                if (j < rows)
                    guesses[static_cast<std::size_t>(j)] =
                        p.parent_cache[static_cast<std::size_t>(m)];
            }
        try {
            p.xi = velocity_patch.geometry_invert(p.x, p.xi, guesses, 1e-10, p.id);
        } catch (const InversionError&) {
            // Accept points pushed marginally outside the domain image by
            // round-off; the parametric result is clamped to the boundary.
            p.xi = velocity_patch.geometry_invert(p.x, p.xi, guesses, 2e-9, p.id);
        }
        const int first = velocity_patch.normal().evaluate(p.xi[1], false).first_index;
        p.cache_first_row = first;
        for (int m = 0; m <= velocity_patch.normal().order(); ++m) {
            const int j = first + m;
            p.parent_cache[static_cast<std::size_t>(m)] =
                j < rows ? guesses[static_cast<std::size_t>(j)]
                         : std::numeric_limits<double>::quiet_NaN();
        }
    }
}

} // namespace fliga

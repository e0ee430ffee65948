#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "fliga/floating_patch.hpp"
#include "fliga/splines.hpp"

namespace fliga {

/// Time-invariant level function: its gradient steers how floating
/// regulation points follow the deformation.
struct LevelFunction {
    std::function<Vector2d(const Vector2d&)> gradient;
    std::string description;
};

/// Blending profile gamma(xi) in [0, 1] over the characteristic domain.
/// Zero at the domain bounds keeps the parametric domain rectangular; the
/// plateau [g1, g2] applies the ideal update unmodified.
struct BlendingFunction {
    std::function<double(double)> value;
    double g1 = 0;
    double g2 = 0;
    double a = 0;
    double b = 0;

    static BlendingFunction constant_one(double a, double b);
    /// 0 at a, linear ramp to 1 at a+2d, plateau, ramp down to 0 at b-d,
    /// zero beyond. Requires b - a > 4d so the two transitions cannot overlap.
    static BlendingFunction ramp_profile(double a, double b, double d);
};

/// Forward-Euler control net update c' = c + d*dt.
Eigen::MatrixX2d update_control_points(const Eigen::MatrixX2d& net,
                                       const Eigen::MatrixX2d& velocities, double dt);

/// Blended update of the floating regulation grid: the ideal per-point
/// increment grad(L)(c_ij) . d_ij * dt is mixed with the increment of the
/// central boundary control point of the matching edge. Open topology
/// re-pins the boundary rows uniformly and moves the domain bounds along
/// with the central column; periodic topology wraps the result.
RegulationGrid update_regulation_points(const FloatingPatch& patch,
                                        const Eigen::MatrixX2d& velocities,
                                        const LevelFunction& level,
                                        const BlendingFunction& blend, double dt);

/// Velocity column paired with pressure column l (0-based, L pressure and
/// J velocity columns): nearest proportional index.
int paired_velocity_column(int l, int L, int J);

/// Collocate the pressure regulation grid: for each pressure column l, the
/// pressure map interpolates the paired velocity map at the pressure-parent
/// Greville points. Periodic topology assembles the folded system with the
/// period carried to the right-hand side.
RegulationGrid collocate_pressure_regulation(const RegulationGrid& velocity_grid,
                                             const KnotVector& velocity_parent,
                                             const KnotVector& pressure_parent,
                                             int num_pressure_columns);

} // namespace fliga

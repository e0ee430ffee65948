#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "fliga/benchmarks/analytic.hpp"
#include "fliga/benchmarks/output.hpp"
#include "fliga/material_points.hpp"

namespace fliga {

struct CouetteRunOptions {
    SnapshotSink sink;      // optional; also receives the final (or last-good) state
    int snapshot_every = 0; // 0 = final snapshot only
    int error_every = 0;    // 0 = about 50 evaluations over the run
    double rotate_net = 0;  // rigid rotation of the initial net (radians);
                            // one element pitch exercises periodic folding
    std::function<Matrix2d(const Vector2d&)> initial_stress; // per-point polymeric
                            // stress at t=0 (e.g. a precomputed steady state);
                            // overrides the constant material pi0
};

struct CouetteRunResult {
    std::vector<ErrorSeriesRow> errors; // rows at the evaluated steps
    double weissenberg = 0;
    double measured_inner = 0; // radii at the last evaluation
    double measured_outer = 0;
    double max_abs_pressure = 0; // over points at the last evaluation
    int steps = 0;
    int newton_iterations = 0; // linear solves over the whole run
    MixedDiscretization disc;  // final discretization state
    Eigen::VectorXd u;         // last solved dof vector
    std::vector<MaterialPoint> points;
};

/// Time-step the ring flow: solve the current configuration (the polymeric
/// stress enters explicitly from the previous step), measure errors against
/// the analytic profile evaluated with the re-measured boundary radii, then
/// advect points, control net, and regulation grid with the solved field.
/// Velocity errors are relative L2 norms of the horizontal component by
/// material-point quadrature; the pressure error is relative for Oldroyd-B
/// and an RMS scaled by eta_s * Omega_O for the pressure-free Newtonian
/// flow. On tangling/inversion aborts the last good snapshot is emitted to
/// the sink before the error propagates.
CouetteRunResult run_taylor_couette(const TaylorCouetteConfig& cfg,
                                    const CouetteRunOptions& options = {});

/// Mesh-refinement study: run every mesh (characteristic x normal pressure
/// elements), average the velocity error over the trailing third of the
/// error series (the plateau), and fit the log-log slope against the
/// characteristic element size h = 1/mesh.
struct ConvergenceResult {
    std::vector<std::pair<int, int>> meshes;
    std::vector<double> h;
    std::vector<double> plateau_err;
    double slope = 0;
};
ConvergenceResult couette_convergence(const TaylorCouetteConfig& base,
                                      const std::vector<std::pair<int, int>>& meshes);

} // namespace fliga

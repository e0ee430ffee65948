#pragma once

#include <cstdint>
#include <vector>

#include "fliga/floating_patch.hpp"
#include "fliga/material_points.hpp"

namespace fliga {

/// Linear-reproduction study on the unit square: a 5x5 control net (5 - order
/// spans per direction), interior net points jittered off the Greville grid,
/// and a momentum-only Newtonian solve with the linear field v = v0 * x
/// prescribed on the whole boundary. The discrete space contains the exact
/// solution isoparametrically (dofs = v0 * control points), so any error
/// isolates the quadrature rule.
struct PatchTestConfig {
    int order = 1; // 1..3
    double quadrature_target = 100.0; // floating mode: requested cloud size
    std::uint64_t seed = 0;
    double eta_s = 50.0;
    double v0 = 1.0;

    void validate() const;
};

/// classical: identity row maps, (order+1)^2 Gauss points per parametric
/// element -- exact for the piecewise-polynomial integrand, so the solve
/// reproduces the linear field to rounding.
/// floating: interior regulation coefficients jittered independently per
/// row, so the composed basis is no longer piecewise polynomial in the
/// characteristic direction and the point cloud integrates it approximately.
enum class PatchQuadrature { classical, floating };

struct PatchTestResult {
    double log10_err_x = 0; // relative L2 error per velocity component,
    double log10_err_y = 0; // measured on an independent refined Gauss grid
    int points_used = 0;
    Eigen::MatrixX2d net;     // jittered control net (determinism checks)
    Eigen::VectorXd solution; // [d_x; d_y] dof vector
};

/// Jitter amplitude for both the control net and the regulation
/// coefficients: 20% of the mean control spacing 0.25. Small enough to keep
/// every row map strictly monotone (minimum Greville gap is 1/6).
inline constexpr double kPatchJitter = 0.05;

/// Build the jittered patch. Corners stay fixed, edge points move along
/// their edge, interior points move in both directions; the generator is
/// consumed at a fixed rate (two draws per net point, one per regulation
/// coefficient) so point classes cannot shift the stream. Classical mode
/// keeps the identity regulation; floating mode jitters the interior
/// coefficients of every row independently.
FloatingPatch make_patch(const PatchTestConfig& cfg, PatchQuadrature mode);

/// Quadrature cloud for the solve. Classical: per-element tensor Gauss.
/// Floating: each normal span draws its characteristic cell boundaries from
/// the map of a row it supports (parent breakpoints pushed through G_j),
/// refines each cell k-fold in the characteristic direction only (the normal
/// factor of the integrand is already integrated exactly), and fills the
/// subcells with an (order+1)^2 Gauss rule; k is chosen so the total
/// approaches `quadrature_target`.
std::vector<MaterialPoint> patch_quadrature_points(const FloatingPatch& patch,
                                                   PatchQuadrature mode,
                                                   double quadrature_target);

PatchTestResult run_patch_test(const PatchTestConfig& cfg, PatchQuadrature mode);

} // namespace fliga

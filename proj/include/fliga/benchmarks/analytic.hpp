#pragma once

#include <cstdint>
#include <utility>

#include "fliga/assembly.hpp"
#include "fliga/materials.hpp"

namespace fliga {

/// Taylor-Couette benchmark configuration. Mesh sizes count *pressure*
/// elements; the velocity mesh is twice as fine in both directions.
struct TaylorCouetteConfig {
    double R_I = 100.0;   // mm, control-point radius of the inner ring
    double R_O = 200.0;   // mm, control-point radius of the outer ring
    double Omega_O = 7.5; // 1/s, outer ring, clockwise
    double Omega_I = 0.0; // 1/s, inner ring
    int mesh_characteristic = 18; // pressure elements around the annulus
    int mesh_normal = 6;          // pressure elements across the gap
    int order = 2;
    double dt = 5.0e-5;     // s
    double rotations = 1.0; // outer-ring turns to simulate
    MaterialParams material;
    std::uint64_t seed = 0;     // echoed in reports; the run is deterministic
    int points_per_element = 0; // per direction on the velocity mesh; 0 = r+1
    double newton_tol = 1e-6;   // absolute residual norm; fields are O(1e3)

    void validate() const;
};

/// Table defaults: Newtonian solvent only, Oldroyd-B with the viscoelastic set.
TaylorCouetteConfig taylor_couette_newtonian();
TaylorCouetteConfig taylor_couette_oldroyd_b();

/// Circular Couette profile v_theta(r) = alpha r + beta / r.
struct CouetteCoefficients {
    double alpha = 0; // 1/s
    double beta = 0;  // mm^2/s
};
CouetteCoefficients couette_coefficients(double R_I, double R_O, double Omega_I,
                                         double Omega_O);

/// Clockwise ring flow v = (alpha + beta/r^2) (y, -x).
Vector2d couette_velocity(const Vector2d& x, const CouetteCoefficients& c);

/// Steady pressure with gauge p(R_O) = 0. The Newtonian flow is
/// pressure-free. For Oldroyd-B the hoop stress N1 = 2 lambda eta_p
/// gammadot^2 with gammadot = -2 beta / r^2 drives the radial momentum
/// balance dp/dr = -N1/r, giving
///   p(r) = 2 beta^2 lambda eta_p (1/r^4 - 1/R_O^4).
double couette_pressure(double r, const CouetteCoefficients& c,
                        const MaterialParams& material, double R_O);

/// Reference fields at polar coordinates (r, phi) for the current,
/// re-measured radii. Throws DomainError when r lies outside the annulus.
struct ReferenceSample {
    double v_x = 0;
    double pressure = 0;
};
ReferenceSample analytic_taylor_couette(const TaylorCouetteConfig& cfg, Model model,
                                        double r, double phi, double R_I_now,
                                        double R_O_now);

/// Wi = lambda Omega_O R_O / (R_O - R_I).
double weissenberg(const TaylorCouetteConfig& cfg);

/// Mean distances from the origin of the discrete inner (eta = eta_min) and
/// outer (eta = eta_max) boundary curves, sampled uniformly along the
/// characteristic domain. The spline boundary sits slightly inside the
/// control-point circles, so analytic references must use these radii.
std::pair<double, double> measure_radii(const FloatingPatch& velocity, int samples = 720);

/// Periodic annulus discretization: characteristic direction clockwise
/// (phi = -2 pi xi / 10), parent [0,10], parametric [0,10]x[0,2], control
/// radii linear in the normal Greville abscissae between R_I and R_O.
MixedDiscretization make_annulus(const TaylorCouetteConfig& cfg);

} // namespace fliga

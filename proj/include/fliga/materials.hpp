#pragma once

#include <array>

#include <Eigen/Dense>

namespace fliga {

using Eigen::Matrix2d;
using Eigen::Vector2d;

enum class Model { newtonian, oldroyd_b };

struct MaterialParams {
    Model model = Model::newtonian;
    double eta_s = 0;   // solvent viscosity (Pa s)
    double eta_p = 0;   // polymeric viscosity (Pa s)
    double lambda = 0;  // relaxation time (s)
    Matrix2d pi0 = Matrix2d::Zero();

    /// Throws ConfigError on invalid parameters or an unstable explicit
    /// step (dt/lambda > 1 for oldroyd_b).
    void validate(double dt) const;
};

/// Solvent stress tau_s = 2 eta_s D.
Matrix2d newtonian_stress(const Matrix2d& strain_rate, double eta_s);

/// Explicit polymeric stress update from the previous step's fields:
/// pi' = pi + (dt/lambda)(2 eta_p D - pi) + dt (L pi + pi L^T), re-symmetrized.
Matrix2d oldroydb_update(const Matrix2d& pi, const Matrix2d& prev_strain_rate,
                         const Matrix2d& prev_velocity_gradient, const MaterialParams& params,
                         double dt);

/// Total deviatoric stress: solvent part plus the (history-explicit)
/// polymeric part.
Matrix2d total_stress(const Matrix2d& strain_rate, const Matrix2d& pi,
                      const MaterialParams& params);

/// Per-control-point stress linearization: block k is the 2x2 matrix
/// d tau_ij / d d_{beta k} = eta_s (dB_beta/dx_j delta_ik + dB_beta/dx_i delta_jk).
/// Identical for both models; the polymeric stress carries no dependence on
/// the current unknowns.
std::array<Matrix2d, 2> stress_tangent(double eta_s, const Vector2d& basis_gradient);

} // namespace fliga

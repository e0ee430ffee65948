#include "fliga/materials.hpp"

#include <cmath>

#include "fliga/errors.hpp"

namespace fliga {

void MaterialParams::validate(double dt) const {
    if (!(eta_s > 0))
        throw ConfigError("solvent viscosity must be positive");
    if (model == Model::oldroyd_b) {
        if (eta_p < 0)
            throw ConfigError("polymeric viscosity must be non-negative");
        if (!(lambda > 0))
            throw ConfigError("relaxation time must be positive");
        if (dt / lambda > 1.0)
            throw ConfigError("explicit polymeric update requires dt/lambda <= 1");
    }
    if ((pi0 - pi0.transpose()).norm() > 1e-12 * std::max(1.0, pi0.norm()))
        throw ConfigError("initial polymeric stress must be symmetric");
}

Matrix2d newtonian_stress(const Matrix2d& strain_rate, double eta_s) {
    return 2.0 * eta_s * strain_rate;
}

Matrix2d oldroydb_update(const Matrix2d& pi, const Matrix2d& prev_strain_rate,
                         const Matrix2d& prev_velocity_gradient, const MaterialParams& params,
                         double dt) {
    const Matrix2d convected = prev_velocity_gradient * pi +
                               pi * prev_velocity_gradient.transpose();
    Matrix2d next = pi + dt / params.lambda * (2.0 * params.eta_p * prev_strain_rate - pi) +
                    dt * convected;
    next = 0.5 * (next + next.transpose()); // suppress round-off asymmetry
    return next;
}

Matrix2d total_stress(const Matrix2d& strain_rate, const Matrix2d& pi,
                      const MaterialParams& params) {
    Matrix2d tau = newtonian_stress(strain_rate, params.eta_s);
    if (params.model == Model::oldroyd_b)
        tau += pi;
    return tau;
}

std::array<Matrix2d, 2> stress_tangent(double eta_s, const Vector2d& basis_gradient) {
    std::array<Matrix2d, 2> blocks;
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                blocks[static_cast<std::size_t>(k)](i, j) =
                    eta_s * (basis_gradient[j] * (i == k ? 1.0 : 0.0) +
                             basis_gradient[i] * (j == k ? 1.0 : 0.0));
    return blocks;
}

} // namespace fliga

#include "fliga/benchmarks/probe.hpp"

#include "fliga/errors.hpp"

namespace fliga {

FieldSample sample_fields(const MixedDiscretization& disc, const Eigen::VectorXd& u,
                          const Vector2d& x, Vector2d& param_guess) {
    const DofLayout layout{disc.pressure.count(), disc.velocity.count()};
    if (u.size() != layout.size())
        throw ConfigError("state vector does not match the discretization");

    FieldSample out;
    out.param = disc.velocity.geometry_invert(x, param_guess);
    param_guess = out.param;

    const BasisEval2D vel = disc.velocity.evaluate(out.param);
    for (int k = 0; k < vel.count; ++k) {
        const int b = vel.indices[static_cast<std::size_t>(k)];
        const double w = vel.values[static_cast<std::size_t>(k)];
        out.v[0] += w * u[layout.dx(b)];
        out.v[1] += w * u[layout.dy(b)];
    }
    const BasisEval2D pre = disc.pressure.evaluate(out.param);
    for (int k = 0; k < pre.count; ++k)
        out.p += pre.values[static_cast<std::size_t>(k)] *
                 u[layout.q(pre.indices[static_cast<std::size_t>(k)])];
    return out;
}

} // namespace fliga

#include "fliga/updates.hpp"

#include <cmath>

#include <Eigen/LU>

#include "fliga/errors.hpp"

namespace fliga {

BlendingFunction BlendingFunction::constant_one(double a, double b) {
    BlendingFunction out;
    out.a = a;
    out.b = b;
    out.g1 = a;
    out.g2 = b;
    out.value = [](double) { return 1.0; };
    return out;
}

BlendingFunction BlendingFunction::ramp_profile(double a, double b, double d) {
    if (!(d > 0) || !(b - a > 4 * d))
        throw ConfigError("blending ramps require b - a > 4d with d > 0");
    BlendingFunction out;
    out.a = a;
    out.b = b;
    out.g1 = a + 2 * d;
    out.g2 = b - 2 * d;
    out.value = [a, b, d](double xi) {
        if (xi <= a)
            return 0.0;
        if (xi <= a + 2 * d)
            return (xi - a) / (2 * d);
        if (xi <= b - 2 * d)
            return 1.0;
        if (xi <= b - d)
            return (b - d - xi) / d;
        return 0.0;
    };
    return out;
}

Eigen::MatrixX2d update_control_points(const Eigen::MatrixX2d& net,
                                       const Eigen::MatrixX2d& velocities, double dt) {
    if (net.rows() != velocities.rows())
        throw ConfigError("control net and velocity matrix sizes differ");
    return net + dt * velocities;
}

namespace {

int central_boundary_column(int J) {
    return static_cast<int>(std::floor(0.5 * J + 0.5)) - 1; // round-half-up, 1-based -> 0-based
}

} // namespace

RegulationGrid update_regulation_points(const FloatingPatch& patch,
                                        const Eigen::MatrixX2d& velocities,
                                        const LevelFunction& level,
                                        const BlendingFunction& blend, double dt) {
    if (!patch.has_net())
        throw ConfigError("regulation update requires the control net");
    if (velocities.rows() != patch.count())
        throw ConfigError("velocity matrix does not match the control net");
    if (!level.gradient)
        throw ConfigError("level function has no gradient");

    const int I = patch.num_parent();
    const int J = patch.num_normal();
    const Eigen::MatrixX2d& net = patch.control_net();
    RegulationGrid grid = patch.regulation();

    Eigen::MatrixXd ideal(I, J);
    for (int j = 0; j < J; ++j)
        for (int i = 0; i < I; ++i) {
            const int g = patch.global_index(i, j);
            const Vector2d grad = level.gradient(net.row(g).transpose());
            if (!grad.allFinite())
                throw DomainError("level-function gradient not finite at a control point");
            ideal(i, j) = grad.dot(velocities.row(g).transpose()) * dt;
        }

    const int mid = central_boundary_column(J);
    const double star_low = ideal(0, mid);
    const double star_high = ideal(I - 1, mid);
    for (int j = 0; j < J; ++j)
        for (int i = 0; i < I; ++i) {
            const double gamma = blend.value(grid.h(i, j));
            const double star = 2 * (i + 1) <= I ? star_low : star_high;
            grid.h(i, j) += gamma * ideal(i, j) + (1.0 - gamma) * star;
        }

    if (patch.parent().topology() == Topology::open) {
        const double a_next = grid.h(0, mid);
        const double b_next = grid.h(I - 1, mid);
        if (!(b_next > a_next))
            throw DegenerateMapError("regulation update collapsed the parametric domain");
        for (int j = 0; j < J; ++j) {
            grid.h(0, j) = a_next;
            grid.h(I - 1, j) = b_next;
        }
        grid.a = a_next;
        grid.b = b_next;
    } else {
        const double period = grid.b - grid.a;
        for (int j = 0; j < J; ++j)
            for (int i = 0; i < I; ++i) {
                double t = std::fmod(grid.h(i, j) - grid.a, period);
                if (t < 0)
                    t += period;
                double w = grid.a + t;
                if (w >= grid.b)
                    w = grid.a;
                grid.h(i, j) = w;
            }
    }
    return grid;
}

int paired_velocity_column(int l, int L, int J) {
    if (l < 0 || l >= L || L < 1 || J < 1)
        throw ConfigError("invalid pressure/velocity column pairing");
    const double ratio = L > 1 ? static_cast<double>(l) / (L - 1) : 0.0;
    return static_cast<int>(std::floor(ratio * (J - 1) + 0.5));
}

RegulationGrid collocate_pressure_regulation(const RegulationGrid& velocity_grid,
                                             const KnotVector& velocity_parent,
                                             const KnotVector& pressure_parent,
                                             int num_pressure_columns) {
    if (velocity_parent.topology() != pressure_parent.topology())
        throw ConfigError("velocity and pressure parents must share a topology");
    const double scale = std::max({1.0, std::abs(velocity_parent.domain_start()),
                                   std::abs(velocity_parent.domain_end())});
    if (std::abs(velocity_parent.domain_start() - pressure_parent.domain_start()) > 1e-12 * scale ||
        std::abs(velocity_parent.domain_end() - pressure_parent.domain_end()) > 1e-12 * scale)
        throw ConfigError("velocity and pressure parents must share the parent domain");
    if (velocity_grid.h.rows() != velocity_parent.size())
        throw ConfigError("velocity grid rows do not match the velocity parent basis");
    const int J = static_cast<int>(velocity_grid.h.cols());
    const int L = num_pressure_columns;
    if (L < 1)
        throw ConfigError("pressure grid needs at least one column");

    const bool periodic = pressure_parent.topology() == Topology::periodic;
    const int K = pressure_parent.size();
    const std::vector<double> points = pressure_parent.identity_coefficients();
    const double period = velocity_grid.b - velocity_grid.a;

    // The collocation matrix depends only on the pressure parent: assemble and
    // factor once, reuse for every column's right-hand side.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(K, K);
    Eigen::VectorXd fold_correction = Eigen::VectorXd::Zero(K);
    for (int m = 0; m < K; ++m) {
        const SpanEvaluation se = pressure_parent.evaluate(points[static_cast<std::size_t>(m)], false);
        for (int n = 0; n < se.count; ++n) {
            const int k = se.first_index + n;
            const double v = se.values[static_cast<std::size_t>(n)];
            if (periodic) {
                A(m, pressure_parent.fold(k)) += v;
                if (k >= K)
                    fold_correction[m] += v * period;
            } else {
                A(m, k) += v;
            }
        }
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);

    RegulationGrid out;
    out.a = velocity_grid.a;
    out.b = velocity_grid.b;
    out.h.resize(K, L);

    std::vector<double> lift;
    for (int l = 0; l < L; ++l) {
        const int j = paired_velocity_column(l, L, J);
        if (periodic)
            lift = lift_periodic_column(velocity_grid.h.col(j), velocity_grid.a,
                                        velocity_grid.b, velocity_parent.order());
        Eigen::VectorXd rhs(K);
        for (int m = 0; m < K; ++m) {
            const SpanEvaluation se =
                velocity_parent.evaluate(points[static_cast<std::size_t>(m)], false);
            double g = 0;
            for (int n = 0; n < se.count; ++n) {
                const int k = se.first_index + n;
                g += se.values[static_cast<std::size_t>(n)] *
                     (periodic ? lift[static_cast<std::size_t>(k)] : velocity_grid.h(k, j));
            }
            rhs[m] = g - (periodic ? fold_correction[m] : 0.0);
        }
        Eigen::VectorXd s = lu.solve(rhs);
        if ((A * s - rhs).lpNorm<Eigen::Infinity>() > 1e-8 * scale)
            throw DegenerateMapError("pressure collocation system is singular");
        if (periodic) {
            for (int k = 0; k < K; ++k) {
                double t = std::fmod(s[k] - out.a, period);
                if (t < 0)
                    t += period;
                double w = out.a + t;
                if (w >= out.b)
                    w = out.a;
                s[k] = w;
            }
        } else {
            s[0] = out.a;
            s[K - 1] = out.b;
        }
        out.h.col(l) = s;
    }
    return out;
}

} // namespace fliga

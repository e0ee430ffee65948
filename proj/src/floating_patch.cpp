#include "fliga/floating_patch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fliga/errors.hpp"

namespace fliga {

namespace {

double wrap_into(double x, double a, double period) {
    double t = std::fmod(x - a, period);
    if (t < 0)
        t += period;
    double w = a + t;
    if (w >= a + period) // guard against rounding up to the right end
        w = a;
    return w;
}

} // namespace

std::vector<double> lift_periodic_column(const Eigen::VectorXd& column, double a, double b,
                                         int order) {
    const int n = static_cast<int>(column.size());
    if (n < order + 1)
        throw ConfigError("periodic regulation column shorter than order + 1");
    if (!(b > a))
        throw ConfigError("characteristic bounds must satisfy a < b");
    const double period = b - a;

    std::vector<double> wrapped(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        wrapped[static_cast<std::size_t>(i)] = wrap_into(column[i], a, period);

    // A valid cyclic monotone column has exactly one non-ascending step.
    int descent = -1;
    for (int i = 0; i < n; ++i) {
        const double cur = wrapped[static_cast<std::size_t>(i)];
        const double nxt = wrapped[static_cast<std::size_t>((i + 1) % n)];
        if (nxt <= cur) {
            if (descent >= 0)
                throw DegenerateMapError("periodic regulation column is not cyclically monotone");
            descent = i;
        }
    }
    if (descent < 0)
        throw DegenerateMapError("periodic regulation column has no wraparound step");

    const int start = (descent + 1) % n;
    std::vector<double> base(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        base[static_cast<std::size_t>(i)] =
            i < start ? wrapped[static_cast<std::size_t>(i)] - period
                      : wrapped[static_cast<std::size_t>(i)];
    for (int i = 0; i + 1 < n; ++i)
        if (!(base[static_cast<std::size_t>(i + 1)] > base[static_cast<std::size_t>(i)]))
            throw DegenerateMapError("periodic regulation column is not strictly ascending");

    std::vector<double> lift(static_cast<std::size_t>(n + order));
    for (int k = 0; k < n + order; ++k)
        lift[static_cast<std::size_t>(k)] =
            base[static_cast<std::size_t>(k % n)] + static_cast<double>(k / n) * period;
    return lift;
}

FloatingPatch::FloatingPatch(KnotVector parent, KnotVector normal)
    : parent_(std::move(parent)), normal_(std::move(normal)) {
    if (normal_.topology() != Topology::open)
        throw ConfigError("normal direction must use an open basis");
    set_regulation(identity_regulation());
}

RegulationGrid FloatingPatch::identity_regulation() const {
    RegulationGrid grid;
    grid.a = parent_.domain_start();
    grid.b = parent_.domain_end();
    const std::vector<double> coeffs = parent_.identity_coefficients();
    grid.h.resize(num_parent(), num_normal());
    for (int i = 0; i < num_parent(); ++i)
        grid.h.row(i).setConstant(coeffs[static_cast<std::size_t>(i)]);
    return grid;
}

void FloatingPatch::set_regulation(RegulationGrid grid) {
    if (grid.h.rows() != num_parent() || grid.h.cols() != num_normal())
        throw ConfigError("regulation grid shape does not match basis sizes");
    if (!(grid.b > grid.a))
        throw ConfigError("characteristic bounds must satisfy a < b");
    RegulationGrid old_grid = std::move(reg_);
    std::vector<std::vector<double>> old_lifts = std::move(lifts_);
    reg_ = std::move(grid);
    try {
        validate_regulation();
        build_lifts();
    } catch (...) {
        reg_ = std::move(old_grid);
        lifts_ = std::move(old_lifts);
        throw;
    }
}

void FloatingPatch::validate_regulation() {
    const int I = num_parent();
    const int J = num_normal();
    if (parent_.topology() == Topology::open) {
        const double scale = std::max({1.0, std::abs(reg_.a), std::abs(reg_.b)});
        for (int j = 0; j < J; ++j) {
            if (std::abs(reg_.h(0, j) - reg_.a) > 1e-10 * scale ||
                std::abs(reg_.h(I - 1, j) - reg_.b) > 1e-10 * scale)
                throw ConfigError("open regulation columns must be pinned to the bounds");
            // Snap so that map endpoints are exact regardless of update noise.
            reg_.h(0, j) = reg_.a;
            reg_.h(I - 1, j) = reg_.b;
        }
        // Positive map Jacobian, sampled inside every parent span.
        const std::vector<double> bp = parent_.breakpoints();
        const double mean_slope =
            (reg_.b - reg_.a) / (parent_.domain_end() - parent_.domain_start());
        const int samples = parent_.order() + 2;
        for (int j = 0; j < J; ++j)
            for (std::size_t s = 0; s + 1 < bp.size(); ++s)
                for (int q = 0; q < samples; ++q) {
                    const double t =
                        bp[s] + (bp[s + 1] - bp[s]) * (q + 0.5) / samples;
                    if (map_eval_open(j, t).jacobian <= 1e-12 * mean_slope)
                        throw DegenerateMapError("floating map has non-positive Jacobian");
                }
    }
    // Periodic validity (single descent, strict ascent) is established by
    // the lift construction in build_lifts().
}

void FloatingPatch::build_lifts() {
    lifts_.clear();
    if (parent_.topology() != Topology::periodic)
        return;
    lifts_.resize(static_cast<std::size_t>(num_normal()));
    for (int j = 0; j < num_normal(); ++j)
        lifts_[static_cast<std::size_t>(j)] =
            lift_periodic_column(reg_.h.col(j), reg_.a, reg_.b, parent_.order());
}

void FloatingPatch::set_control_net(Eigen::MatrixX2d net) {
    if (net.rows() != count())
        throw ConfigError("control net row count does not match basis size");
    net_ = std::move(net);
}

MapEval FloatingPatch::map_eval_open(int j, double t) const {
    const SpanEvaluation se = parent_.evaluate(t);
    MapEval out;
    for (int m = 0; m < se.count; ++m) {
        const double h = reg_.h(se.first_index + m, j);
        out.xi += se.values[static_cast<std::size_t>(m)] * h;
        out.jacobian += se.derivatives[static_cast<std::size_t>(m)] * h;
    }
    return out;
}

MapEval FloatingPatch::map_eval_lifted(int j, double t_cover) const {
    const double tw = parent_.wrap(t_cover);
    const double pt = parent_.period();
    const double branches = std::nearbyint((t_cover - tw) / pt);
    const SpanEvaluation se = parent_.evaluate(tw);
    const std::vector<double>& lift = lifts_[static_cast<std::size_t>(j)];
    MapEval out;
    for (int m = 0; m < se.count; ++m) {
        const double h = lift[static_cast<std::size_t>(se.first_index + m)];
        out.xi += se.values[static_cast<std::size_t>(m)] * h;
        out.jacobian += se.derivatives[static_cast<std::size_t>(m)] * h;
    }
    out.xi += branches * (reg_.b - reg_.a);
    return out;
}

MapEval FloatingPatch::map_eval(int j, double t) const {
    if (j < 0 || j >= num_normal())
        throw ConfigError("normal row index out of range");
    if (parent_.topology() == Topology::open)
        return map_eval_open(j, t);
    MapEval out = map_eval_lifted(j, t);
    out.xi = wrap_into(out.xi, reg_.a, reg_.b - reg_.a);
    return out;
}

double FloatingPatch::map_invert(int j, double xi, std::optional<double> guess) const {
    if (j < 0 || j >= num_normal())
        throw ConfigError("normal row index out of range");
    const double scale = std::max({1.0, std::abs(reg_.a), std::abs(reg_.b)});
    const double tol = 1e-12 * scale;
    const bool periodic = parent_.topology() == Topology::periodic;
    const double pa = parent_.domain_start();
    const double pb = parent_.domain_end();

    double target = xi;
    double lo, hi, t;
    if (periodic) {
        target = wrap_into(xi, reg_.a, reg_.b - reg_.a);
        if (guess && std::isfinite(*guess)) {
            t = *guess;
        } else if (pa == reg_.a && pb == reg_.b) {
            t = target; // identity-like setups invert exactly in one step
        } else {
            t = pa + (target - reg_.a) * (pb - pa) / (reg_.b - reg_.a);
        }
        lo = t - (pb - pa);
        hi = t + (pb - pa);
    } else {
        if (xi < reg_.a - 1e-9 * scale || xi > reg_.b + 1e-9 * scale)
            throw DomainError("characteristic coordinate outside the map range");
        target = std::clamp(xi, reg_.a, reg_.b);
        lo = pa;
        hi = pb;
        if (guess && std::isfinite(*guess)) {
            t = std::clamp(*guess, lo, hi);
        } else if (pa == reg_.a && pb == reg_.b) {
            t = target;
        } else {
            t = pa + (target - reg_.a) * (pb - pa) / (reg_.b - reg_.a);
        }
    }

    // Safeguarded Newton on a strictly increasing map: every iterate tightens
    // the bracket, out-of-bracket steps fall back to bisection.
    MapEval me = periodic ? map_eval_lifted(j, t) : map_eval_open(j, t);
    if (periodic) {
        // Move the target onto the cover branch nearest the starting point.
        const double period_xi = reg_.b - reg_.a;
        target += period_xi * std::nearbyint((me.xi - target) / period_xi);
    }
    for (int it = 0; it < 100; ++it) {
        const double f = me.xi - target;
        if (std::abs(f) <= tol)
            return periodic ? parent_.wrap(t) : t;
        if (f < 0)
            lo = t;
        else
            hi = t;
        double tn = me.jacobian > 0 ? t - f / me.jacobian : lo;
        if (!(tn > lo && tn < hi))
            tn = 0.5 * (lo + hi);
        t = tn;
        me = periodic ? map_eval_lifted(j, t) : map_eval_open(j, t);
    }
    throw InversionError("floating map inversion did not converge");
}

const std::vector<double>& FloatingPatch::lifted_column(int j) const {
    if (parent_.topology() != Topology::periodic)
        throw ConfigError("lifted columns exist only for periodic topology");
    return lifts_[static_cast<std::size_t>(j)];
}

std::vector<double> FloatingPatch::shifted_column_for(int j, double xi) const {
    if (parent_.topology() != Topology::periodic)
        throw ConfigError("shifted columns exist only for periodic topology");
    const double t = map_invert(j, xi);
    const SpanEvaluation se = parent_.evaluate(parent_.wrap(t));
    const std::vector<double>& lift = lifts_[static_cast<std::size_t>(j)];
    std::vector<double> out(static_cast<std::size_t>(num_parent()));
    for (int i = 0; i < num_parent(); ++i)
        out[static_cast<std::size_t>(i)] = reg_.h(i, j);
    for (int m = 0; m < se.count; ++m) {
        const int k = se.first_index + m;
        out[static_cast<std::size_t>(parent_.fold(k))] = lift[static_cast<std::size_t>(k)];
    }
    return out;
}

BasisEval2D FloatingPatch::evaluate(const Vector2d& param, std::span<double> row_guesses) const {
    if (!row_guesses.empty() && static_cast<int>(row_guesses.size()) != num_normal())
        throw ConfigError("row guess buffer size must equal the normal function count");

    BasisEval2D out;
    out.point = param;
    const double xi = param[0];
    const double eta = param[1];

    const SpanEvaluation ne = normal_.evaluate(eta);
    out.first_row = ne.first_index;
    out.row_count = ne.count;

    const int I = num_parent();
    const bool periodic = parent_.topology() == Topology::periodic;
    const bool with_net = has_net();

    Matrix2d jac = Matrix2d::Zero();
    Vector2d x{0, 0};
    int n_entries = 0;
    for (int m = 0; m < ne.count; ++m) {
        const int j = ne.first_index + m;
        std::optional<double> guess;
        if (!row_guesses.empty() && std::isfinite(row_guesses[static_cast<std::size_t>(j)]))
            guess = row_guesses[static_cast<std::size_t>(j)];
        const double t = map_invert(j, xi, guess);
        if (!row_guesses.empty())
            row_guesses[static_cast<std::size_t>(j)] = t;
        out.parent_coords[static_cast<std::size_t>(m)] = t;

        const SpanEvaluation pe = parent_.evaluate(t);
        double map_jac = 0;
        if (periodic) {
            const std::vector<double>& lift = lifts_[static_cast<std::size_t>(j)];
            for (int n = 0; n < pe.count; ++n)
                map_jac += pe.derivatives[static_cast<std::size_t>(n)] *
                           lift[static_cast<std::size_t>(pe.first_index + n)];
        } else {
            for (int n = 0; n < pe.count; ++n)
                map_jac += pe.derivatives[static_cast<std::size_t>(n)] *
                           reg_.h(pe.first_index + n, j);
        }
        if (!(map_jac > 0))
            throw DegenerateMapError("floating map Jacobian is not positive");

        const double nv = ne.values[static_cast<std::size_t>(m)];
        const double nd = ne.derivatives[static_cast<std::size_t>(m)];
        for (int n = 0; n < pe.count; ++n) {
            const int i = periodic ? parent_.fold(pe.first_index + n) : pe.first_index + n;
            const double pv = pe.values[static_cast<std::size_t>(n)];
            const double pd = pe.derivatives[static_cast<std::size_t>(n)];
            const int g = j * I + i;
            out.indices[static_cast<std::size_t>(n_entries)] = g;
            out.values[static_cast<std::size_t>(n_entries)] = pv * nv;
            const Vector2d gp{pd / map_jac * nv, pv * nd};
            out.grad_param[static_cast<std::size_t>(n_entries)] = gp;
            if (with_net) {
                const Vector2d c = net_.row(g).transpose();
                x += pv * nv * c;
                jac.col(0) += gp[0] * c;
                jac.col(1) += gp[1] * c;
            }
            ++n_entries;
        }
    }
    out.count = n_entries;
    if (with_net) {
        out.x = x;
        out.jacobian = jac;
        out.has_geometry = true;
    }
    return out;
}

BasisEval2D FloatingPatch::geometry(const Vector2d& param, std::span<double> row_guesses) const {
    if (!has_net())
        throw ConfigError("geometry evaluation requires a control net");
    return evaluate(param, row_guesses);
}

Vector2d FloatingPatch::geometry_invert(const Vector2d& x, const Vector2d& guess,
                                        std::span<double> row_guesses, double tol,
                                        int point_id) const {
    if (!has_net())
        throw ConfigError("geometry inversion requires a control net");
    const bool periodic = parent_.topology() == Topology::periodic;
    const double tol_eff = tol * std::max(1.0, x.norm());

    auto clamp_param = [&](Vector2d p) {
        if (periodic)
            p[0] = wrap_into(p[0], reg_.a, reg_.b - reg_.a);
        else
            p[0] = std::clamp(p[0], reg_.a, reg_.b);
        p[1] = std::clamp(p[1], eta_min(), eta_max());
        return p;
    };

    Vector2d p = clamp_param(guess);
    BasisEval2D ev = evaluate(p, row_guesses);
    double res = (ev.x - x).norm();
    for (int it = 0; it < 50; ++it) {
        if (res <= tol_eff)
            return p;
        const double det = ev.jacobian.determinant();
        if (std::abs(det) <= 1e-14 * std::max(1.0, ev.jacobian.squaredNorm()))
            throw InversionError("geometry inversion hit a singular Jacobian", point_id);
        const Vector2d step = ev.jacobian.inverse() * (x - ev.x);
        double alpha = 1.0;
        bool accepted = false;
        for (int back = 0; back < 12; ++back) {
            const Vector2d pn = clamp_param(p + alpha * step);
            const BasisEval2D en = evaluate(pn, row_guesses);
            const double rn = (en.x - x).norm();
            if (rn < res || rn <= tol_eff) {
                p = pn;
                ev = en;
                res = rn;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted)
            throw InversionError("geometry inversion stalled", point_id);
    }
    if (res <= tol_eff)
        return p;
    throw InversionError("geometry inversion did not converge", point_id);
}

void FloatingPatch::physical_gradients(BasisEval2D& eval) {
    if (!eval.has_geometry)
        throw ConfigError("physical gradients need a geometry Jacobian");
    physical_gradients(eval, eval.jacobian);
}

void FloatingPatch::physical_gradients(BasisEval2D& eval, const Matrix2d& jacobian) {
    const double det = jacobian.determinant();
    if (det <= 1e-12 * std::max(1.0, jacobian.squaredNorm()))
        throw TanglingError("geometry Jacobian is degenerate or orientation-reversing");
    const double inv = 1.0 / det;
    // inverse transpose of [[j00, j01], [j10, j11]]
    const double a = jacobian(1, 1) * inv, b = -jacobian(1, 0) * inv;
    const double c = -jacobian(0, 1) * inv, d = jacobian(0, 0) * inv;
    for (int k = 0; k < eval.count; ++k) {
        const Vector2d& g = eval.grad_param[static_cast<std::size_t>(k)];
        eval.grad_phys[static_cast<std::size_t>(k)] = Vector2d{a * g[0] + b * g[1],
                                                               c * g[0] + d * g[1]};
    }
    eval.has_physical = true;
}

std::vector<int> FloatingPatch::normal_edge_indices(bool max_edge) const {
    const int j = max_edge ? num_normal() - 1 : 0;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(num_parent()));
    for (int i = 0; i < num_parent(); ++i)
        out.push_back(global_index(i, j));
    return out;
}

std::vector<int> FloatingPatch::parent_edge_indices(bool max_edge) const {
    if (parent_.topology() != Topology::open)
        throw ConfigError("periodic topology has no characteristic edges");
    const int i = max_edge ? num_parent() - 1 : 0;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(num_normal()));
    for (int j = 0; j < num_normal(); ++j)
        out.push_back(global_index(i, j));
    return out;
}

} // namespace fliga

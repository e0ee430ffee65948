#include "fliga/splines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace fliga {

namespace {

void check_order(int order) {
    if (order < 0 || order > kMaxOrder)
        throw ConfigError("unsupported order " + std::to_string(order));
}

} // namespace

KnotVector KnotVector::from_knots(std::vector<double> knots, int order) {
    check_order(order);
    const int m = static_cast<int>(knots.size());
    const int n = m - order - 1;
    if (n < order + 1)
        throw ConfigError("knot vector too short for order " + std::to_string(order));
    for (int i = 0; i + 1 < m; ++i)
        if (knots[i + 1] < knots[i] - kKnotTol)
            throw ConfigError("knot vector not non-decreasing");
    for (int i = 0; i < order; ++i) {
        if (std::abs(knots[i + 1] - knots[i]) > kKnotTol ||
            std::abs(knots[m - 1 - i] - knots[m - 2 - i]) > kKnotTol)
            throw ConfigError("open knot vector must repeat end knots order+1 times");
    }
    if (knots[m - 1] - knots[0] <= kKnotTol)
        throw ConfigError("degenerate knot vector span");

    KnotVector kv;
    kv.order_ = order;
    kv.n_funcs_ = n;
    kv.topology_ = Topology::open;
    kv.domain_start_ = knots[order];
    kv.domain_end_ = knots[m - 1 - order];
    kv.knots_ = std::move(knots);
    return kv;
}

KnotVector KnotVector::open_uniform(double a, double b, int spans, int order) {
    check_order(order);
    if (spans < 1 || b <= a) throw ConfigError("invalid open_uniform parameters");
    std::vector<double> knots;
    knots.reserve(static_cast<std::size_t>(spans + 2 * order + 1));
    for (int i = 0; i < order; ++i) knots.push_back(a);
    for (int i = 0; i <= spans; ++i)
        knots.push_back(a + (b - a) * static_cast<double>(i) / spans);
    for (int i = 0; i < order; ++i) knots.push_back(b);
    return from_knots(std::move(knots), order);
}

KnotVector KnotVector::periodic_uniform(double a, double b, int spans, int order) {
    check_order(order);
    if (b <= a) throw ConfigError("invalid periodic interval");
    if (spans < order + 1)
        throw ConfigError("periodic basis needs at least order+1 spans");
    const double delta = (b - a) / spans;
    KnotVector kv;
    kv.order_ = order;
    kv.n_funcs_ = spans;
    kv.topology_ = Topology::periodic;
    kv.domain_start_ = a;
    kv.domain_end_ = b;
    // Unrolled knots t_j = a + (j - r)*delta, j = 0 .. spans + 2r, so that the
    // unfolded function k (k = 0 .. spans + r - 1) lives on knots k .. k+r+1.
    kv.knots_.resize(static_cast<std::size_t>(spans + 2 * order + 1));
    for (int j = 0; j <= spans + 2 * order; ++j)
        kv.knots_[static_cast<std::size_t>(j)] = a + (j - order) * delta;
    return kv;
}

int KnotVector::unfolded_size() const {
    return topology_ == Topology::periodic ? n_funcs_ + order_ : n_funcs_;
}

double KnotVector::period() const {
    if (topology_ != Topology::periodic)
        throw ConfigError("period() requires periodic topology");
    return domain_end_ - domain_start_;
}

int KnotVector::fold(int unfolded_index) const {
    if (topology_ != Topology::periodic) return unfolded_index;
    int p = unfolded_index % n_funcs_;
    return p < 0 ? p + n_funcs_ : p;
}

double KnotVector::wrap(double xi) const {
    if (topology_ != Topology::periodic) return xi;
    const double p = period();
    double t = std::fmod(xi - domain_start_, p);
    if (t < 0) t += p;
    return domain_start_ + t;
}

int KnotVector::find_span(double xi) const {
    // Valid spans are [knots_[s], knots_[s+1]) for s in [order, last), where
    // last = num_knots - order - 2 for open and spans + order - 1 periodic.
    const int lo = order_;
    const int hi = static_cast<int>(knots_.size()) - order_ - 2;
    if (xi >= knots_[static_cast<std::size_t>(hi + 1)]) {
        // Right-end closure: the last non-empty span.
        int s = hi;
        while (s > lo && knots_[static_cast<std::size_t>(s + 1)] - knots_[static_cast<std::size_t>(s)] <= kKnotTol)
            --s;
        return s;
    }
    auto it = std::upper_bound(knots_.begin() + lo, knots_.begin() + hi + 2, xi);
    int s = static_cast<int>(it - knots_.begin()) - 1;
    return std::clamp(s, lo, hi);
}

SpanEvaluation KnotVector::evaluate(double xi, bool with_derivatives) const {
    if (topology_ == Topology::periodic) {
        xi = wrap(xi);
    } else {
        const double tol = 1e-12 * std::max(1.0, std::abs(domain_end_ - domain_start_));
        if (xi < domain_start_ - tol || xi > domain_end_ + tol)
            throw DomainError("evaluation point " + std::to_string(xi) + " outside basis domain");
        xi = std::clamp(xi, domain_start_, domain_end_);
    }

    const int span = find_span(xi);
    const int r = order_;
    SpanEvaluation out;
    out.first_index = span - r;
    out.count = r + 1;

    // Triangular Cox-de Boor table; knots within kKnotTol are repeated, in
    // which case the 0/0 term drops out.
    std::array<double, kMaxOrder + 1> left{};
    std::array<double, kMaxOrder + 1> right{};
    std::array<double, kMaxOrder + 1> lower{}; // degree r-1 row, for derivatives
    auto& N = out.values;
    N[0] = 1.0;
    for (int d = 1; d <= r; ++d) {
        if (with_derivatives && d == r)
            std::copy(N.begin(), N.begin() + r, lower.begin());
        left[d] = xi - knots_[static_cast<std::size_t>(span + 1 - d)];
        right[d] = knots_[static_cast<std::size_t>(span + d)] - xi;
        double saved = 0.0;
        for (int k = 0; k < d; ++k) {
            const double den = right[k + 1] + left[d - k];
            const double temp = den > kKnotTol ? N[static_cast<std::size_t>(k)] / den : 0.0;
            N[static_cast<std::size_t>(k)] = saved + right[k + 1] * temp;
            saved = left[d - k] * temp;
        }
        N[static_cast<std::size_t>(d)] = saved;
    }

    if (with_derivatives && r > 0) {
        // N'_{i,r} = r * (N_{i,r-1}/(t_{i+r}-t_i) - N_{i+1,r-1}/(t_{i+r+1}-t_{i+1}))
        for (int k = 0; k <= r; ++k) {
            const int i = span - r + k;
            double a = 0.0, b = 0.0;
            if (k >= 1) {
                const double den = knots_[static_cast<std::size_t>(i + r)] - knots_[static_cast<std::size_t>(i)];
                if (den > kKnotTol) a = lower[static_cast<std::size_t>(k - 1)] / den;
            }
            if (k <= r - 1) {
                const double den = knots_[static_cast<std::size_t>(i + r + 1)] - knots_[static_cast<std::size_t>(i + 1)];
                if (den > kKnotTol) b = lower[static_cast<std::size_t>(k)] / den;
            }
            out.derivatives[static_cast<std::size_t>(k)] = r * (a - b);
        }
    }
    return out;
}

std::vector<double> KnotVector::greville() const {
    if (topology_ != Topology::open)
        throw ConfigError("greville() requires open topology");
    if (order_ < 1)
        throw ConfigError("greville() requires order >= 1");
    std::vector<double> g(static_cast<std::size_t>(n_funcs_));
    for (int i = 0; i < n_funcs_; ++i) {
        double s = 0.0;
        for (int k = 1; k <= order_; ++k) s += knots_[static_cast<std::size_t>(i + k)];
        g[static_cast<std::size_t>(i)] = s / order_;
    }
    return g;
}

std::vector<double> KnotVector::identity_coefficients() const {
    if (order_ < 1)
        throw ConfigError("identity coefficients require order >= 1");
    if (topology_ == Topology::open) return greville();
    std::vector<double> g(static_cast<std::size_t>(n_funcs_));
    for (int i = 0; i < n_funcs_; ++i) {
        double s = 0.0;
        for (int k = 1; k <= order_; ++k) s += knots_[static_cast<std::size_t>(i + k)];
        g[static_cast<std::size_t>(i)] = wrap(s / order_);
    }
    return g;
}

std::vector<double> KnotVector::breakpoints() const {
    std::vector<double> bp;
    const int lo = order_;
    const int hi = static_cast<int>(knots_.size()) - order_ - 1;
    for (int i = lo; i <= hi; ++i) {
        const double t = knots_[static_cast<std::size_t>(i)];
        if (bp.empty() || t - bp.back() > kKnotTol) bp.push_back(t);
    }
    return bp;
}

GaussRule gauss_legendre(int n) {
    if (n < 1 || n > 16) throw ConfigError("gauss_legendre supports 1..16 points");
    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    // Newton iteration on P_n from Chebyshev initial guesses; symmetric pairs.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[static_cast<std::size_t>(i)] = -x;
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return rule;
}

} // namespace fliga

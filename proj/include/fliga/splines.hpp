#pragma once

#include <array>
#include <vector>

#include "fliga/errors.hpp"

namespace fliga {

enum class Topology { open, periodic };

/// Maximum supported polynomial order of any basis in this toolkit.
inline constexpr int kMaxOrder = 7;

/// Knots closer than this are treated as repeated (0/0 := 0 in the recursion).
inline constexpr double kKnotTol = 1e-14;

/// Values and first derivatives of the r+1 basis functions supported on the
/// span containing the query point. `first_index` is the index of the first
/// supported function; for periodic bases it is an *unfolded* index and must
/// be folded through KnotVector::fold() to obtain the periodic function index.
struct SpanEvaluation {
    int first_index = 0;
    int count = 0;
    std::array<double, kMaxOrder + 1> values{};
    std::array<double, kMaxOrder + 1> derivatives{};
};

/// Open (clamped) or periodic univariate B-spline basis of order r, evaluated
/// by the Cox-de Boor recursion with the 0/0 := 0 convention. Spans are
/// half-open [t_i, t_{i+1}) except at the right end of the domain, which is
/// closed. Periodic bases are stored unrolled: the fundamental interval is
/// extended by r knot spacings on both sides and function indices fold
/// modulo the function count.
class KnotVector {
public:
    /// Open basis from an explicit clamped knot vector (validated: ordering,
    /// end multiplicities r+1, at least r+1 functions).
    static KnotVector from_knots(std::vector<double> knots, int order);

    /// Open uniform basis with `spans` equal elements on [a, b].
    static KnotVector open_uniform(double a, double b, int spans, int order);

    /// Uniform periodic basis with `spans` elements on the fundamental
    /// interval [a, b]; the function count equals `spans`.
    static KnotVector periodic_uniform(double a, double b, int spans, int order);

    int order() const { return order_; }
    Topology topology() const { return topology_; }

    /// Number of (distinct, folded) basis functions.
    int size() const { return n_funcs_; }

    /// Number of unfolded functions overlapping the fundamental domain:
    /// size() for open, size() + order() for periodic.
    int unfolded_size() const;

    double domain_start() const { return domain_start_; }
    double domain_end() const { return domain_end_; }
    double period() const; // periodic only

    /// Fold an unfolded function index into [0, size()).
    int fold(int unfolded_index) const;

    /// Wrap a parametric coordinate into the fundamental interval
    /// [domain_start, domain_end). Identity for open topology.
    double wrap(double xi) const;

    /// Evaluate the supported functions (and first derivatives) at xi.
    /// Open topology throws DomainError outside [domain_start, domain_end].
    /// Periodic queries are wrapped first.
    SpanEvaluation evaluate(double xi, bool with_derivatives = true) const;

    /// Greville abscissae (mean of r consecutive interior knots per
    /// function). Open topology with r >= 1 only.
    std::vector<double> greville() const;

    /// Coefficients h_i with sum_i h_i N_i(xi) = xi on the whole domain:
    /// Greville abscissae for open bases, Greville of the unrolled basis
    /// wrapped into the fundamental interval for periodic ones.
    std::vector<double> identity_coefficients() const;

    /// Distinct element boundaries of the fundamental domain, ascending.
    std::vector<double> breakpoints() const;

    /// Raw knot value (unrolled storage for periodic bases).
    double knot(int i) const { return knots_[static_cast<std::size_t>(i)]; }
    int num_knots() const { return static_cast<int>(knots_.size()); }

private:
    KnotVector() = default;

    int find_span(double xi) const;

    std::vector<double> knots_;
    int order_ = 0;
    int n_funcs_ = 0;
    Topology topology_ = Topology::open;
    double domain_start_ = 0;
    double domain_end_ = 0;
};

/// Gauss-Legendre nodes and weights on [-1, 1], n in [1, 16].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussRule gauss_legendre(int n);

} // namespace fliga

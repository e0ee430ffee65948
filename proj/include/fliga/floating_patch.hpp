#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fliga/splines.hpp"

namespace fliga {

using Eigen::Matrix2d;
using Eigen::Vector2d;

/// Floating regulation grid: coefficients h(i, j) of the per-normal-row maps
/// xi = G_j(t) = sum_i h(i,j) N_i(t), plus the current characteristic bounds
/// [a, b] of the parametric domain.
struct RegulationGrid {
    Eigen::MatrixXd h; // I x J
    double a = 0;
    double b = 0;
};

/// Result of evaluating the 2D floating basis at a parametric point.
/// Entries run over the tensor product of supported characteristic and
/// normal functions; `indices` are global function indices b = j*I + i.
/// Arrays are left uninitialized beyond `count` / `row_count` (hot path).
struct BasisEval2D {
    static constexpr int kCap = (kMaxOrder + 1) * (kMaxOrder + 1);

    int count = 0;
    std::array<int, kCap> indices;
    std::array<double, kCap> values;
    std::array<Vector2d, kCap> grad_param;
    std::array<Vector2d, kCap> grad_phys;
    bool has_physical = false;

    Vector2d point{0, 0};            // parametric query
    int first_row = 0;               // first supported normal row
    int row_count = 0;
    std::array<double, kMaxOrder + 1> parent_coords; // per supported row

    Vector2d x{0, 0};                // geometry map value (if net present)
    Matrix2d jacobian = Matrix2d::Zero();
    bool has_geometry = false;
};

/// Floating map evaluation: characteristic coordinate and scalar Jacobian.
struct MapEval {
    double xi = 0;
    double jacobian = 0;
};

/// A floating tensor-product B-spline patch: parent basis (characteristic
/// direction, open or periodic), normal basis (open), regulation grid, and an
/// optional control net. The composed basis at (xi, eta) is
///   B_{ij}(xi, eta) = N_i(G_j^{-1}(xi)) * M_j(eta),
/// one parent-coordinate inversion per supported normal row.
class FloatingPatch {
public:
    FloatingPatch(KnotVector parent, KnotVector normal);

    const KnotVector& parent() const { return parent_; }
    const KnotVector& normal() const { return normal_; }

    int num_parent() const { return parent_.size(); }   // I
    int num_normal() const { return normal_.size(); }   // J
    int count() const { return num_parent() * num_normal(); }
    int global_index(int i, int j) const { return j * num_parent() + i; }

    /// Replace the regulation grid. Validates shape, bound pinning (open
    /// topology: h(0,j) = a and h(I-1,j) = b for every j), and strict map
    /// monotonicity; rebuilds the periodic column lifts.
    void set_regulation(RegulationGrid grid);
    const RegulationGrid& regulation() const { return reg_; }

    /// Regulation grid reproducing the identity map xi = t on [a, b] =
    /// parent domain (Greville coefficients replicated across columns).
    RegulationGrid identity_regulation() const;

    double domain_start() const { return reg_.a; }
    double domain_end() const { return reg_.b; }
    double eta_min() const { return normal_.domain_start(); }
    double eta_max() const { return normal_.domain_end(); }

    /// Control net, one row per global index b = j*I + i. May be empty
    /// (pressure patches share the velocity patch geometry).
    void set_control_net(Eigen::MatrixX2d net);
    const Eigen::MatrixX2d& control_net() const { return net_; }
    bool has_net() const { return net_.rows() == count(); }

    // -- floating maps ------------------------------------------------------

    /// Evaluate the floating map of normal row j at parent coordinate t.
    /// Periodic topology wraps both the query and the returned coordinate
    /// into the fundamental intervals.
    MapEval map_eval(int j, double t) const;

    /// Invert the floating map of row j: find t with G_j(t) = xi. Residual
    /// tolerance 1e-12; Newton from the guess (or from xi itself), bisection
    /// fallback when Newton leaves the domain or no guess converges.
    double map_invert(int j, double xi, std::optional<double> guess = std::nullopt) const;

    /// Periodic only: strictly ascending lift of column j over the unfolded
    /// function window (size I + r); coefficient of unfolded function k is
    /// lift[k], and lift[k + I] = lift[k] + (b - a) by construction.
    const std::vector<double>& lifted_column(int j) const;

    /// Periodic only: the lambda-shifted column for a query coordinate, i.e.
    /// the I coefficients (each the stored value plus a multiple of b-a)
    /// whose cyclic differences are in (0, b-a) and whose map value at the
    /// pre-image of xi equals xi. Entry i corresponds to folded function i.
    std::vector<double> shifted_column_for(int j, double xi) const;

    // -- basis evaluation ----------------------------------------------------

    /// Evaluate all supported basis functions at the parametric point.
    /// `row_guesses`, when provided, must have size num_normal(); entries are
    /// per-row parent-coordinate guesses (NaN = none) and are refreshed with
    /// the computed pre-images. Computes the geometry map and its Jacobian
    /// when a control net is present.
    BasisEval2D evaluate(const Vector2d& param, std::span<double> row_guesses = {}) const;

    /// Geometry map only (position and Jacobian) at a parametric point.
    BasisEval2D geometry(const Vector2d& param, std::span<double> row_guesses = {}) const;

    /// Invert the geometry map: parametric coordinates of physical point x.
    /// Newton with clamping to the parametric domain (at most 3 clamps),
    /// residual tolerance `tol`. Throws InversionError on failure.
    Vector2d geometry_invert(const Vector2d& x, const Vector2d& guess,
                             std::span<double> row_guesses = {},
                             double tol = 1e-10, int point_id = -1) const;

    /// Fill grad_phys from grad_param using the evaluation's own geometry
    /// Jacobian (or an explicitly supplied one, e.g. the velocity patch
    /// Jacobian for pressure-basis evaluations).
    static void physical_gradients(BasisEval2D& eval);
    static void physical_gradients(BasisEval2D& eval, const Matrix2d& jacobian);

    /// Global indices of a normal-boundary row (j = 0 or j = J-1).
    std::vector<int> normal_edge_indices(bool max_edge) const;
    /// Global indices of a characteristic edge (open topology only).
    std::vector<int> parent_edge_indices(bool max_edge) const;

private:
    void validate_regulation(); // snaps open boundary coefficients exactly
    void build_lifts();
    MapEval map_eval_open(int j, double t) const;
    MapEval map_eval_lifted(int j, double t_cover) const; // periodic, universal cover

    KnotVector parent_;
    KnotVector normal_;
    RegulationGrid reg_;
    Eigen::MatrixX2d net_;
    std::vector<std::vector<double>> lifts_; // per column, periodic only
};

/// Strictly ascending lift of a periodic regulation column stored in
/// [a, b): detects the single cyclic descent and extends by `order` wrapped
/// entries shifted by the period. Throws DegenerateMapError if the column is
/// not a valid cyclic monotone sequence.
std::vector<double> lift_periodic_column(const Eigen::VectorXd& column, double a, double b, int order);

} // namespace fliga

#pragma once

#include <functional>
#include <map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fliga/floating_patch.hpp"
#include "fliga/material_points.hpp"
#include "fliga/materials.hpp"

namespace fliga {

/// Global unknown ordering [pressures; x-velocities; y-velocities].
struct DofLayout {
    int pressure_count = 0; // A
    int velocity_count = 0; // B

    int q(int a) const { return a; }
    int dx(int b) const { return pressure_count + b; }
    int dy(int b) const { return pressure_count + velocity_count + b; }
    int size() const { return pressure_count + 2 * velocity_count; }
};

/// Prescribed dof values. Re-prescribing a dof is allowed only with the same
/// value (corners are naturally visited twice); conflicting values throw.
class DirichletSet {
public:
    void prescribe(int dof, double value);
    bool contains(int dof) const { return entries_.count(dof) != 0; }
    double value(int dof) const { return entries_.at(dof); }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    void clear() { entries_.clear(); }
    const std::map<int, double>& entries() const { return entries_; }

private:
    std::map<int, double> entries_;
};

/// Velocity/pressure pair built by parametric subdivision: equal polynomial
/// order, one pressure knot span = two equal velocity spans per direction.
/// The pressure patch carries no control net (the velocity geometry map is
/// universal); its regulation grid is collocated from the velocity grid.
struct MixedDiscretization {
    FloatingPatch velocity;
    FloatingPatch pressure;

    explicit MixedDiscretization(FloatingPatch velocity_patch);

    /// Re-collocate the pressure regulation grid onto the current velocity
    /// floating maps (call after every velocity regulation update).
    void sync_pressure();
};

/// Residual, tangent, and constraints of the discrete problem at a state u.
struct GlobalSystem {
    Eigen::VectorXd u;
    Eigen::VectorXd R;
    Eigen::SparseMatrix<double> K;
    DirichletSet dirichlet;
};

/// Symmetric elimination: constrained rows of R become (u_dof - value),
/// known-value column contributions K(:,c)*(u_c - value) move into R,
/// constrained rows/columns of K are zeroed with a unit diagonal.
void apply_dirichlet(GlobalSystem& system);

/// Material-point assembly against a cached basis evaluation sweep.
/// `refresh` fixes the caches (and the accumulation order: ascending point
/// id); `residual`/`tangent` then assemble directly into the global system
/// with no element-level intermediates.
class Assembler {
public:
    /// `pressure` may be null: velocity-only saddle-free problems assemble
    /// just the S rows (pressure identically zero).
    explicit Assembler(const FloatingPatch& velocity, const FloatingPatch* pressure = nullptr);
    explicit Assembler(const MixedDiscretization& disc)
        : Assembler(disc.velocity, &disc.pressure) {}

    const DofLayout& layout() const { return layout_; }
    int cached_points() const { return n_; }

    /// Evaluate and cache basis values, physical gradients (velocity), basis
    /// values (pressure), weights, and polymeric stresses at every point.
    /// Throws TanglingError on a non-positive geometry Jacobian.
    void refresh(const std::vector<MaterialPoint>& points);

    /// R = [Q_a; S_bx; S_by]: Q_a = sum W (div v) A_a,
    /// S_b = sum W (-p I + tau) grad B_b.
    Eigen::VectorXd residual(const Eigen::VectorXd& u, const MaterialParams& material) const;

    /// Tangent dR/du; the pressure-pressure block is identically zero and
    /// the coupling blocks are exact transposes up to sign.
    Eigen::SparseMatrix<double> tangent(const MaterialParams& material) const;

    // Field evaluations against the cached basis data; `slot` is the point's
    // position in the vector passed to refresh.
    Vector2d point_velocity(int slot, const Eigen::VectorXd& u) const;
    Matrix2d point_velocity_gradient(int slot, const Eigen::VectorXd& u) const;
    double point_pressure(int slot, const Eigen::VectorXd& u) const;

private:
    void check_state(const Eigen::VectorXd& u) const;
    void check_cache() const;

    const FloatingPatch* velocity_;
    const FloatingPatch* pressure_;
    DofLayout layout_;

    int n_ = -1;
    int stride_v_ = 0;
    int stride_p_ = 0;
    std::vector<int> order_; // slots in ascending point-id order
    std::vector<int> vel_idx_;
    std::vector<double> vel_val_, vel_gx_, vel_gy_;
    std::vector<int> pre_idx_;
    std::vector<double> pre_val_;
    std::vector<double> weight_;
    std::vector<Matrix2d> pi_;

    // warm start for the pressure-row map inversions, keyed by slot
    std::vector<int> warm_id_, warm_first_row_;
    std::vector<double> warm_coords_;
};

struct NewtonReport {
    int iterations = 0; // linear solves performed
    double residual_norm = 0;
};

/// Newton-Raphson on R(u) = 0 with u <- u - K^{-1} R and symmetric Dirichlet
/// elimination (constrained dofs are set to their values up front and never
/// move). Converges when ||R|| < tol; throws NonConvergenceError when
/// max_iter solves did not suffice or the tangent cannot be factorized.
NewtonReport newton_solve(
    Eigen::VectorXd& u,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
    const std::function<Eigen::SparseMatrix<double>(const Eigen::VectorXd&)>& tangent,
    const DirichletSet& dirichlet, double tol = 1e-9, int max_iter = 25);

} // namespace fliga

#include "fliga/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/SparseLU>

#include "fliga/errors.hpp"
#include "fliga/updates.hpp"

namespace fliga {

namespace {

int span_count(const KnotVector& knots) {
    return static_cast<int>(knots.breakpoints().size()) - 1;
}

FloatingPatch derived_pressure_patch(const FloatingPatch& velocity) {
    const KnotVector& vp = velocity.parent();
    const KnotVector& vn = velocity.normal();
    if (vp.order() != vn.order())
        throw ConfigError("subdivision pair requires equal orders in both directions");
    const int sp = span_count(vp);
    const int sn = span_count(vn);
    if (sp % 2 != 0 || sn % 2 != 0)
        throw ConfigError("subdivision pair requires even span counts");
    KnotVector parent =
        vp.topology() == Topology::periodic
            ? KnotVector::periodic_uniform(vp.domain_start(), vp.domain_end(), sp / 2, vp.order())
            : KnotVector::open_uniform(vp.domain_start(), vp.domain_end(), sp / 2, vp.order());
    KnotVector normal =
        KnotVector::open_uniform(vn.domain_start(), vn.domain_end(), sn / 2, vn.order());
    return FloatingPatch(std::move(parent), std::move(normal));
}

Eigen::SparseMatrix<double> eliminated(const Eigen::SparseMatrix<double>& K,
                                       const std::vector<char>& mask) {
    std::vector<Eigen::Triplet<double>> kept;
    kept.reserve(static_cast<std::size_t>(K.nonZeros()) + mask.size());
    for (int col = 0; col < K.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it)
            if (!mask[static_cast<std::size_t>(it.row())] &&
                !mask[static_cast<std::size_t>(it.col())])
                kept.emplace_back(it.row(), it.col(), it.value());
    for (std::size_t dof = 0; dof < mask.size(); ++dof)
        if (mask[dof])
            kept.emplace_back(static_cast<int>(dof), static_cast<int>(dof), 1.0);
    Eigen::SparseMatrix<double> out(K.rows(), K.cols());
    out.setFromTriplets(kept.begin(), kept.end());
    return out;
}

} // namespace

void DirichletSet::prescribe(int dof, double value) {
    if (dof < 0)
        throw ConfigError("constraint dof must be non-negative");
    auto [it, inserted] = entries_.emplace(dof, value);
    if (!inserted && std::abs(it->second - value) > 1e-12 * std::max(1.0, std::abs(value)))
        throw ConfigError("conflicting Dirichlet values for one dof");
}

MixedDiscretization::MixedDiscretization(FloatingPatch velocity_patch)
    : velocity(std::move(velocity_patch)), pressure(derived_pressure_patch(velocity)) {
    sync_pressure();
}

void MixedDiscretization::sync_pressure() {
    pressure.set_regulation(collocate_pressure_regulation(
        velocity.regulation(), velocity.parent(), pressure.parent(), pressure.num_normal()));
}

void apply_dirichlet(GlobalSystem& system) {
    const Eigen::Index n = system.u.size();
    if (system.R.size() != n || system.K.rows() != n || system.K.cols() != n)
        throw ConfigError("global system dimensions disagree");
    std::vector<char> mask(static_cast<std::size_t>(n), 0);
    for (const auto& [dof, value] : system.dirichlet.entries()) {
        (void)value;
        if (dof >= n)
            throw ConfigError("constraint dof out of range");
        mask[static_cast<std::size_t>(dof)] = 1;
    }
    // Known-value columns move to the right-hand side: solving K d = R with
    // d_c = u_c - g fixed leaves R_m -= K(m,c) (u_c - g) on the free rows.
    for (const auto& [dof, value] : system.dirichlet.entries()) {
        const double du = system.u[dof] - value;
        if (du != 0.0)
            for (Eigen::SparseMatrix<double>::InnerIterator it(system.K, dof); it; ++it)
                if (!mask[static_cast<std::size_t>(it.row())])
                    system.R[it.row()] -= it.value() * du;
    }
    for (const auto& [dof, value] : system.dirichlet.entries())
        system.R[dof] = system.u[dof] - value;
    system.K = eliminated(system.K, mask);
}

Assembler::Assembler(const FloatingPatch& velocity, const FloatingPatch* pressure)
    : velocity_(&velocity), pressure_(pressure) {
    if (!velocity.has_net())
        throw ConfigError("velocity patch needs a control net for assembly");
    layout_.velocity_count = velocity.count();
    layout_.pressure_count = pressure_ ? pressure_->count() : 0;
    stride_v_ = (velocity.parent().order() + 1) * (velocity.normal().order() + 1);
    stride_p_ =
        pressure_ ? (pressure_->parent().order() + 1) * (pressure_->normal().order() + 1) : 0;
}

void Assembler::refresh(const std::vector<MaterialPoint>& points) {
    const int n = static_cast<int>(points.size());
    n_ = n;
    order_.resize(static_cast<std::size_t>(n));
    std::iota(order_.begin(), order_.end(), 0);
    std::sort(order_.begin(), order_.end(),
              [&](int l, int r) { return points[static_cast<std::size_t>(l)].id <
                                         points[static_cast<std::size_t>(r)].id; });

    vel_idx_.resize(static_cast<std::size_t>(n) * stride_v_);
    vel_val_.resize(static_cast<std::size_t>(n) * stride_v_);
    vel_gx_.resize(static_cast<std::size_t>(n) * stride_v_);
    vel_gy_.resize(static_cast<std::size_t>(n) * stride_v_);
    pre_idx_.resize(static_cast<std::size_t>(n) * stride_p_);
    pre_val_.resize(static_cast<std::size_t>(n) * stride_p_);
    weight_.resize(static_cast<std::size_t>(n));
    pi_.resize(static_cast<std::size_t>(n));

    const int order_vn = velocity_->normal().order();
    const int Jv = velocity_->num_normal();
    std::vector<double> vguess(static_cast<std::size_t>(Jv));

    const int order_pn = pressure_ ? pressure_->normal().order() : 0;
    const int Jp = pressure_ ? pressure_->num_normal() : 0;
    std::vector<double> pguess(static_cast<std::size_t>(Jp));
    const std::size_t warm_stride = static_cast<std::size_t>(order_pn) + 1;
    if (pressure_ && warm_id_.size() != static_cast<std::size_t>(n)) {
        warm_id_.assign(static_cast<std::size_t>(n), -1);
        warm_first_row_.assign(static_cast<std::size_t>(n), -1);
        warm_coords_.assign(static_cast<std::size_t>(n) * warm_stride, 0.0);
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int s = 0; s < n; ++s) {
        const MaterialPoint& p = points[static_cast<std::size_t>(s)];

        std::fill(vguess.begin(), vguess.end(), nan);
        if (p.cache_first_row >= 0)
            for (int k = 0; k <= order_vn; ++k) {
                const int row = p.cache_first_row + k;
                if (row >= 0 && row < Jv)
                    vguess[static_cast<std::size_t>(row)] =
                        p.parent_cache[static_cast<std::size_t>(k)];
            }
        BasisEval2D ev = velocity_->evaluate(p.xi, vguess);
        if (ev.count != stride_v_)
            throw Error("velocity basis cache stride mismatch");
        FloatingPatch::physical_gradients(ev);
        const std::size_t ov = static_cast<std::size_t>(s) * stride_v_;
        for (int e = 0; e < stride_v_; ++e) {
            vel_idx_[ov + e] = ev.indices[static_cast<std::size_t>(e)];
            vel_val_[ov + e] = ev.values[static_cast<std::size_t>(e)];
            vel_gx_[ov + e] = ev.grad_phys[static_cast<std::size_t>(e)][0];
            vel_gy_[ov + e] = ev.grad_phys[static_cast<std::size_t>(e)][1];
        }

        if (pressure_) {
            std::fill(pguess.begin(), pguess.end(), nan);
            if (warm_id_[static_cast<std::size_t>(s)] == p.id &&
                warm_first_row_[static_cast<std::size_t>(s)] >= 0)
                for (std::size_t k = 0; k < warm_stride; ++k) {
                    const int row = warm_first_row_[static_cast<std::size_t>(s)] +
                                    static_cast<int>(k);
                    if (row >= 0 && row < Jp)
                        pguess[static_cast<std::size_t>(row)] =
                            warm_coords_[static_cast<std::size_t>(s) * warm_stride + k];
                }
            BasisEval2D ep = pressure_->evaluate(p.xi, pguess);
            if (ep.count != stride_p_)
                throw Error("pressure basis cache stride mismatch");
            const std::size_t op = static_cast<std::size_t>(s) * stride_p_;
            for (int e = 0; e < stride_p_; ++e) {
                pre_idx_[op + e] = ep.indices[static_cast<std::size_t>(e)];
                pre_val_[op + e] = ep.values[static_cast<std::size_t>(e)];
            }
            warm_id_[static_cast<std::size_t>(s)] = p.id;
            warm_first_row_[static_cast<std::size_t>(s)] = ep.first_row;
            for (std::size_t k = 0; k < warm_stride; ++k)
                warm_coords_[static_cast<std::size_t>(s) * warm_stride + k] =
                    ep.parent_coords[k];
        }

        weight_[static_cast<std::size_t>(s)] = p.W;
        pi_[static_cast<std::size_t>(s)] = p.pi;
    }
}

void Assembler::check_state(const Eigen::VectorXd& u) const {
    if (n_ < 0)
        throw Error("assembly caches not refreshed");
    if (u.size() != layout_.size())
        throw Error("unknown vector size does not match the dof layout");
}

void Assembler::check_cache() const {
    if (n_ < 0)
        throw Error("assembly caches not refreshed");
}

Eigen::VectorXd Assembler::residual(const Eigen::VectorXd& u,
                                    const MaterialParams& material) const {
    check_state(u);
    Eigen::VectorXd R = Eigen::VectorXd::Zero(layout_.size());
    for (int k = 0; k < n_; ++k) {
        const int s = order_[static_cast<std::size_t>(k)];
        const std::size_t ov = static_cast<std::size_t>(s) * stride_v_;
        Matrix2d L = Matrix2d::Zero();
        for (int e = 0; e < stride_v_; ++e) {
            const int b = vel_idx_[ov + e];
            const double gx = vel_gx_[ov + e];
            const double gy = vel_gy_[ov + e];
            const double ux = u[layout_.dx(b)];
            const double uy = u[layout_.dy(b)];
            L(0, 0) += ux * gx;
            L(0, 1) += ux * gy;
            L(1, 0) += uy * gx;
            L(1, 1) += uy * gy;
        }
        const Matrix2d D = 0.5 * (L + L.transpose());
        Matrix2d sigma = total_stress(D, pi_[static_cast<std::size_t>(s)], material);
        if (pressure_) {
            const std::size_t op = static_cast<std::size_t>(s) * stride_p_;
            double p = 0;
            for (int e = 0; e < stride_p_; ++e)
                p += u[layout_.q(pre_idx_[op + e])] * pre_val_[op + e];
            sigma(0, 0) -= p;
            sigma(1, 1) -= p;
        }
        const double W = weight_[static_cast<std::size_t>(s)];
        for (int e = 0; e < stride_v_; ++e) {
            const int b = vel_idx_[ov + e];
            const double gx = vel_gx_[ov + e];
            const double gy = vel_gy_[ov + e];
            R[layout_.dx(b)] += W * (sigma(0, 0) * gx + sigma(0, 1) * gy);
            R[layout_.dy(b)] += W * (sigma(1, 0) * gx + sigma(1, 1) * gy);
        }
        if (pressure_) {
            const std::size_t op = static_cast<std::size_t>(s) * stride_p_;
            const double div = W * (L(0, 0) + L(1, 1));
            for (int e = 0; e < stride_p_; ++e)
                R[layout_.q(pre_idx_[op + e])] += div * pre_val_[op + e];
        }
    }
    return R;
}

Eigen::SparseMatrix<double> Assembler::tangent(const MaterialParams& material) const {
    check_cache();
    const std::size_t per_point = 4 * static_cast<std::size_t>(stride_v_) * stride_v_ +
                                  4 * static_cast<std::size_t>(stride_v_) * stride_p_;
    // Flush the triplet buffer in chunks: large point clouds would otherwise
    // hold the whole n * per_point list in memory at once.
    const std::size_t flush_at = std::max<std::size_t>(per_point, 1u << 21);
    Eigen::SparseMatrix<double> K(layout_.size(), layout_.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(std::min(static_cast<std::size_t>(n_) * per_point, flush_at + per_point));
    const auto flush = [&] {
        Eigen::SparseMatrix<double> part(layout_.size(), layout_.size());
        part.setFromTriplets(trip.begin(), trip.end());
        K += part;
        trip.clear();
    };
    const double eta_s = material.eta_s;
    for (int k = 0; k < n_; ++k) {
        if (trip.size() >= flush_at)
            flush();
        const int s = order_[static_cast<std::size_t>(k)];
        const std::size_t ov = static_cast<std::size_t>(s) * stride_v_;
        const double W = weight_[static_cast<std::size_t>(s)];
        for (int e = 0; e < stride_v_; ++e) {
            const int b = vel_idx_[ov + e];
            const double gbx = vel_gx_[ov + e];
            const double gby = vel_gy_[ov + e];
            // dS_bi/dd_betak = eta_s W [(grad B_beta . grad B_b) delta_ik
            //                           + dB_beta/dx_i dB_b/dx_k]
            for (int f = 0; f < stride_v_; ++f) {
                const int beta = vel_idx_[ov + f];
                const double gpx = vel_gx_[ov + f];
                const double gpy = vel_gy_[ov + f];
                const double dot = eta_s * W * (gpx * gbx + gpy * gby);
                trip.emplace_back(layout_.dx(b), layout_.dx(beta), dot + eta_s * W * gpx * gbx);
                trip.emplace_back(layout_.dx(b), layout_.dy(beta), eta_s * W * gpx * gby);
                trip.emplace_back(layout_.dy(b), layout_.dx(beta), eta_s * W * gpy * gbx);
                trip.emplace_back(layout_.dy(b), layout_.dy(beta), dot + eta_s * W * gpy * gby);
            }
            if (pressure_) {
                const std::size_t op = static_cast<std::size_t>(s) * stride_p_;
                for (int f = 0; f < stride_p_; ++f) {
                    const int a = pre_idx_[op + f];
                    // dQ_a/dd_bk = W dB_b/dx_k A_a; dS_bi/dq_a is its exact
                    // negative transpose.
                    const double cx = W * gbx * pre_val_[op + f];
                    const double cy = W * gby * pre_val_[op + f];
                    trip.emplace_back(layout_.q(a), layout_.dx(b), cx);
                    trip.emplace_back(layout_.q(a), layout_.dy(b), cy);
                    trip.emplace_back(layout_.dx(b), layout_.q(a), -cx);
                    trip.emplace_back(layout_.dy(b), layout_.q(a), -cy);
                }
            }
        }
    }
    flush();
    return K;
}

Vector2d Assembler::point_velocity(int slot, const Eigen::VectorXd& u) const {
    check_state(u);
    const std::size_t ov = static_cast<std::size_t>(slot) * stride_v_;
    Vector2d v{0, 0};
    for (int e = 0; e < stride_v_; ++e) {
        const int b = vel_idx_[ov + e];
        v[0] += u[layout_.dx(b)] * vel_val_[ov + e];
        v[1] += u[layout_.dy(b)] * vel_val_[ov + e];
    }
    return v;
}

Matrix2d Assembler::point_velocity_gradient(int slot, const Eigen::VectorXd& u) const {
    check_state(u);
    const std::size_t ov = static_cast<std::size_t>(slot) * stride_v_;
    Matrix2d L = Matrix2d::Zero();
    for (int e = 0; e < stride_v_; ++e) {
        const int b = vel_idx_[ov + e];
        const double gx = vel_gx_[ov + e];
        const double gy = vel_gy_[ov + e];
        L(0, 0) += u[layout_.dx(b)] * gx;
        L(0, 1) += u[layout_.dx(b)] * gy;
        L(1, 0) += u[layout_.dy(b)] * gx;
        L(1, 1) += u[layout_.dy(b)] * gy;
    }
    return L;
}

double Assembler::point_pressure(int slot, const Eigen::VectorXd& u) const {
    check_state(u);
    if (!pressure_)
        return 0.0;
    const std::size_t op = static_cast<std::size_t>(slot) * stride_p_;
    double p = 0;
    for (int e = 0; e < stride_p_; ++e)
        p += u[layout_.q(pre_idx_[op + e])] * pre_val_[op + e];
    return p;
}

NewtonReport newton_solve(
    Eigen::VectorXd& u,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
    const std::function<Eigen::SparseMatrix<double>(const Eigen::VectorXd&)>& tangent,
    const DirichletSet& dirichlet, double tol, int max_iter) {
    std::vector<char> mask(static_cast<std::size_t>(u.size()), 0);
    for (const auto& [dof, value] : dirichlet.entries()) {
        if (dof >= u.size())
            throw ConfigError("constraint dof out of range");
        u[dof] = value;
        mask[static_cast<std::size_t>(dof)] = 1;
    }

    const auto constrained_residual = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd R = residual(v);
        if (R.size() != v.size())
            throw Error("residual size does not match the unknowns");
        for (const auto& [dof, value] : dirichlet.entries())
            R[dof] = v[dof] - value; // zero: constrained dofs never move
        return R;
    };

    NewtonReport report;
    Eigen::VectorXd R = constrained_residual(u);
    report.residual_norm = R.norm();
    while (true) {
        if (report.residual_norm < tol)
            return report;
        if (report.iterations >= max_iter)
            throw NonConvergenceError("Newton-Raphson iteration budget exhausted",
                                      report.residual_norm);
        Eigen::SparseMatrix<double> K = eliminated(tangent(u), mask);
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(K);
        if (lu.info() != Eigen::Success)
            throw NonConvergenceError("tangent factorization failed", report.residual_norm);
        const Eigen::VectorXd delta = lu.solve(R);
        // Backtracking keeps non-smooth problems (e.g. contact regime
        // switches) from cycling; smooth problems accept the full step.
        double alpha = 1.0;
        Eigen::VectorXd trial, R_trial;
        for (int halvings = 0;; ++halvings) {
            trial = u - alpha * delta;
            R_trial = constrained_residual(trial);
            if (R_trial.norm() < report.residual_norm || halvings >= 6)
                break;
            alpha *= 0.5;
        }
        u = std::move(trial);
        R = std::move(R_trial);
        report.residual_norm = R.norm();
        ++report.iterations;
    }
}

} // namespace fliga

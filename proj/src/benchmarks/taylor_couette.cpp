#include "fliga/benchmarks/taylor_couette.hpp"

#include <cmath>
#include <numbers>

#include "fliga/errors.hpp"
#include "fliga/updates.hpp"

namespace fliga {

namespace {

// Characteristic level set of the annulus: constant along radii, advancing
// clockwise with the flow. gradient = 10/(2 pi) * (y, -x) / r^2.
LevelFunction ring_level() {
    const double scale = 10.0 / (2.0 * std::numbers::pi);
    return {[scale](const Vector2d& x) {
                const double r2 = x.squaredNorm();
                return Vector2d{scale * x[1] / r2, -scale * x[0] / r2};
            },
            "clockwise angular coordinate, 10 per turn"};
}

DirichletSet ring_dirichlet(const MixedDiscretization& disc, const DofLayout& layout,
                            const TaylorCouetteConfig& cfg) {
    DirichletSet set;
    const Eigen::MatrixX2d& net = disc.velocity.control_net();
    for (int b : disc.velocity.normal_edge_indices(false)) {
        set.prescribe(layout.dx(b), cfg.Omega_I * net(b, 1));
        set.prescribe(layout.dy(b), -cfg.Omega_I * net(b, 0));
    }
    for (int b : disc.velocity.normal_edge_indices(true)) {
        set.prescribe(layout.dx(b), cfg.Omega_O * net(b, 1));
        set.prescribe(layout.dy(b), -cfg.Omega_O * net(b, 0));
    }
    // whole outer pressure row: the ansatz then vanishes on the boundary
    // (weak Kronecker delta), fixing the gauge without a point pin
    for (int a : disc.pressure.normal_edge_indices(true))
        set.prescribe(layout.q(a), 0.0);
    return set;
}

struct ErrorEvaluation {
    double err_vx = 0;
    double err_p = 0;
    double ri = 0;
    double ro = 0;
    double max_abs_p = 0;
};

ErrorEvaluation evaluate_errors(const MixedDiscretization& disc, const Assembler& assembler,
                                const Eigen::VectorXd& u,
                                const std::vector<MaterialPoint>& points,
                                const TaylorCouetteConfig& cfg) {
    ErrorEvaluation out;
    const auto [ri, ro] = measure_radii(disc.velocity);
    out.ri = ri;
    out.ro = ro;
    const CouetteCoefficients c = couette_coefficients(ri, ro, cfg.Omega_I, cfg.Omega_O);
    const bool viscoelastic = cfg.material.model == Model::oldroyd_b;

    double num_v = 0, den_v = 0, num_p = 0, den_p = 0, total_w = 0;
    for (int s = 0; s < static_cast<int>(points.size()); ++s) {
        const MaterialPoint& p = points[static_cast<std::size_t>(s)];
        const double vx = assembler.point_velocity(s, u)[0];
        const double ph = assembler.point_pressure(s, u);
        const double vref = couette_velocity(p.x, c)[0];
        const double pref =
            viscoelastic ? couette_pressure(p.x.norm(), c, cfg.material, ro) : 0.0;
        num_v += p.W * (vx - vref) * (vx - vref);
        den_v += p.W * vref * vref;
        num_p += p.W * (ph - pref) * (ph - pref);
        den_p += p.W * pref * pref;
        total_w += p.W;
        out.max_abs_p = std::max(out.max_abs_p, std::fabs(ph));
    }
    out.err_vx = std::sqrt(num_v / den_v);
    out.err_p = viscoelastic ? std::sqrt(num_p / den_p)
                             : std::sqrt(num_p / total_w) / (cfg.material.eta_s * cfg.Omega_O);
    return out;
}

} // namespace

CouetteRunResult run_taylor_couette(const TaylorCouetteConfig& cfg,
                                    const CouetteRunOptions& options) {
    cfg.validate();
    MixedDiscretization disc = make_annulus(cfg);
    if (options.rotate_net != 0.0) {
        const double co = std::cos(options.rotate_net), si = std::sin(options.rotate_net);
        Eigen::MatrixX2d net = disc.velocity.control_net();
        for (Eigen::Index b = 0; b < net.rows(); ++b)
            net.row(b) = Vector2d{co * net(b, 0) - si * net(b, 1),
                                  si * net(b, 0) + co * net(b, 1)};
        disc.velocity.set_control_net(std::move(net));
    }

    const int ppe = cfg.points_per_element > 0 ? cfg.points_per_element : cfg.order + 1;
    std::vector<MaterialPoint> points =
        init_material_points(disc.velocity, {ppe, ppe}, cfg.material.pi0);
    if (options.initial_stress)
        for (MaterialPoint& p : points)
            p.pi = options.initial_stress(p.x);

    Assembler assembler(disc);
    const DofLayout& layout = assembler.layout();
    const LevelFunction level = ring_level();
    const BlendingFunction blend =
        BlendingFunction::constant_one(disc.velocity.domain_start(), disc.velocity.domain_end());

    const double duration = cfg.rotations * 2.0 * std::numbers::pi / cfg.Omega_O;
    const int steps = std::max(1, static_cast<int>(std::ceil(duration / cfg.dt - 1e-9)));
    const int error_every =
        options.error_every > 0 ? options.error_every : std::max(1, steps / 50);

    std::vector<ErrorSeriesRow> errors;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(layout.size());
    ErrorEvaluation last_eval;
    FieldSnapshot last_good;
    bool have_snapshot = false;
    int last_emitted = -1;
    int newton_total = 0;

    try {
        for (int step = 0; step < steps; ++step) {
            const double time = step * cfg.dt;
            if (step > 0 && cfg.material.model == Model::oldroyd_b)
                for (MaterialPoint& p : points)
                    p.pi = oldroydb_update(p.pi, p.prev_D, p.prev_L, cfg.material, cfg.dt);

            assembler.refresh(points);
            const DirichletSet dirichlet = ring_dirichlet(disc, layout, cfg);
            const NewtonReport report = newton_solve(
                u, [&](const Eigen::VectorXd& v) { return assembler.residual(v, cfg.material); },
                [&](const Eigen::VectorXd&) { return assembler.tangent(cfg.material); },
                dirichlet, cfg.newton_tol);
            newton_total += report.iterations;

            const bool eval_now = step % error_every == 0 || step == steps - 1;
            if (eval_now) {
                last_eval = evaluate_errors(disc, assembler, u, points, cfg);
                errors.push_back({step, time, last_eval.err_vx, last_eval.err_p});
            }
            if (options.sink) {
                last_good = make_snapshot(step, time, points, assembler, u, disc.velocity);
                if (eval_now) {
                    last_good.err_vx = last_eval.err_vx;
                    last_good.err_p = last_eval.err_p;
                }
                have_snapshot = true;
                if (options.snapshot_every > 0 && step % options.snapshot_every == 0) {
                    options.sink(last_good);
                    last_emitted = step;
                }
            }

            advect_material_points(
                points,
                [&](const MaterialPoint& p) {
                    return std::make_pair(assembler.point_velocity(p.id, u),
                                          assembler.point_velocity_gradient(p.id, u));
                },
                cfg.dt);
            Eigen::MatrixX2d d(disc.velocity.count(), 2);
            for (int b = 0; b < disc.velocity.count(); ++b)
                d.row(b) = Vector2d{u[layout.dx(b)], u[layout.dy(b)]};
            RegulationGrid reg = update_regulation_points(disc.velocity, d, level, blend, cfg.dt);
            disc.velocity.set_control_net(
                update_control_points(disc.velocity.control_net(), d, cfg.dt));
            disc.velocity.set_regulation(std::move(reg));
            disc.sync_pressure();
            pull_back_material_points(points, disc.velocity);
        }
    } catch (const Error&) {
        if (options.sink && have_snapshot && last_good.step != last_emitted)
            options.sink(last_good);
        throw;
    }

    if (options.sink && have_snapshot && last_good.step != last_emitted)
        options.sink(last_good);

    return CouetteRunResult{std::move(errors),
                            weissenberg(cfg),
                            last_eval.ri,
                            last_eval.ro,
                            last_eval.max_abs_p,
                            steps,
                            newton_total,
                            std::move(disc),
                            std::move(u),
                            std::move(points)};
}

ConvergenceResult couette_convergence(const TaylorCouetteConfig& base,
                                      const std::vector<std::pair<int, int>>& meshes) {
    if (meshes.size() < 2)
        throw ConfigError("a convergence study needs at least two meshes");
    ConvergenceResult out;
    out.meshes = meshes;
    for (const auto& [mc, mn] : meshes) {
        TaylorCouetteConfig cfg = base;
        cfg.mesh_characteristic = mc;
        cfg.mesh_normal = mn;
        const CouetteRunResult run = run_taylor_couette(cfg);
        double acc = 0;
        int count = 0;
        for (const ErrorSeriesRow& row : run.errors)
            if (3 * row.step >= 2 * (run.steps - 1)) {
                acc += row.err_vx;
                ++count;
            }
        if (count == 0)
            throw ConfigError("error series too sparse to form a plateau average");
        out.h.push_back(1.0 / mc);
        out.plateau_err.push_back(acc / count);
    }
    double mh = 0, me = 0;
    const int n = static_cast<int>(out.h.size());
    std::vector<double> lh(static_cast<std::size_t>(n)), le(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        lh[static_cast<std::size_t>(i)] = std::log(out.h[static_cast<std::size_t>(i)]);
        le[static_cast<std::size_t>(i)] = std::log(out.plateau_err[static_cast<std::size_t>(i)]);
        mh += lh[static_cast<std::size_t>(i)] / n;
        me += le[static_cast<std::size_t>(i)] / n;
    }
    double num = 0, den = 0;
    for (int i = 0; i < n; ++i) {
        num += (lh[static_cast<std::size_t>(i)] - mh) * (le[static_cast<std::size_t>(i)] - me);
        den += (lh[static_cast<std::size_t>(i)] - mh) * (lh[static_cast<std::size_t>(i)] - mh);
    }
    out.slope = num / den;
    return out;
}

} // namespace fliga

#include "fliga/benchmarks/extrusion.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fliga/errors.hpp"

namespace fliga {

void ExtrusionConfig::validate() const {
    for (double length : {s_0, s_P0, s_N, c_N, t_N, l_S, D_N, d_N, R_N, r_N, e_N})
        if (!(length > 0))
            throw ConfigError("extrusion geometry parameters must be positive");
    if (!(d_N < D_N))
        throw ConfigError("the bore must be narrower than the barrel");
    if (!(v_N > 0) || !(v_S > 0))
        throw ConfigError("inlet and substrate speeds must be positive");
    if (!(k > 0) || !(mu >= 0))
        throw ConfigError("penalty factor must be positive and friction non-negative");
    if (!(dt > 0) || steps < 1)
        throw ConfigError("time step and step count must be positive");
    if (order < 1 || order > 3)
        throw ConfigError("order must be 1, 2, or 3");
    if (mesh_characteristic < 2 || mesh_normal < 1)
        throw ConfigError("mesh must have at least 2x1 pressure elements");
    const auto [nx, ny] = points_per_element;
    if (nx < 1 || ny < 1)
        throw ConfigError("points per element must be positive");
    if (!(blending_offset > 0) || !(9.0 > 4 * blending_offset))
        throw ConfigError("blending offset must satisfy 0 < 4d < 9 (the parent span)");
    const int parent_rows = 2 * mesh_characteristic + order;
    if (stabilization_row < 3 || stabilization_row > parent_rows)
        throw ConfigError("stabilization source row must lie below the two held rows");
    if (!(attach_height >= 0) || !(attach_height < exit_y()))
        throw ConfigError("attach height must sit between substrate and bore outlet");
    if (!(newton_tol > 0) || max_newton < 1)
        throw ConfigError("newton settings must be positive");
    material.validate(dt);
    NozzleWall wall(*this); // throws when the arc geometry is inconsistent
}

Eigen::MatrixX2d initial_extrusion_net(const FloatingPatch& patch, const NozzleWall& wall,
                                       const ExtrusionConfig& cfg) {
    const std::vector<double> gp = patch.parent().greville();
    const std::vector<double> gn = patch.normal().greville();
    const int I = patch.num_parent();
    const int J = patch.num_normal();
    const double top = cfg.top_y0();
    const double bottom = cfg.exit_y();
    const double span = patch.parent().domain_end() - patch.parent().domain_start();
    Eigen::MatrixX2d net(I * J, 2);
    for (int i = 0; i < I; ++i) {
        const double frac = (gp[static_cast<std::size_t>(i)] - patch.parent().domain_start()) / span;
        const double y = top - (top - bottom) * frac;
        const double w = wall.half_width(y);
        for (int j = 0; j < J; ++j)
            net.row(patch.global_index(i, j)) = Vector2d{gn[static_cast<std::size_t>(j)] * w, y};
    }
    return net;
}

LevelFunction extrusion_level(bool attached, const Vector2d& pivot) {
    if (!attached)
        return {[](const Vector2d&) { return Vector2d{0, -1}; }, "uniform downward"};
    return {[pivot](const Vector2d& x) {
                if (x.y() >= pivot.y())
                    return Vector2d{0, -1};
                if (x.x() < pivot.x())
                    return Vector2d{-1, 0};
                const Vector2d r = x - pivot;
                const double len = r.norm();
                if (len < 1e-12)
                    return Vector2d{0, -1}; // the pivot is never inside the material
                return Vector2d{r.y() / len, -r.x() / len};
            },
            "downward, quarter-turn fan into the substrate direction"};
}

namespace {

Vector2d velocity_field(const BasisEval2D& ev, const DofLayout& layout,
                        const Eigen::VectorXd& u) {
    Vector2d v = Vector2d::Zero();
    for (int a = 0; a < ev.count; ++a)
        v += ev.values[static_cast<std::size_t>(a)] *
             Vector2d{u[layout.dx(ev.indices[static_cast<std::size_t>(a)])],
                      u[layout.dy(ev.indices[static_cast<std::size_t>(a)])]};
    return v;
}

double pressure_field(const MixedDiscretization& disc, const DofLayout& layout,
                      const Eigen::VectorXd& u, const Vector2d& param) {
    const BasisEval2D ev = disc.pressure.evaluate(param);
    double p = 0;
    for (int a = 0; a < ev.count; ++a)
        p += ev.values[static_cast<std::size_t>(a)] *
             u[layout.q(ev.indices[static_cast<std::size_t>(a)])];
    return p;
}

/// Signed flux through the constant-xi section: integral of v . n with
/// n dl = (dy/deta, -dx/deta) deta, positive for flow toward -y. Exact per
/// eta span with a 3-point rule (spline integrand of degree <= 2r - 1).
double section_flux(const MixedDiscretization& disc, const DofLayout& layout,
                    const Eigen::VectorXd& u, double xi) {
    const GaussRule rule = gauss_legendre(3);
    const std::vector<double> spans = disc.velocity.normal().breakpoints();
    double flux = 0;
    for (std::size_t s = 0; s + 1 < spans.size(); ++s) {
        const double mid = 0.5 * (spans[s] + spans[s + 1]);
        const double half = 0.5 * (spans[s + 1] - spans[s]);
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const BasisEval2D ev = disc.velocity.geometry({xi, mid + half * rule.nodes[q]});
            const Vector2d v = velocity_field(ev, layout, u);
            const Vector2d tangent = ev.jacobian.col(1);
            flux += half * rule.weights[q] * (v.x() * tangent.y() - v.y() * tangent.x());
        }
    }
    return flux;
}

/// xi whose centerline image sits at the requested height; the centerline
/// descends monotonically through the nozzle.
double xi_at_height(const MixedDiscretization& disc, double y) {
    double lo = disc.velocity.domain_start();
    double hi = disc.velocity.domain_end();
    const auto height = [&](double xi) { return disc.velocity.geometry({xi, 0.0}).x.y(); };
    if (height(lo) < y || height(hi) > y)
        throw DomainError("requested section height is outside the material column");
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (height(mid) > y ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ExtrusionDiagnostics evaluate_diagnostics(const MixedDiscretization& disc,
                                          const DofLayout& layout, const Eigen::VectorXd& u,
                                          const std::vector<MaterialPoint>& points,
                                          const ExtrusionConfig& cfg, int step, double time,
                                          int attached_controls, int active_contacts) {
    ExtrusionDiagnostics out;
    out.step = step;
    out.time = time;
    out.attached_controls = attached_controls;
    out.active_contacts = active_contacts;
    out.inlet_flux = cfg.v_N * cfg.D_N;

    // Centerline profile, inlet to front.
    const int n = 257;
    const double a = disc.velocity.domain_start();
    const double b = disc.velocity.domain_end();
    std::vector<double> ys(n), ps(n);
    for (int i = 0; i < n; ++i) {
        const double xi = a + (b - a) * i / (n - 1.0);
        ys[static_cast<std::size_t>(i)] = disc.velocity.geometry({xi, 0.0}).x.y();
        ps[static_cast<std::size_t>(i)] = pressure_field(disc, layout, u, {xi, 0.0});
    }
    out.peak_pressure = *std::max_element(ps.begin(), ps.end());
    out.contraction_monotone = true;
    const double slack = 5e-3 * std::max(1.0, out.peak_pressure);
    bool past_exit = false;
    for (int i = 0; i < n; ++i) {
        const double y = ys[static_cast<std::size_t>(i)];
        if (i > 0 && y <= cfg.contraction_top_y() && y >= cfg.bore_top_y() &&
            ys[static_cast<std::size_t>(i - 1)] <= cfg.contraction_top_y() &&
            ps[static_cast<std::size_t>(i)] > ps[static_cast<std::size_t>(i - 1)] + slack)
            out.contraction_monotone = false;
        if (!past_exit && y < cfg.exit_y()) {
            past_exit = true;
            out.exit_pressure = ps[static_cast<std::size_t>(i)];
        }
    }
    if (!past_exit)
        out.exit_pressure = ps.back();

    out.bore_flux = section_flux(disc, layout, u,
                                 xi_at_height(disc, 0.5 * (cfg.bore_top_y() + cfg.exit_y())));

    double lo = 0, hi = 0;
    bool any = false;
    for (const MaterialPoint& p : points)
        if (p.x.y() < cfg.exit_y() - 0.05 && p.x.y() > cfg.attach_height + 0.1) {
            lo = any ? std::min(lo, p.x.x()) : p.x.x();
            hi = any ? std::max(hi, p.x.x()) : p.x.x();
            any = true;
        }
    out.extrudate_width = any ? hi - lo : 0.0;
    return out;
}

std::vector<int> marker_lines(const std::vector<MaterialPoint>& points,
                              std::initializer_list<double> heights) {
    std::vector<int> ids;
    for (double h : heights) {
        double best = std::numeric_limits<double>::infinity();
        for (const MaterialPoint& p : points)
            best = std::min(best, std::fabs(p.x.y() - h));
        for (const MaterialPoint& p : points)
            if (std::fabs(std::fabs(p.x.y() - h) - best) < 1e-9)
                ids.push_back(p.id);
    }
    return ids;
}

} // namespace

ExtrusionResult run_extrusion(const ExtrusionConfig& cfg, const ExtrusionRunOptions& options) {
    cfg.validate();
    const NozzleWall wall(cfg);

    FloatingPatch velocity(
        KnotVector::open_uniform(0.0, 9.0, 2 * cfg.mesh_characteristic, cfg.order),
        KnotVector::open_uniform(-1.0, 1.0, 2 * cfg.mesh_normal, cfg.order));
    velocity.set_regulation(velocity.identity_regulation());
    velocity.set_control_net(initial_extrusion_net(velocity, wall, cfg));
    MixedDiscretization disc(std::move(velocity));

    std::vector<MaterialPoint> points =
        init_material_points(disc.velocity, cfg.points_per_element, cfg.material.pi0);
    Assembler assembler(disc);
    const DofLayout& layout = assembler.layout();

    std::vector<int> contact_nodes = disc.velocity.normal_edge_indices(false);
    for (int b : disc.velocity.normal_edge_indices(true))
        contact_nodes.push_back(b);

    const int diag_every =
        options.diagnostics_every > 0 ? options.diagnostics_every : std::max(1, cfg.steps / 25);
    const int src_row = cfg.stabilization_row - 1;
    const int J = disc.velocity.num_normal();

    std::vector<ExtrusionDiagnostics> diagnostics;
    std::vector<int> markers = marker_lines(points, {9.0, 7.0, 5.0, 3.0, 1.2});
    Eigen::VectorXd u = Eigen::VectorXd::Zero(layout.size());
    std::set<int> attached;
    bool attached_flag = false;
    int first_attach_step = -1;
    long newton_total = 0;
    FieldSnapshot last_good;
    bool have_snapshot = false;
    int last_emitted = -1;

    try {
        for (int step = 0; step < cfg.steps; ++step) {
            const double time = step * cfg.dt;
            if (step > 0 && cfg.material.model == Model::oldroyd_b)
                for (MaterialPoint& p : points)
                    p.pi = oldroydb_update(p.pi, p.prev_D, p.prev_L, cfg.material, cfg.dt);

            assembler.refresh(points);
            const Eigen::MatrixX2d& net = disc.velocity.control_net();

            double top_y = 0;
            for (int j = 0; j < J; ++j)
                top_y += net(disc.velocity.global_index(0, j), 1) / J;
            const MuProfile mu_profile = friction_profile(cfg, top_y);

            DirichletSet dirichlet;
            for (int j = 0; j < J; ++j) {
                const double stab =
                    step > 0 ? u[layout.dx(disc.velocity.global_index(src_row, j))] : 0.0;
                dirichlet.prescribe(layout.dx(disc.velocity.global_index(0, j)), stab);
                dirichlet.prescribe(layout.dx(disc.velocity.global_index(1, j)), stab);
                dirichlet.prescribe(layout.dy(disc.velocity.global_index(0, j)), -cfg.v_N);
            }
            for (int b : attached) {
                dirichlet.prescribe(layout.dx(b), -cfg.v_S);
                dirichlet.prescribe(layout.dy(b), 0.0);
            }

            const auto contact_sweep = [&](const Eigen::VectorXd& v, Eigen::VectorXd* R,
                                           std::vector<Eigen::Triplet<double>>* triplets,
                                           int* active) {
                for (int b : contact_nodes) {
                    const Vector2d d{v[layout.dx(b)], v[layout.dy(b)]};
                    const ContactForce f = evaluate_contact(wall, mu_profile, cfg.k, cfg.dt,
                                                            net.row(b).transpose(), d);
                    if (!f.active)
                        continue;
                    if (active)
                        ++*active;
                    if (R) {
                        (*R)[layout.dx(b)] -= f.force.x();
                        (*R)[layout.dy(b)] -= f.force.y();
                    }
                    if (triplets) {
                        const int bx = layout.dx(b), by = layout.dy(b);
                        triplets->emplace_back(bx, bx, -f.dforce_dd(0, 0));
                        triplets->emplace_back(bx, by, -f.dforce_dd(0, 1));
                        triplets->emplace_back(by, bx, -f.dforce_dd(1, 0));
                        triplets->emplace_back(by, by, -f.dforce_dd(1, 1));
                    }
                }
            };

            const NewtonReport report = newton_solve(
                u,
                [&](const Eigen::VectorXd& v) {
                    Eigen::VectorXd R = assembler.residual(v, cfg.material);
                    contact_sweep(v, &R, nullptr, nullptr);
                    return R;
                },
                [&](const Eigen::VectorXd& v) {
                    Eigen::SparseMatrix<double> K = assembler.tangent(cfg.material);
                    std::vector<Eigen::Triplet<double>> triplets;
                    contact_sweep(v, nullptr, &triplets, nullptr);
                    if (!triplets.empty()) {
                        Eigen::SparseMatrix<double> C(K.rows(), K.cols());
                        C.setFromTriplets(triplets.begin(), triplets.end());
                        K += C;
                    }
                    return K;
                },
                dirichlet, cfg.newton_tol, cfg.max_newton);
            newton_total += report.iterations;

            const bool eval_now = step % diag_every == 0 || step == cfg.steps - 1;
            if (eval_now) {
                int active = 0;
                contact_sweep(u, nullptr, nullptr, &active);
                diagnostics.push_back(evaluate_diagnostics(disc, layout, u, points, cfg, step,
                                                           time, static_cast<int>(attached.size()),
                                                           active));
            }
            if (options.sink) {
                last_good = make_snapshot(step, time, points, assembler, u, disc.velocity);
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
            const LevelFunction level = extrusion_level(attached_flag, cfg.level_pivot());
            const BlendingFunction blend = BlendingFunction::ramp_profile(
                disc.velocity.domain_start(), disc.velocity.domain_end(), cfg.blending_offset);
            RegulationGrid reg = update_regulation_points(disc.velocity, d, level, blend, cfg.dt);
            disc.velocity.set_control_net(
                update_control_points(disc.velocity.control_net(), d, cfg.dt));
            disc.velocity.set_regulation(std::move(reg));

            const Eigen::MatrixX2d& moved = disc.velocity.control_net();
            for (int b = 0; b < disc.velocity.count(); ++b)
                if (moved(b, 1) < cfg.attach_height && attached.insert(b).second &&
                    !attached_flag) {
                    attached_flag = true;
                    first_attach_step = step;
                }

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

    return ExtrusionResult{std::move(diagnostics), cfg.steps,       newton_total,
                           first_attach_step,      std::move(markers), std::move(disc),
                           std::move(u),           std::move(points)};
}

} // namespace fliga

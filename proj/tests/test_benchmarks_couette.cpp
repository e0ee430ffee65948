#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "fliga/benchmarks/taylor_couette.hpp"
#include "fliga/errors.hpp"

using namespace fliga;

namespace {

TaylorCouetteConfig coarse_newtonian(double dt, int steps) {
    TaylorCouetteConfig cfg = taylor_couette_newtonian();
    cfg.mesh_characteristic = 6;
    cfg.mesh_normal = 2;
    cfg.dt = dt;
    cfg.rotations = steps * dt * cfg.Omega_O / (2.0 * std::numbers::pi);
    return cfg;
}

Vector2d eval_velocity(const MixedDiscretization& disc, const Eigen::VectorXd& u,
                       const Vector2d& param) {
    const DofLayout layout{static_cast<int>(disc.pressure.count()),
                           static_cast<int>(disc.velocity.count())};
    BasisEval2D ev = disc.velocity.evaluate(param);
    Vector2d v = Vector2d::Zero();
    for (int a = 0; a < ev.count; ++a)
        v += ev.values[a] *
             Vector2d{u[layout.dx(ev.indices[a])], u[layout.dy(ev.indices[a])]};
    return v;
}

// Velocity at a physical point: a dense parametric scan seeds the inversion.
Vector2d velocity_at(const MixedDiscretization& disc, const Eigen::VectorXd& u,
                     const Vector2d& x) {
    const FloatingPatch& vel = disc.velocity;
    Vector2d best{0, 0};
    double best_d2 = std::numeric_limits<double>::max();
    for (int k = 0; k < 96; ++k) {
        for (int l = 0; l <= 8; ++l) {
            Vector2d s{vel.domain_start() +
                           (vel.domain_end() - vel.domain_start()) * (k + 0.5) / 96.0,
                       vel.eta_min() + (vel.eta_max() - vel.eta_min()) * l / 8.0};
            const double d2 = (vel.geometry(s).x - x).squaredNorm();
            if (d2 < best_d2) {
                best_d2 = d2;
                best = s;
            }
        }
    }
    return eval_velocity(disc, u, vel.geometry_invert(x, best));
}

// Steady polymeric stress of the viscometric ring flow: simple shear of
// signed rate 2 t.D n in the local (flow, gradient) frame.
Matrix2d steady_ring_stress(const Vector2d& x, const CouetteCoefficients& c,
                            const MaterialParams& mat) {
    const double r = x.norm();
    const double f = c.alpha + c.beta / (r * r);
    const double fp = -2.0 * c.beta / (r * r * r);
    Matrix2d L;
    L(0, 0) = fp * x.x() / r * x.y();
    L(0, 1) = f + fp * x.y() / r * x.y();
    L(1, 0) = -f - fp * x.x() / r * x.x();
    L(1, 1) = -fp * x.y() / r * x.x();
    const Matrix2d D = 0.5 * (L + L.transpose());
    Vector2d t = couette_velocity(x, c).normalized();
    Vector2d n{-t.y(), t.x()};
    const double rate = 2.0 * t.dot(D * n);
    return mat.eta_p * rate * (t * n.transpose() + n * t.transpose()) +
           2.0 * mat.eta_p * mat.lambda * rate * rate * (t * t.transpose());
}

} // namespace

TEST_CASE("weissenberg number of the viscoelastic defaults is exactly three halves") {
    CHECK(weissenberg(taylor_couette_oldroyd_b()) == 1.5);
    TaylorCouetteConfig cfg = taylor_couette_oldroyd_b();
    cfg.mesh_characteristic = 6;
    cfg.mesh_normal = 2;
    cfg.dt = 2e-4;
    cfg.rotations = 2 * cfg.dt * cfg.Omega_O / (2.0 * std::numbers::pi);
    CHECK(run_taylor_couette(cfg).weissenberg == 1.5);
}

TEST_CASE("coarse newtonian run holds its error plateau and stays pressure-free") {
    CouetteRunResult run = run_taylor_couette(coarse_newtonian(2e-4, 210));
    REQUIRE(run.errors.size() > 2);
    const double first = run.errors.front().err_vx;
    const double last = run.errors.back().err_vx;
    CHECK(first < 5e-4);
    CHECK(last <= 2.0 * first);
    for (const ErrorSeriesRow& row : run.errors)
        CHECK(row.err_vx < 5e-4);
    // Analytically pressure-free: plateau pressure below 1% of eta_s*Omega_O.
    CHECK(run.max_abs_pressure < 0.01 * 50.0 * 7.5);
    // A 12-point quadratic spline ring sits ~3.3% inside its control circle.
    CHECK(run.measured_inner > 95.0);
    CHECK(run.measured_inner < 101.0);
    CHECK(run.measured_outer > 191.0);
    CHECK(run.measured_outer < 202.0);
    CHECK(run.newton_iterations >= run.steps);
}

TEST_CASE("rotating the initial net by one element pitch rotates the solution") {
    const TaylorCouetteConfig cfg = coarse_newtonian(2e-4, 10);
    const double pitch = 2.0 * std::numbers::pi / (2.0 * cfg.mesh_characteristic);
    CouetteRunOptions rotated;
    rotated.rotate_net = pitch;
    CouetteRunResult a = run_taylor_couette(cfg);
    CouetteRunResult b = run_taylor_couette(cfg, rotated);
    REQUIRE(a.points.size() == b.points.size());
    Matrix2d R;
    R << std::cos(pitch), -std::sin(pitch), std::sin(pitch), std::cos(pitch);
    const double v_scale = cfg.Omega_O * cfg.R_O;
    double worst_x = 0, worst_v = 0;
    for (std::size_t k = 0; k < a.points.size(); ++k) {
        worst_x = std::max(worst_x,
                           (b.points[k].x - R * a.points[k].x).norm() / cfg.R_O);
        const Vector2d va = eval_velocity(a.disc, a.u, a.points[k].xi);
        const Vector2d vb = eval_velocity(b.disc, b.u, b.points[k].xi);
        worst_v = std::max(worst_v, (vb - R * va).norm() / v_scale);
    }
    // Seam invisibility: the periodic pitch maps the discretization onto
    // itself, so the fields must agree after back-rotation.
    CHECK(worst_x < 1e-8);
    CHECK(worst_v < 1e-8);
}

TEST_CASE("polymeric startup relaxes the pressure toward the hoop profile") {
    TaylorCouetteConfig cfg = taylor_couette_oldroyd_b();
    cfg.mesh_characteristic = 6;
    cfg.mesh_normal = 2;
    cfg.dt = 2e-4;
    const double t_end = 0.9; // nine relaxation times
    cfg.rotations = t_end * cfg.Omega_O / (2.0 * std::numbers::pi);
    CouetteRunResult run = run_taylor_couette(cfg);
    REQUIRE(run.errors.size() > 5);
    CHECK(run.errors.front().err_p > 0.9); // starts from a stress-free state
    double early = 0;
    for (const ErrorSeriesRow& row : run.errors)
        if (row.time <= 0.1 + 1e-9)
            early = row.err_p;
    const double final_p = run.errors.back().err_p;
    CHECK(final_p < 0.15 * early);
    CHECK(final_p < 0.06); // spatial floor of the 6x2 mesh
    CHECK(run.errors.back().err_vx < 2e-3);
    // The hoop-stress pressure actually built up near the inner ring.
    CHECK(run.max_abs_pressure > 1000.0);
    CHECK(run.max_abs_pressure < 4000.0);
}

TEST_CASE("steady oldroyd-b velocity matches the newtonian profile") {
    const int steps = 200;
    TaylorCouetteConfig newt = coarse_newtonian(2e-4, steps);
    TaylorCouetteConfig oldb = taylor_couette_oldroyd_b();
    oldb.mesh_characteristic = newt.mesh_characteristic;
    oldb.mesh_normal = newt.mesh_normal;
    oldb.dt = newt.dt;
    oldb.rotations = newt.rotations;

    // Start the polymeric stress at its viscometric steady state so both
    // models are compared at the same deformation.
    auto radii = measure_radii(make_annulus(oldb).velocity);
    const CouetteCoefficients c =
        couette_coefficients(radii.first, radii.second, oldb.Omega_I, oldb.Omega_O);
    MaterialParams mat = oldb.material;
    mat.model = Model::oldroyd_b;
    CouetteRunOptions seeded;
    seeded.initial_stress = [&](const Vector2d& x) {
        return steady_ring_stress(x, c, mat);
    };

    CouetteRunResult a = run_taylor_couette(newt);
    CouetteRunResult b = run_taylor_couette(oldb, seeded);
    // Seeding worked: the viscoelastic run sits on its plateau throughout.
    CHECK(b.errors.back().err_p < 0.06);
    CHECK(b.errors.back().err_vx < 2e-3);

    double num = 0, den = 0;
    for (double r : {115.0, 135.0, 155.0, 175.0, 190.0}) {
        for (int k = 0; k < 24; ++k) {
            const double phi = 2.0 * std::numbers::pi * (k + 0.5) / 24.0;
            const Vector2d x{r * std::cos(phi), r * std::sin(phi)};
            const Vector2d va = velocity_at(a.disc, a.u, x);
            const Vector2d vb = velocity_at(b.disc, b.u, x);
            num += (vb - va).squaredNorm();
            den += va.squaredNorm();
        }
    }
    const double diff = std::sqrt(num / den);
    const double larger_plateau =
        std::max(a.errors.back().err_vx, b.errors.back().err_vx);
    CHECK(diff < larger_plateau);
}

TEST_CASE("an unreachable tolerance aborts before any snapshot is emitted") {
    // The ring flow is kinematically benign (det(I + dt L) = 1 + dt^2
    // (alpha^2 - beta^2/r^4) >= 1 for every dt), so the abort path is
    // driven through solver nonconvergence instead.
    TaylorCouetteConfig cfg = coarse_newtonian(2e-4, 2);
    cfg.newton_tol = 1e-300;
    std::vector<FieldSnapshot> seen;
    CouetteRunOptions opt;
    opt.sink = [&](const FieldSnapshot& s) { seen.push_back(s); };
    CHECK_THROWS_AS(run_taylor_couette(cfg, opt), NonConvergenceError);
    // Failure precedes the first solved state: nothing valid to emit.
    CHECK(seen.empty());
}

TEST_CASE("nested meshes converge superquadratically") {
    TaylorCouetteConfig base = taylor_couette_newtonian();
    base.dt = 2e-4;
    base.rotations = 0.02;
    ConvergenceResult res = couette_convergence(base, {{6, 2}, {12, 4}});
    REQUIRE(res.meshes.size() == 2);
    REQUIRE(res.plateau_err.size() == 2);
    CHECK(res.h[0] == doctest::Approx(1.0 / 6.0));
    CHECK(res.h[1] == doctest::Approx(1.0 / 12.0));
    CHECK(res.plateau_err[1] < res.plateau_err[0]);
    CHECK(res.slope > 2.5);
    CHECK_THROWS_AS(couette_convergence(base, {{6, 2}}), ConfigError);
}

TEST_CASE("snapshot cadence covers the run and keeps the record count constant") {
    TaylorCouetteConfig cfg = coarse_newtonian(2e-4, 7);
    std::vector<FieldSnapshot> seen;
    CouetteRunOptions opt;
    opt.sink = [&](const FieldSnapshot& s) { seen.push_back(s); };
    opt.snapshot_every = 3;
    CouetteRunResult run = run_taylor_couette(cfg, opt);
    REQUIRE(run.steps == 7);
    REQUIRE(seen.size() == 3);
    CHECK(seen[0].step == 0);
    CHECK(seen[1].step == 3);
    CHECK(seen[2].step == 6);
    for (const FieldSnapshot& s : seen) {
        CHECK(s.points.size() == seen[0].points.size());
        CHECK(s.time == doctest::Approx(s.step * cfg.dt));
        CHECK(std::isfinite(s.err_vx)); // error evaluated every step here
        CHECK(s.control_net.rows() == 12 * 6); // periodic 12 x open (4 spans, r=2)
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fliga/assembly.hpp"
#include "fliga/errors.hpp"
#include "fliga/material_points.hpp"
#include "fliga/rng.hpp"

using namespace fliga;
using Eigen::MatrixX2d;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

FloatingPatch unit_square(int spans, int r) {
    FloatingPatch patch(KnotVector::open_uniform(0.0, 1.0, spans, r),
                        KnotVector::open_uniform(0.0, 1.0, spans, r));
    MatrixX2d net(patch.count(), 2);
    const std::vector<double> g = patch.parent().greville();
    for (int j = 0; j < patch.num_normal(); ++j)
        for (int i = 0; i < patch.num_parent(); ++i)
            net.row(patch.global_index(i, j)) << g[static_cast<std::size_t>(i)],
                g[static_cast<std::size_t>(j)];
    patch.set_control_net(net);
    return patch;
}

FloatingPatch annulus(int char_elems, int normal_elems, int r) {
    FloatingPatch patch(KnotVector::periodic_uniform(0.0, 10.0, char_elems, r),
                        KnotVector::open_uniform(0.0, 2.0, normal_elems, r));
    MatrixX2d net(patch.count(), 2);
    const std::vector<double> gp = patch.parent().identity_coefficients();
    const std::vector<double> gn = patch.normal().greville();
    for (int j = 0; j < patch.num_normal(); ++j)
        for (int i = 0; i < patch.num_parent(); ++i) {
            const double phi = -2.0 * M_PI * gp[static_cast<std::size_t>(i)] / 10.0;
            const double rad = 100.0 + 50.0 * gn[static_cast<std::size_t>(j)];
            net.row(patch.global_index(i, j)) << rad * std::cos(phi), rad * std::sin(phi);
        }
    patch.set_control_net(net);
    return patch;
}

VectorXd random_state(int size, uint64_t seed) {
    SplitMix64 rng(seed);
    VectorXd u(size);
    for (int i = 0; i < size; ++i)
        u[i] = rng.uniform(-1.0, 1.0);
    return u;
}

} // namespace

TEST_CASE("dof layout and subdivision pair") {
    MixedDiscretization disc(unit_square(2, 2));
    CHECK(disc.velocity.count() == 16);
    CHECK(disc.pressure.count() == 9);
    CHECK(disc.pressure.parent().order() == 2);
    CHECK(static_cast<int>(disc.pressure.parent().breakpoints().size()) == 2);

    Assembler assembler(disc);
    const DofLayout& lay = assembler.layout();
    CHECK(lay.size() == 41);
    CHECK(lay.q(0) == 0);
    CHECK(lay.dx(0) == 9);
    CHECK(lay.dy(0) == 25);

    CHECK_THROWS_AS(MixedDiscretization(unit_square(3, 2)), ConfigError);
    FloatingPatch uneven(KnotVector::open_uniform(0.0, 1.0, 2, 2),
                         KnotVector::open_uniform(0.0, 1.0, 2, 1));
    CHECK_THROWS_AS(MixedDiscretization(std::move(uneven)), ConfigError);
}

TEST_CASE("dirichlet set rejects conflicting duplicates") {
    DirichletSet bcs;
    bcs.prescribe(3, 1.5);
    CHECK_NOTHROW(bcs.prescribe(3, 1.5));
    CHECK_THROWS_AS(bcs.prescribe(3, 2.0), ConfigError);
    CHECK_THROWS_AS(bcs.prescribe(-1, 0.0), ConfigError);
    CHECK(bcs.size() == 1);
    CHECK(bcs.value(3) == 1.5);
}

TEST_CASE("zero state with zero history gives an exactly zero residual") {
    MixedDiscretization disc(unit_square(2, 2));
    std::vector<MaterialPoint> pts = init_material_points(disc.velocity, {3, 3});
    Assembler assembler(disc);
    assembler.refresh(pts);
    MaterialParams mat;
    mat.eta_s = 50.0;
    const VectorXd R = assembler.residual(VectorXd::Zero(assembler.layout().size()), mat);
    CHECK(R.norm() == 0.0);
}

TEST_CASE("tangent matches central finite differences of the residual") {
    MixedDiscretization disc(unit_square(2, 2));
    std::vector<MaterialPoint> pts = init_material_points(disc.velocity, {3, 3});
    // nonzero polymeric history exercises the constant (state-independent)
    // part of the residual; it must drop out of the tangent
    SplitMix64 rng(99);
    for (MaterialPoint& p : pts) {
        const double a = rng.uniform(-0.5, 0.5), b = rng.uniform(-0.5, 0.5),
                     c = rng.uniform(-0.5, 0.5);
        p.pi << a, b, b, c;
    }
    Assembler assembler(disc);
    assembler.refresh(pts);

    MaterialParams mat;
    mat.model = Model::oldroyd_b;
    mat.eta_s = 3.0;
    mat.eta_p = 7.0;
    mat.lambda = 2.0;

    const int n = assembler.layout().size();
    const VectorXd u = random_state(n, 1234);
    const MatrixXd K = MatrixXd(assembler.tangent(mat));
    const double eps = 1e-6;
    double worst = 0;
    for (int col = 0; col < n; ++col) {
        VectorXd up = u, um = u;
        up[col] += eps;
        um[col] -= eps;
        const VectorXd fd = (assembler.residual(up, mat) - assembler.residual(um, mat)) / (2 * eps);
        worst = std::max(worst, (fd - K.col(col)).norm() / std::max(1.0, K.col(col).norm()));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("tangent block structure") {
    MixedDiscretization disc(unit_square(2, 2));
    std::vector<MaterialPoint> pts = init_material_points(disc.velocity, {3, 3});
    Assembler assembler(disc);
    assembler.refresh(pts);

    MaterialParams mat;
    mat.eta_s = 5.0;
    const DofLayout lay = assembler.layout();
    const int A = lay.pressure_count, B = lay.velocity_count;
    const MatrixXd K = MatrixXd(assembler.tangent(mat));

    // pressure-pressure block identically zero
    CHECK(K.topLeftCorner(A, A).norm() == 0.0);

    // coupling blocks are exact negative transposes
    const MatrixXd Qd = K.topRightCorner(A, 2 * B);
    const MatrixXd Sq = K.bottomLeftCorner(2 * B, A);
    CHECK((Qd + Sq.transpose()).norm() == 0.0);

    // doubling eta_s doubles the velocity block exactly, coupling unchanged
    MaterialParams mat2 = mat;
    mat2.eta_s = 10.0;
    const MatrixXd K2 = MatrixXd(assembler.tangent(mat2));
    CHECK((K2.bottomRightCorner(2 * B, 2 * B) - 2.0 * K.bottomRightCorner(2 * B, 2 * B)).norm() ==
          0.0);
    CHECK((K2.topRightCorner(A, 2 * B) - Qd).norm() == 0.0);
}

TEST_CASE("rigid translation produces no residual") {
    MixedDiscretization disc(unit_square(2, 2));
    std::vector<MaterialPoint> pts = init_material_points(disc.velocity, {3, 3});
    Assembler assembler(disc);
    assembler.refresh(pts);
    MaterialParams mat;
    mat.eta_s = 50.0;

    VectorXd u = VectorXd::Zero(assembler.layout().size());
    for (int b = 0; b < assembler.layout().velocity_count; ++b) {
        u[assembler.layout().dx(b)] = 1.5;
        u[assembler.layout().dy(b)] = -0.3;
    }
    const VectorXd R = assembler.residual(u, mat);
    CHECK(R.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("assembly is independent of point order") {
    MixedDiscretization disc(unit_square(2, 2));
    std::vector<MaterialPoint> pts = init_material_points(disc.velocity, {3, 3});
    MaterialParams mat;
    mat.eta_s = 50.0;
    const VectorXd u = random_state(41, 7);

    Assembler a1(disc);
    a1.refresh(pts);
    const VectorXd R1 = a1.residual(u, mat);
    const Eigen::SparseMatrix<double> K1 = a1.tangent(mat);

    std::vector<MaterialPoint> shuffled = pts;
    SplitMix64 rng(11);
    for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[rng.next() % i]);
    Assembler a2(disc);
    a2.refresh(shuffled);
    const VectorXd R2 = a2.residual(u, mat);
    const Eigen::SparseMatrix<double> K2 = a2.tangent(mat);

    CHECK((R1 - R2).cwiseAbs().maxCoeff() == 0.0);
    CHECK((MatrixXd(K1) - MatrixXd(K2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("polymeric history enters the residual as an independent sum") {
    FloatingPatch patch = unit_square(2, 2);
    std::vector<MaterialPoint> pts = init_material_points(patch, {3, 3});
    Matrix2d P0;
    P0 << 1.25, -0.5, -0.5, 0.75;
    for (MaterialPoint& p : pts)
        p.pi = P0;

    Assembler assembler(patch);
    assembler.refresh(pts);
    MaterialParams newt;
    newt.eta_s = 2.0;
    MaterialParams oldb = newt;
    oldb.model = Model::oldroyd_b;
    oldb.eta_p = 9.0;
    oldb.lambda = 1.0;

    const VectorXd u = random_state(assembler.layout().size(), 21);
    const VectorXd diff = assembler.residual(u, oldb) - assembler.residual(u, newt);

    // independent accumulation straight from fresh basis evaluations
    VectorXd expected = VectorXd::Zero(assembler.layout().size());
    for (const MaterialPoint& p : pts) {
        BasisEval2D ev = patch.evaluate(p.xi);
        FloatingPatch::physical_gradients(ev);
        for (int e = 0; e < ev.count; ++e) {
            const int b = ev.indices[static_cast<std::size_t>(e)];
            const Vector2d g = ev.grad_phys[static_cast<std::size_t>(e)];
            expected[assembler.layout().dx(b)] += p.W * (P0(0, 0) * g[0] + P0(0, 1) * g[1]);
            expected[assembler.layout().dy(b)] += p.W * (P0(1, 0) * g[0] + P0(1, 1) * g[1]);
        }
    }
    CHECK((diff - expected).cwiseAbs().maxCoeff() < 1e-12 * expected.cwiseAbs().maxCoeff());
}

TEST_CASE("dirichlet elimination on a hand example") {
    GlobalSystem sys;
    sys.u = Eigen::Vector3d(1.0, 2.0, 3.0);
    sys.R = Eigen::Vector3d(1.0, 1.0, 1.0);
    MatrixXd K(3, 3);
    K << 2, 1, 0, 1, 3, 1, 0, 1, 4;
    sys.K = K.sparseView();
    sys.dirichlet.prescribe(1, 5.0);

    apply_dirichlet(sys);
    CHECK(sys.R[0] == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(sys.R[1] == doctest::Approx(-3.0).epsilon(1e-15));
    CHECK(sys.R[2] == doctest::Approx(4.0).epsilon(1e-15));
    MatrixXd Kc = MatrixXd(sys.K);
    MatrixXd expected(3, 3);
    expected << 2, 0, 0, 0, 1, 0, 0, 0, 4;
    CHECK((Kc - expected).norm() == 0.0);
}

TEST_CASE("newton solve reproduces a linear velocity field") {
    FloatingPatch patch = unit_square(2, 2);
    std::vector<MaterialPoint> pts = init_material_points(patch, {3, 3});
    Assembler assembler(patch);
    assembler.refresh(pts);
    MaterialParams mat;
    mat.eta_s = 50.0;

    const DofLayout lay = assembler.layout();
    DirichletSet bcs;
    auto pin_edge = [&](const std::vector<int>& edge) {
        for (int b : edge) {
            bcs.prescribe(lay.dx(b), patch.control_net()(b, 0));
            bcs.prescribe(lay.dy(b), patch.control_net()(b, 1));
        }
    };
    pin_edge(patch.normal_edge_indices(false));
    pin_edge(patch.normal_edge_indices(true));
    pin_edge(patch.parent_edge_indices(false));
    pin_edge(patch.parent_edge_indices(true));

    VectorXd u = VectorXd::Zero(lay.size());
    const NewtonReport rep = newton_solve(
        u, [&](const VectorXd& v) { return assembler.residual(v, mat); },
        [&](const VectorXd&) { return assembler.tangent(mat); }, bcs);
    CHECK(rep.iterations == 1); // linear problem: one solve, one verification
    CHECK(rep.residual_norm < 1e-9);
    for (int b = 0; b < lay.velocity_count; ++b) {
        CHECK(u[lay.dx(b)] == doctest::Approx(patch.control_net()(b, 0)).epsilon(1e-9));
        CHECK(u[lay.dy(b)] == doctest::Approx(patch.control_net()(b, 1)).epsilon(1e-9));
    }

    // restarting from the converged state costs zero solves
    const NewtonReport again = newton_solve(
        u, [&](const VectorXd& v) { return assembler.residual(v, mat); },
        [&](const VectorXd&) { return assembler.tangent(mat); }, bcs);
    CHECK(again.iterations == 0);
}

TEST_CASE("newton solve reports nonconvergence") {
    VectorXd u = VectorXd::Zero(2);
    Eigen::SparseMatrix<double> I(2, 2);
    I.setIdentity();
    DirichletSet none;
    try {
        newton_solve(
            u, [](const VectorXd& v) { return VectorXd::Ones(v.size()).eval(); },
            [&](const VectorXd&) { return I; }, none, 1e-9, 3);
        FAIL("expected NonConvergenceError");
    } catch (const NonConvergenceError& e) {
        CHECK(e.residual_norm == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    }
}

TEST_CASE("constant pressure spans the null space until pinned") {
    MixedDiscretization disc(annulus(8, 2, 2));
    std::vector<MaterialPoint> pts = init_material_points(disc.velocity, {3, 3});
    Assembler assembler(disc);
    assembler.refresh(pts);
    MaterialParams mat;
    mat.eta_s = 1.0;

    const DofLayout lay = assembler.layout();
    DirichletSet bcs;
    for (bool edge : {false, true})
        for (int b : disc.velocity.normal_edge_indices(edge)) {
            bcs.prescribe(lay.dx(b), 0.0);
            bcs.prescribe(lay.dy(b), 0.0);
        }

    std::vector<char> mask(static_cast<std::size_t>(lay.size()), 0);
    GlobalSystem sys;
    sys.u = VectorXd::Zero(lay.size());
    sys.R = assembler.residual(sys.u, mat);
    sys.K = assembler.tangent(mat);
    sys.dirichlet = bcs;
    apply_dirichlet(sys);

    VectorXd z = VectorXd::Zero(lay.size());
    for (int a = 0; a < lay.pressure_count; ++a)
        z[lay.q(a)] = 1.0;
    CHECK((sys.K * z).cwiseAbs().maxCoeff() < 1e-9);

    // one pressure pin makes the system solvable
    GlobalSystem pinned;
    pinned.u = VectorXd::Zero(lay.size());
    pinned.R = sys.R;
    pinned.K = assembler.tangent(mat);
    pinned.dirichlet = bcs;
    pinned.dirichlet.prescribe(lay.q(0), 0.0);
    apply_dirichlet(pinned);

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(pinned.K);
    REQUIRE(lu.info() == Eigen::Success);
    const VectorXd b = random_state(lay.size(), 5);
    const VectorXd x = lu.solve(b);
    CHECK((pinned.K * x - b).cwiseAbs().maxCoeff() < 1e-8 * b.cwiseAbs().maxCoeff());
}

TEST_CASE("cached field evaluations") {
    MixedDiscretization disc(unit_square(2, 2));
    std::vector<MaterialPoint> pts = init_material_points(disc.velocity, {2, 2});
    Assembler assembler(disc);
    assembler.refresh(pts);

    const DofLayout lay = assembler.layout();
    VectorXd u = VectorXd::Zero(lay.size());
    for (int a = 0; a < lay.pressure_count; ++a)
        u[lay.q(a)] = 2.5;
    for (int b = 0; b < lay.velocity_count; ++b) {
        u[lay.dx(b)] = disc.velocity.control_net()(b, 0);
        u[lay.dy(b)] = disc.velocity.control_net()(b, 1);
    }
    for (std::size_t s = 0; s < pts.size(); ++s) {
        const Vector2d v = assembler.point_velocity(static_cast<int>(s), u);
        CHECK((v - pts[s].x).norm() < 1e-12);
        const Matrix2d L = assembler.point_velocity_gradient(static_cast<int>(s), u);
        CHECK((L - Matrix2d::Identity()).norm() < 1e-10);
        CHECK(assembler.point_pressure(static_cast<int>(s), u) ==
              doctest::Approx(2.5).epsilon(1e-12));
    }
}

TEST_CASE("stale or missing caches are rejected") {
    FloatingPatch patch = unit_square(2, 2);
    Assembler assembler(patch);
    MaterialParams mat;
    mat.eta_s = 1.0;
    CHECK_THROWS_AS(assembler.residual(VectorXd::Zero(assembler.layout().size()), mat), Error);

    std::vector<MaterialPoint> pts = init_material_points(patch, {2, 2});
    assembler.refresh(pts);
    CHECK_THROWS_AS(assembler.residual(VectorXd::Zero(3), mat), Error);

    FloatingPatch bare(KnotVector::open_uniform(0.0, 1.0, 2, 2),
                       KnotVector::open_uniform(0.0, 1.0, 2, 2));
    CHECK_THROWS_AS(Assembler{bare}, ConfigError);
}

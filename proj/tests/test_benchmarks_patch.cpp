#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "fliga/benchmarks/patch_test.hpp"
#include "fliga/errors.hpp"

using namespace fliga;

TEST_CASE("jittered net keeps the square boundary and moves the interior") {
    PatchTestConfig cfg;
    cfg.order = 2;
    cfg.seed = 7;
    const FloatingPatch patch = make_patch(cfg, PatchQuadrature::floating);
    const Eigen::MatrixX2d& net = patch.control_net();
    const std::vector<double> g = patch.parent().greville();

    int moved = 0;
    for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 5; ++i) {
            const Vector2d c = net.row(patch.global_index(i, j));
            if (i == 0)
                CHECK(c[0] == 0.0);
            if (i == 4)
                CHECK(c[0] == 1.0);
            if (j == 0)
                CHECK(c[1] == 0.0);
            if (j == 4)
                CHECK(c[1] == 1.0);
            const Vector2d rest{g[static_cast<std::size_t>(i)],
                                g[static_cast<std::size_t>(j)]};
            CHECK((c - rest).cwiseAbs().maxCoeff() <= kPatchJitter);
            if ((c - rest).norm() > 0)
                ++moved;
        }
    CHECK(moved == 21); // all but the four corners

    // floating mode perturbs interior regulation coefficients of every row
    const RegulationGrid& reg = patch.regulation();
    for (int j = 0; j < 5; ++j) {
        CHECK(reg.h(0, j) == 0.0);
        CHECK(reg.h(4, j) == 1.0);
    }
    const FloatingPatch classical = make_patch(cfg, PatchQuadrature::classical);
    CHECK((patch.control_net() - classical.control_net()).norm() == 0.0);
    CHECK((reg.h - classical.regulation().h).norm() > 0.0);
}

TEST_CASE("quadrature budgets map to the frozen cloud sizes") {
    PatchTestConfig cfg;
    cfg.order = 1;
    cfg.seed = 3;
    const FloatingPatch patch = make_patch(cfg, PatchQuadrature::floating);
    // k = nearest integer of Q / (cells^2 (r+1)^2), so 4x4 cells of 4 points
    // give 64 k total: 100 -> 128, 1000 -> 1024, 10000 -> 9984.
    CHECK(patch_quadrature_points(patch, PatchQuadrature::floating, 1e2).size() == 128);
    CHECK(patch_quadrature_points(patch, PatchQuadrature::floating, 1e3).size() == 1024);
    CHECK(patch_quadrature_points(patch, PatchQuadrature::floating, 1e4).size() == 9984);
}

TEST_CASE("quadrature weights integrate the exact unit area") {
    // The jittered boundary stays on the unit square, so the mapped domain
    // has area exactly 1. The classical rule integrates the polynomial
    // Jacobian exactly; the floating cloud only approximately.
    for (int order : {1, 2, 3}) {
        PatchTestConfig cfg;
        cfg.order = order;
        cfg.seed = 11;
        const FloatingPatch cpatch = make_patch(cfg, PatchQuadrature::classical);
        double area = 0;
        for (const MaterialPoint& p :
             patch_quadrature_points(cpatch, PatchQuadrature::classical, 0.0))
            area += p.W;
        CHECK(area == doctest::Approx(1.0).epsilon(1e-13));

        const FloatingPatch fpatch = make_patch(cfg, PatchQuadrature::floating);
        double farea = 0;
        for (const MaterialPoint& p :
             patch_quadrature_points(fpatch, PatchQuadrature::floating, 1e3))
            farea += p.W;
        CHECK(farea == doctest::Approx(1.0).epsilon(2e-2));
    }
}

TEST_CASE("classical quadrature reproduces the linear field to rounding") {
    for (int order : {1, 2, 3}) {
        PatchTestConfig cfg;
        cfg.order = order;
        cfg.seed = 5;
        const PatchTestResult res = run_patch_test(cfg, PatchQuadrature::classical);
        CHECK(res.log10_err_x <= -12.0);
        CHECK(res.log10_err_y <= -12.0);
        // isoparametric reproduction: every dof equals v0 * its net point
        const int B = res.net.rows();
        for (int b = 0; b < B; ++b) {
            CHECK(res.solution[b] == doctest::Approx(res.net(b, 0)).epsilon(1e-10));
            CHECK(res.solution[B + b] == doctest::Approx(res.net(b, 1)).epsilon(1e-10));
        }
    }
}

TEST_CASE("floating quadrature error decays with the point budget") {
    PatchTestConfig cfg;
    cfg.order = 1;
    cfg.seed = 0;
    double prev = 1.0;
    double first = 0, last = 0;
    for (double target : {1e2, 1e3, 1e4}) {
        cfg.quadrature_target = target;
        const PatchTestResult res = run_patch_test(cfg, PatchQuadrature::floating);
        const double err = std::pow(10.0, res.log10_err_x);
        CHECK(err < prev);
        prev = err;
        if (target == 1e2)
            first = res.log10_err_x;
        if (target == 1e4)
            last = res.log10_err_x;
        // boundary dofs stay pinned to the prescribed linear data
        const int B = res.net.rows();
        for (int i = 0; i < 5; ++i) {
            CHECK(res.solution[i] == res.net(i, 0)); // bottom row, x component
            CHECK(res.solution[B + i] == res.net(i, 1));
        }
    }
    CHECK(last <= first - 1.4); // about first-order in the cloud size
}

TEST_CASE("identical seeds reproduce bit-identical nets and solutions") {
    PatchTestConfig cfg;
    cfg.order = 1;
    cfg.quadrature_target = 1e3;
    cfg.seed = 42;
    const PatchTestResult a = run_patch_test(cfg, PatchQuadrature::floating);
    const PatchTestResult b = run_patch_test(cfg, PatchQuadrature::floating);
    REQUIRE(a.net.rows() == b.net.rows());
    CHECK(std::memcmp(a.net.data(), b.net.data(),
                      sizeof(double) * static_cast<std::size_t>(a.net.size())) == 0);
    REQUIRE(a.solution.size() == b.solution.size());
    CHECK(std::memcmp(a.solution.data(), b.solution.data(),
                      sizeof(double) * static_cast<std::size_t>(a.solution.size())) == 0);

    cfg.seed = 43;
    const PatchTestResult c = run_patch_test(cfg, PatchQuadrature::floating);
    CHECK((a.net - c.net).norm() > 0.0);
}

TEST_CASE("configuration validation") {
    PatchTestConfig cfg;
    cfg.order = 4;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = PatchTestConfig{};
    cfg.quadrature_target = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = PatchTestConfig{};
    cfg.eta_s = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

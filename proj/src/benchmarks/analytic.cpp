#include "fliga/benchmarks/analytic.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "fliga/errors.hpp"

namespace fliga {

void TaylorCouetteConfig::validate() const {
    if (!(R_O > R_I) || !(R_I > 0))
        throw ConfigError("Taylor-Couette radii require R_O > R_I > 0");
    if (mesh_characteristic < 2 || mesh_normal < 1)
        throw ConfigError("Taylor-Couette mesh needs at least 2x1 pressure elements");
    if (order < 1 || order > 3)
        throw ConfigError("polynomial order must be 1, 2, or 3");
    if (!(dt > 0) || !(rotations > 0))
        throw ConfigError("time step and rotation count must be positive");
    if (points_per_element < 0 || points_per_element > 16)
        throw ConfigError("points per element per direction must be in 0..16");
    if (!(newton_tol > 0))
        throw ConfigError("newton tolerance must be positive");
    material.validate(dt);
}

TaylorCouetteConfig taylor_couette_newtonian() {
    TaylorCouetteConfig cfg;
    cfg.material.model = Model::newtonian;
    cfg.material.eta_s = 50.0;
    cfg.dt = 5.0e-5;
    return cfg;
}

TaylorCouetteConfig taylor_couette_oldroyd_b() {
    TaylorCouetteConfig cfg;
    cfg.material.model = Model::oldroyd_b;
    cfg.material.eta_s = 50.0;
    cfg.material.eta_p = 150.0;
    cfg.material.lambda = 0.1;
    cfg.dt = 1.0e-5;
    return cfg;
}

CouetteCoefficients couette_coefficients(double R_I, double R_O, double Omega_I,
                                         double Omega_O) {
    if (!(R_O > R_I) || !(R_I > 0))
        throw ConfigError("Couette coefficients require R_O > R_I > 0");
    const double denom = R_O * R_O - R_I * R_I;
    CouetteCoefficients c;
    c.alpha = (Omega_O * R_O * R_O - Omega_I * R_I * R_I) / denom;
    c.beta = (Omega_I - Omega_O) * R_I * R_I * R_O * R_O / denom;
    return c;
}

Vector2d couette_velocity(const Vector2d& x, const CouetteCoefficients& c) {
    const double r2 = x.squaredNorm();
    const double f = c.alpha + c.beta / r2;
    return Vector2d{f * x[1], -f * x[0]};
}

double couette_pressure(double r, const CouetteCoefficients& c,
                        const MaterialParams& material, double R_O) {
    if (material.model == Model::newtonian)
        return 0.0;
    const double r4 = r * r * r * r;
    const double R4 = R_O * R_O * R_O * R_O;
    return 2.0 * c.beta * c.beta * material.lambda * material.eta_p * (1.0 / r4 - 1.0 / R4);
}

ReferenceSample analytic_taylor_couette(const TaylorCouetteConfig& cfg, Model model,
                                        double r, double phi, double R_I_now,
                                        double R_O_now) {
    if (!(r > R_I_now) || !(r < R_O_now))
        throw DomainError("reference radius outside the annulus");
    const CouetteCoefficients c =
        couette_coefficients(R_I_now, R_O_now, cfg.Omega_I, cfg.Omega_O);
    MaterialParams material = cfg.material;
    material.model = model;
    ReferenceSample out;
    out.v_x = std::sin(phi) * (c.alpha * r + c.beta / r);
    out.pressure = couette_pressure(r, c, material, R_O_now);
    return out;
}

double weissenberg(const TaylorCouetteConfig& cfg) {
    return cfg.material.lambda * cfg.Omega_O * cfg.R_O / (cfg.R_O - cfg.R_I);
}

std::pair<double, double> measure_radii(const FloatingPatch& velocity, int samples) {
    if (!velocity.has_net())
        throw ConfigError("radius measurement requires the control net");
    if (samples < 1)
        throw ConfigError("radius measurement needs at least one sample");
    const double a = velocity.domain_start();
    const double b = velocity.domain_end();
    const std::size_t rows = static_cast<std::size_t>(velocity.num_normal());
    std::pair<double, double> radii{0.0, 0.0};
    for (int edge = 0; edge < 2; ++edge) {
        const double eta = edge == 0 ? velocity.eta_min() : velocity.eta_max();
        std::vector<double> guesses(rows, std::numeric_limits<double>::quiet_NaN());
        double acc = 0;
        for (int k = 0; k < samples; ++k) {
            const double xi = a + (b - a) * (k + 0.5) / samples;
            const BasisEval2D ev = velocity.geometry(Vector2d{xi, eta}, guesses);
            acc += ev.x.norm();
        }
        (edge == 0 ? radii.first : radii.second) = acc / samples;
    }
    return radii;
}

MixedDiscretization make_annulus(const TaylorCouetteConfig& cfg) {
    cfg.validate();
    const int vc = 2 * cfg.mesh_characteristic;
    const int vn = 2 * cfg.mesh_normal;
    FloatingPatch velocity(KnotVector::periodic_uniform(0.0, 10.0, vc, cfg.order),
                           KnotVector::open_uniform(0.0, 2.0, vn, cfg.order));
    velocity.set_regulation(velocity.identity_regulation());

    const std::vector<double> arc = velocity.parent().identity_coefficients();
    const std::vector<double> across = velocity.normal().greville();
    Eigen::MatrixX2d net(velocity.count(), 2);
    for (int j = 0; j < velocity.num_normal(); ++j) {
        const double r =
            cfg.R_I + (cfg.R_O - cfg.R_I) * across[static_cast<std::size_t>(j)] / 2.0;
        for (int i = 0; i < velocity.num_parent(); ++i) {
            const double phi =
                -2.0 * std::numbers::pi * arc[static_cast<std::size_t>(i)] / 10.0;
            net.row(velocity.global_index(i, j)) =
                Eigen::RowVector2d{r * std::cos(phi), r * std::sin(phi)};
        }
    }
    velocity.set_control_net(std::move(net));
    return MixedDiscretization(std::move(velocity));
}

} // namespace fliga

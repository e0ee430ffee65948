#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fliga/benchmarks/extrusion.hpp"
#include "fliga/errors.hpp"

namespace fliga {

NozzleWall::NozzleWall(const ExtrusionConfig& cfg) {
    exit_y_ = cfg.exit_y();
    bore_top_y_ = cfg.bore_top_y();
    contraction_top_y_ = cfg.contraction_top_y();
    const double barrel_x = 0.5 * cfg.D_N;
    const double bore_x = 0.5 * cfg.d_N;

    // The convergent arc rolls off the barrel (center on the material side),
    // the divergent arc rolls onto the bore (center outside); both anchor
    // tangentially and meet at a kink inside the contraction.
    const Vector2d c1{barrel_x - cfg.R_N, contraction_top_y_};
    const Vector2d c2{bore_x + cfg.r_N, bore_top_y_};
    const Vector2d delta = c2 - c1;
    const double dist = delta.norm();
    if (!(dist < cfg.R_N + cfg.r_N) || !(dist > std::fabs(cfg.R_N - cfg.r_N)))
        throw ConfigError("contraction arcs do not intersect; check D_N, d_N, R_N, r_N, c_N");
    const double along = (dist * dist + cfg.R_N * cfg.R_N - cfg.r_N * cfg.r_N) / (2 * dist);
    const double off2 = cfg.R_N * cfg.R_N - along * along;
    if (!(off2 > 0))
        throw ConfigError("contraction arcs are tangent; the wall kink is undefined");
    const Vector2d e = delta / dist;
    const Vector2d base = c1 + along * e;
    const Vector2d perp{-e.y(), e.x()};
    junction_ = base + std::sqrt(off2) * perp;
    const Vector2d lower = base - std::sqrt(off2) * perp;
    if (junction_.y() < lower.y())
        junction_ = lower;
    if (!(junction_.y() > bore_top_y_) || !(junction_.y() < contraction_top_y_))
        throw ConfigError("contraction kink fell outside the contraction band");

    WallPiece barrel;
    barrel.kind = WallPiece::Kind::segment;
    barrel.p0 = Vector2d{barrel_x, cfg.top_y0() + 1.0};
    barrel.p1 = Vector2d{barrel_x, contraction_top_y_};
    barrel.normal = Vector2d{-1, 0};
    pieces_.push_back(barrel);

    WallPiece convergent;
    convergent.kind = WallPiece::Kind::arc;
    convergent.center = c1;
    convergent.radius = cfg.R_N;
    convergent.theta0 = std::atan2(junction_.y() - c1.y(), junction_.x() - c1.x());
    convergent.theta1 = 0.0;
    convergent.side = -1.0; // material on the center side
    pieces_.push_back(convergent);

    WallPiece divergent;
    divergent.kind = WallPiece::Kind::arc;
    divergent.center = c2;
    divergent.radius = cfg.r_N;
    divergent.theta0 = std::atan2(junction_.y() - c2.y(), junction_.x() - c2.x());
    divergent.theta1 = std::numbers::pi;
    divergent.side = 1.0;
    pieces_.push_back(divergent);

    WallPiece bore;
    bore.kind = WallPiece::Kind::segment;
    bore.p0 = Vector2d{bore_x, bore_top_y_};
    bore.p1 = Vector2d{bore_x, exit_y_};
    bore.normal = Vector2d{-1, 0};
    pieces_.push_back(bore);

    WallPiece lip;
    lip.kind = WallPiece::Kind::arc;
    lip.center = Vector2d{bore_x + cfg.e_N, exit_y_};
    lip.radius = cfg.e_N;
    lip.theta0 = std::numbers::pi;
    lip.theta1 = 1.5 * std::numbers::pi;
    lip.side = 1.0;
    pieces_.push_back(lip);
}

WallHit NozzleWall::project(const Vector2d& p) const {
    const bool mirror = p.x() < 0;
    const Vector2d q{mirror ? -p.x() : p.x(), p.y()};
    WallHit best;
    best.dist2 = std::numeric_limits<double>::infinity();
    for (const WallPiece& w : pieces_) {
        Vector2d cp, n;
        if (w.kind == WallPiece::Kind::segment) {
            const Vector2d ab = w.p1 - w.p0;
            double t = ab.squaredNorm() > 0 ? (q - w.p0).dot(ab) / ab.squaredNorm() : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            cp = w.p0 + t * ab;
            n = w.normal;
        } else {
            const double mid = 0.5 * (w.theta0 + w.theta1);
            const double half = 0.5 * (w.theta1 - w.theta0);
            const Vector2d v = q - w.center;
            double theta = mid;
            if (v.squaredNorm() > 1e-24) {
                double off = std::atan2(v.y(), v.x()) - mid;
                off = std::atan2(std::sin(off), std::cos(off));
                theta = mid + std::clamp(off, -half, half);
            }
            const Vector2d radial{std::cos(theta), std::sin(theta)};
            cp = w.center + w.radius * radial;
            n = w.side * radial;
        }
        const double dist2 = (q - cp).squaredNorm();
        if (dist2 < best.dist2) {
            best.point = cp;
            best.normal = n;
            best.gap = n.dot(q - cp);
            best.dist2 = dist2;
        }
    }
    if (mirror) {
        best.point.x() = -best.point.x();
        best.normal.x() = -best.normal.x();
    }
    return best;
}

double NozzleWall::half_width(double y) const {
    const WallPiece& convergent = pieces_[1];
    const WallPiece& divergent = pieces_[2];
    if (y >= contraction_top_y_)
        return pieces_[0].p1.x();
    if (y >= junction_.y()) {
        const double dy = y - convergent.center.y();
        return convergent.center.x() +
               std::sqrt(std::max(0.0, convergent.radius * convergent.radius - dy * dy));
    }
    if (y >= bore_top_y_) {
        const double dy = y - divergent.center.y();
        return divergent.center.x() -
               std::sqrt(std::max(0.0, divergent.radius * divergent.radius - dy * dy));
    }
    if (y >= exit_y_ - 1e-9)
        return pieces_[3].p0.x();
    throw DomainError("channel width undefined below the bore outlet");
}

double MuProfile::at_height(double y) const {
    const double s = top_y - y;
    if (s <= s0)
        return 0.0;
    if (sP <= 0)
        return mu_max;
    const double u = (s - s0) / sP;
    if (u >= 1)
        return mu_max;
    if (u < 0.5)
        return 2 * u * u * mu_max;
    return (1 - 2 * (1 - u) * (1 - u)) * mu_max;
}

MuProfile friction_profile(const ExtrusionConfig& cfg, double top_y) {
    return {top_y, cfg.s_0, top_y - cfg.s_0 - cfg.plateau_y(), cfg.mu};
}

ContactForce evaluate_contact(const NozzleWall& wall, const MuProfile& mu, double k,
                              double dt, const Vector2d& p, const Vector2d& d) {
    const WallHit hit = wall.project(p);
    ContactForce out;
    out.gap = hit.gap;
    out.mu = mu.at_height(p.y());
    const double g_pred = hit.gap + dt * hit.normal.dot(d);
    if (g_pred >= 0)
        return out;
    out.active = true;

    const Vector2d n = hit.normal;
    const Vector2d t{-n.y(), n.x()};
    const double f_n = -k * g_pred;
    out.force = f_n * n;
    out.dforce_dd = -k * dt * n * n.transpose();

    const double bound = out.mu * f_n;
    if (bound <= 0)
        return out; // frictionless band: free tangential sliding
    const double v_t = t.dot(d);
    if (k * dt * std::fabs(v_t) <= bound) {
        out.force -= k * dt * v_t * t;
        out.dforce_dd -= k * dt * t * t.transpose();
    } else {
        out.slipping = true;
        const double sgn = v_t > 0 ? 1.0 : -1.0;
        out.force -= sgn * bound * t;
        // bound = -mu k g_pred falls with the predicted gap
        out.dforce_dd += sgn * out.mu * k * dt * t * n.transpose();
    }
    return out;
}

} // namespace fliga

#pragma once

#include <Eigen/Dense>

#include "fliga/assembly.hpp"

namespace fliga {

/// Point evaluation of the solved fields at a physical position, for
/// post-processing probes (flux lines, centerline profiles, seam checks).
struct FieldSample {
    Vector2d v{0, 0};
    double p = 0;
    Vector2d param{0, 0}; // parametric pre-image, reusable as the next guess
};

/// Invert the velocity geometry map at x (Newton from `param_guess`) and
/// evaluate velocity and pressure there. `param_guess` is updated in place so
/// consecutive samples along a path warm-start each other.
FieldSample sample_fields(const MixedDiscretization& disc, const Eigen::VectorXd& u,
                          const Vector2d& x, Vector2d& param_guess);

} // namespace fliga

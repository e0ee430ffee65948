#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fliga/floating_patch.hpp"
#include "fliga/materials.hpp"

namespace fliga {

/// Lagrangian quadrature point: carries position, physical weight, the
/// parametric pull-back cache, the polymeric stress, and the previous step's
/// kinematic fields for the explicit constitutive update.
struct MaterialPoint {
    int id = 0;
    Vector2d x{0, 0};
    double W = 0;
    Vector2d xi{0, 0};
    Matrix2d pi = Matrix2d::Zero();
    Matrix2d prev_L = Matrix2d::Zero(); // velocity gradient
    Matrix2d prev_D = Matrix2d::Zero(); // strain rate

    // warm-start cache for the per-row floating map inversions
    int cache_first_row = -1;
    std::array<double, kMaxOrder + 1> parent_cache{};
};

/// Tensor-product Gauss points per parametric element of the current mesh
/// (intended for the initial classical configuration): physical positions
/// x = F(xi) and weights W = What * det(J). Throws TanglingError on
/// non-positive Jacobians.
std::vector<MaterialPoint> init_material_points(const FloatingPatch& velocity_patch,
                                                std::pair<int, int> points_per_element,
                                                const Matrix2d& pi0 = Matrix2d::Zero());

/// Forward-Euler advection: x += v dt, W *= det(I + L dt); stores L and
/// sym(L) for the next constitutive update. Throws StepTooLargeError when a
/// weight update turns non-positive.
void advect_material_points(
    std::vector<MaterialPoint>& points,
    const std::function<std::pair<Vector2d, Matrix2d>(const MaterialPoint&)>& velocity_field,
    double dt);

/// Refresh the parametric pull-back xi = F^{-1}(x) for every point, using the
/// cached coordinates as Newton guesses. Points a hair outside the domain
/// image (relative 2e-9) are accepted at the clamped boundary coordinates.
/// Inversion failures carry the offending point id.
void pull_back_material_points(std::vector<MaterialPoint>& points,
                               const FloatingPatch& velocity_patch);

} // namespace fliga

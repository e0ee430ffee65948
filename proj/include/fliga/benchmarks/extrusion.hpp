#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fliga/benchmarks/output.hpp"
#include "fliga/material_points.hpp"
#include "fliga/updates.hpp"

namespace fliga {

/// Nozzle extrusion benchmark configuration. Lengths in mm, the substrate
/// plane is y = 0 and the channel axis is x = 0. Mesh sizes count *pressure*
/// elements; the velocity mesh is twice as fine in both directions.
struct ExtrusionConfig {
    double s_0 = 0.25;  // frictionless inlet band depth below the top boundary
    double s_P0 = 5.15; // parabolic friction transition length at t = 0
    double s_N = 1.1;   // straight barrel section above the contraction
    double c_N = 2.0;   // contraction height
    double t_N = 0.8;   // bore channel height (nozzle tip)
    double l_S = 0.525; // tip-to-substrate clearance
    double D_N = 2.0;   // barrel diameter
    double d_N = 0.5;   // bore diameter
    double R_N = 2.5;   // convergent wall arc radius
    double r_N = 1.2;   // divergent wall arc radius
    double e_N = 0.3;   // exit lip radius
    double v_N = 10.0;  // inlet plug speed (mm/s)
    double v_S = 38.0;  // substrate speed, toward -x (mm/s)
    double k = 1.0e8;   // wall penalty factor
    double mu = 0.075;  // plateau friction coefficient

    MaterialParams material{Model::oldroyd_b, 50.0, 1500.0, 0.04, Matrix2d::Zero()};

    double dt = 2.0e-5; // s
    int steps = 5000;
    int order = 2;
    int mesh_characteristic = 480; // pressure elements along the extrusion axis
    int mesh_normal = 4;           // pressure elements across the channel
    std::pair<int, int> points_per_element = {8, 3}; // per velocity element (axis x cross)

    double blending_offset = 1.0; // d of the regulation-update ramp profile
    int stabilization_row = 11;   // 1-based source row of the horizontal hold
                                  // applied to the two top control rows
    double attach_height = 0.05;  // deposit pins to the moving substrate below
                                  // this height (raised off y = 0 so the
                                  // parametric corners never degenerate)
    std::uint64_t seed = 0;       // echoed in reports; the run is deterministic
    double newton_tol = 1e-5;     // absolute residual norm
    int max_newton = 25;

    // Wall anchor heights, stacked upward from the substrate.
    double exit_y() const { return l_S + e_N; }                     // bore outlet plane
    double bore_top_y() const { return exit_y() + t_N; }            // bore inlet
    double contraction_top_y() const { return bore_top_y() + c_N; } // barrel end
    double plateau_y() const { return contraction_top_y() + s_N; }  // friction plateau start
    double top_y0() const { return plateau_y() + s_P0 + s_0; }      // initial free surface

    /// Pivot of the level-function corner fan: just outside the nozzle lip.
    Vector2d level_pivot() const { return {-0.5 * d_N - e_N - 0.1, exit_y() + 0.1}; }

    void validate() const;
};

/// One smooth piece of the right nozzle wall. Segments carry a constant
/// inward normal; arcs have inward normal side*(cos t, sin t) with the
/// angular range spanning less than a half turn.
struct WallPiece {
    enum class Kind { segment, arc } kind = Kind::segment;
    Vector2d p0 = Vector2d::Zero(); // segment endpoints, upper first
    Vector2d p1 = Vector2d::Zero();
    Vector2d normal = Vector2d::Zero();
    Vector2d center = Vector2d::Zero(); // arc data
    double radius = 0;
    double theta0 = 0;
    double theta1 = 0;
    double side = 1;
};

/// Closest-point query result; the gap is signed along the inward normal
/// (negative = penetration). Queries beyond a piece's parameterization clamp
/// to the nearest end.
struct WallHit {
    Vector2d point = Vector2d::Zero();
    Vector2d normal = Vector2d::Zero();
    double gap = 0;
    double dist2 = 0;
};

/// Nozzle wall built from the config geometry. Only the right half is
/// stored (barrel segment, convergent arc, divergent arc, bore segment,
/// exit lip arc, top to bottom); queries at x < 0 mirror through the axis.
class NozzleWall {
public:
    explicit NozzleWall(const ExtrusionConfig& cfg);

    const std::vector<WallPiece>& pieces() const { return pieces_; }
    Vector2d arc_junction() const { return junction_; } // convergent/divergent kink

    /// Nearest wall point across all pieces.
    WallHit project(const Vector2d& p) const;

    /// Single-valued channel half width for y in [exit_y, barrel top]; used
    /// to seed the initial net exactly on the wall. Throws DomainError below
    /// the bore outlet plane.
    double half_width(double y) const;

private:
    std::vector<WallPiece> pieces_;
    Vector2d junction_ = Vector2d::Zero();
    double exit_y_ = 0;
    double bore_top_y_ = 0;
    double contraction_top_y_ = 0;
};

/// Depth-graded Coulomb coefficient below the current top boundary: zero
/// over the inlet band, two equal parabolic sections rising to the plateau
/// across the transition length, plateau beyond.
struct MuProfile {
    double top_y = 0;  // current mean height of the top control row
    double s0 = 0;     // frictionless band depth
    double sP = 0;     // transition length (<= 0 collapses to a step)
    double mu_max = 0;

    double at_height(double y) const;
};

/// Transition length from the current top boundary: the plateau onset stays
/// anchored at cfg.plateau_y() while the band below the inlet shrinks.
MuProfile friction_profile(const ExtrusionConfig& cfg, double top_y);

/// Penalty contact response of one boundary node.
struct ContactForce {
    bool active = false;
    bool slipping = false;
    double gap = 0; // current signed gap
    double mu = 0;  // friction coefficient at the node height
    Vector2d force = Vector2d::Zero();     // external force on the node
    Matrix2d dforce_dd = Matrix2d::Zero(); // derivative w.r.t. the node velocity
};

/// Node-to-wall penalty law at node position p with velocity d: the
/// predicted gap g + dt n.d drives the normal force k|g_pred|; the
/// tangential force opposes sliding with magnitude min(k dt |v_t|,
/// mu |F_n|) (velocity-regularized stick under the Coulomb bound).
ContactForce evaluate_contact(const NozzleWall& wall, const MuProfile& mu, double k,
                              double dt, const Vector2d& p, const Vector2d& d);

/// Initial control net: rows at the linear blend of the parent Greville
/// ordinates between the initial top and the bore outlet, columns scaled to
/// the channel half width so the boundary columns sit on the wall.
Eigen::MatrixX2d initial_extrusion_net(const FloatingPatch& patch, const NozzleWall& wall,
                                       const ExtrusionConfig& cfg);

/// Level-set gradient steering the floating maps: uniformly downward while
/// the jet is free; once deposit is attached, a quarter-turn fan around the
/// pivot rotates the levels into the substrate direction.
LevelFunction extrusion_level(bool attached, const Vector2d& pivot);

struct ExtrusionDiagnostics {
    int step = 0;
    double time = 0;
    double peak_pressure = 0;      // max centerline pressure
    double exit_pressure = 0;      // centerline pressure at the bore outlet
    bool contraction_monotone = true; // non-increasing along the contraction flow
    double inlet_flux = 0;         // v_N * D_N
    double bore_flux = 0;          // through the bore mid cross-section
    double extrudate_width = 0;    // widest free-jet extent below the exit
    int attached_controls = 0;
    int active_contacts = 0;
};

struct ExtrusionRunOptions {
    SnapshotSink sink;        // optional; also receives the final (or last-good) state
    int snapshot_every = 0;   // 0 = final snapshot only
    int diagnostics_every = 0; // 0 = about 25 evaluations over the run
};

struct ExtrusionResult {
    std::vector<ExtrusionDiagnostics> diagnostics; // rows at the evaluated steps
    int steps = 0;
    long newton_iterations = 0; // linear solves over the whole run
    int first_attach_step = -1; // -1 = never attached
    std::vector<int> marker_ids; // material points seeding the tracked lines
    MixedDiscretization disc;    // final discretization state
    Eigen::VectorXd u;           // last solved dof vector
    std::vector<MaterialPoint> points;
};

/// Time-step the frictional nozzle flow: solve the current configuration
/// with the penalty wall forces (polymeric stress explicit from the previous
/// step), then advect points, control net, and regulation grid. The top two
/// control rows hold the inlet plug (dy = -v_N on the boundary row) with the
/// horizontal stabilization copied from the previous step's source row; any
/// control point dropping below the attach height is pinned irreversibly to
/// the substrate motion (-v_S, 0), and the first attachment switches the
/// level-function branch. On tangling/inversion/divergence aborts the last
/// good snapshot is emitted to the sink before the error propagates.
ExtrusionResult run_extrusion(const ExtrusionConfig& cfg,
                              const ExtrusionRunOptions& options = {});

} // namespace fliga

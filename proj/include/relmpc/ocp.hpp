#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "relmpc/errors.hpp"
#include "relmpc/frames.hpp"
#include "relmpc/vehicle.hpp"

namespace relmpc {

// Ordered observer -> target edge of the sensing/formation graph.
struct FormationPair {
  int observer{0};
  int target{1};
};

struct FormationGraph {
  std::vector<FormationPair> pairs;
};

// Scalar weights expanded to diagonal blocks of the stage cost. The defaults
// balance two closed-loop requirements that pull in opposite directions:
// tracking must stay stiff enough to fly the agile segments, yet soft enough
// that body-velocity measurement noise is filtered rather than amplified into
// formation jitter. Torque deviations in particular need a noticeably stiffer
// penalty than thrust: with the full-step iteration scheme a looser setting
// lets reference jumps command violent attitude slews that destabilize the
// loop under sensing noise.
struct Weights {
  double formation{5.0};
  double position{0.5};
  double yaw{1.0};
  double force{0.01};
  double torque{0.3};
};

// Per-stage references: desired relative displacement per graph pair (in the
// observer's control frame) plus the leader's earth-frame position and yaw.
struct StageReference {
  std::vector<Eigen::Vector3d> formation_desired;
  Eigen::Vector3d leader_position{Eigen::Vector3d::Zero()};
  double leader_yaw{0.0};
};

struct HorizonReferences {
  std::vector<StageReference> stages;  // horizon + 1 entries
};

// State/input iterate over the horizon (multiple-shooting layout: states has
// horizon+1 entries, inputs has horizon entries).
struct Trajectory {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;
};

// Static description shared by every horizon: graph, weights, prediction
// parameters and discretization.
struct OcpConfig {
  FormationGraph graph;
  Weights weights;
  std::vector<VehicleParams> params;
  int horizon{15};
  double dt{0.05};
  int leader{0};
};

// One vehicle's processed on-board feedback at horizon start.
struct VehicleFeedback {
  Eigen::Vector3d velocity_body{Eigen::Vector3d::Zero()};  // optic flow
  double roll{0.0};                                        // IMU
  double pitch{0.0};                                       // IMU
  Eigen::Vector3d body_rates{Eigen::Vector3d::Zero()};     // gyro
};

// Everything the centralized controller receives in one control cycle.
struct SensingSnapshot {
  std::vector<VehicleFeedback> vehicles;
  std::vector<RelativeMeasurement> measurements;
  Eigen::Vector3d leader_position{Eigen::Vector3d::Zero()};  // absolute unit
  double leader_yaw{0.0};                                    // absolute unit
};

// One fully-assembled optimal control problem over a horizon, expressed in
// the per-vehicle MPC frames anchored at horizon start.
struct HorizonProblem {
  int n_vehicles{3};
  int horizon{15};
  double dt{0.05};
  int leader{0};
  Eigen::VectorXd initial_state;  // 12 * n_vehicles
  Trajectory guess;
  HorizonReferences refs;
  FormationGraph graph;
  Weights weights;
  std::vector<VehicleParams> params;        // prediction model, per vehicle
  std::vector<double> pair_rel_yaw;         // target frame yaw rel. observer frame
  std::vector<Eigen::Vector3d> pair_offset; // target frame origin in observer frame
  FramePose leader_frame;
  Eigen::VectorXd input_lower;  // 4 * n_vehicles
  Eigen::VectorXd input_upper;

  int state_dim() const { return 12 * n_vehicles; }
  int input_dim() const { return 4 * n_vehicles; }
};

int stage_residual_dim(const HorizonProblem& problem);
int terminal_residual_dim(const HorizonProblem& problem);

// Displacement of the target vehicle in the observer's control frame, given
// both states in their own MPC frames plus the inter-frame relation.
Eigen::Vector3d pair_actual_displacement(const VehicleState& state_obs,
                                         const VehicleState& state_tgt,
                                         double rel_yaw, const Eigen::Vector3d& offset);

// Weighted residual stack of one stage: formation terms per graph pair, leader
// position/yaw tracking, then per-vehicle force and torque terms. Jacobians
// (optional) are with respect to the stacked state and input.
void stage_residuals(const HorizonProblem& problem, int stage, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& u, Eigen::VectorXd& r,
                     Eigen::MatrixXd* jx = nullptr, Eigen::MatrixXd* ju = nullptr);

// Terminal residuals: the same stack without the input-dependent terms.
void terminal_residuals(const HorizonProblem& problem, const Eigen::VectorXd& x,
                        Eigen::VectorXd& r, Eigen::MatrixXd* jx = nullptr);

// Block-diagonal multi-vehicle integrator step with sensitivities.
void stacked_dynamics_step(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                           const std::vector<VehicleParams>& params, double dt,
                           Eigen::VectorXd& x_next, Eigen::MatrixXd* a = nullptr,
                           Eigen::MatrixXd* b = nullptr);

// Total cost 0.5 * sum of squared residuals of a trajectory iterate.
double horizon_cost(const HorizonProblem& problem, const Trajectory& traj);

// Hover-input rollout used when no previous solution exists.
Trajectory make_hover_guess(const Eigen::VectorXd& initial_state,
                            const std::vector<VehicleParams>& params, int horizon,
                            double dt);

// Assemble the horizon problem from one sensing snapshot: fresh MPC frames
// (positions zero, yaw zero, roll/pitch and velocity from on-board sensing),
// relative frame geometry from mutual measurements, leader frame from the
// absolute unit.
HorizonProblem build_horizon_problem(const SensingSnapshot& snapshot,
                                     const std::optional<Trajectory>& guess,
                                     const HorizonReferences& refs,
                                     const OcpConfig& config);

}  // namespace relmpc

#include "relmpc/ocp.hpp"

#include <cmath>
#include <string>

#include "relmpc/rotation.hpp"

namespace relmpc {

namespace {

void check_stacked_dims(const HorizonProblem& problem, const Eigen::VectorXd& x,
                        const Eigen::VectorXd* u, const char* where) {
  if (x.size() != problem.state_dim()) {
    throw AssemblyError(std::string(where) + ": stacked state has size " +
                        std::to_string(x.size()) + ", expected " +
                        std::to_string(problem.state_dim()));
  }
  if (u != nullptr && u->size() != problem.input_dim()) {
    throw AssemblyError(std::string(where) + ": stacked input has size " +
                        std::to_string(u->size()) + ", expected " +
                        std::to_string(problem.input_dim()));
  }
}

const StageReference& stage_ref(const HorizonProblem& problem, int stage,
                                const char* where) {
  if (stage < 0 || stage >= static_cast<int>(problem.refs.stages.size())) {
    throw AssemblyError(std::string(where) + ": stage " + std::to_string(stage) +
                        " outside reference schedule");
  }
  const StageReference& ref = problem.refs.stages[stage];
  if (ref.formation_desired.size() != problem.graph.pairs.size()) {
    throw AssemblyError(std::string(where) + ": reference holds " +
                        std::to_string(ref.formation_desired.size()) +
                        " formation entries for " +
                        std::to_string(problem.graph.pairs.size()) + " pairs");
  }
  return ref;
}

// Rows shared by stage and terminal residuals: formation terms for every
// graph pair, then leader position and yaw tracking.
void tracking_rows(const HorizonProblem& problem, const StageReference& ref,
                   const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jx) {
  const double sw_f = std::sqrt(problem.weights.formation);
  const double sw_x = std::sqrt(problem.weights.position);
  const double sw_t = std::sqrt(problem.weights.yaw);
  int row = 0;
  for (std::size_t p = 0; p < problem.graph.pairs.size(); ++p) {
    const int i = problem.graph.pairs[p].observer;
    const int j = problem.graph.pairs[p].target;
    const double rel_yaw = problem.pair_rel_yaw[p];
    const double psi_i = x[12 * i + 8];
    const Eigen::Vector3d inner = rot_z(rel_yaw) * x.segment<3>(12 * j) +
                                  problem.pair_offset[p] - x.segment<3>(12 * i);
    const Eigen::Vector3d actual = rot_z(-psi_i) * inner;
    r.segment<3>(row) = sw_f * (ref.formation_desired[p] - actual);
    if (jx != nullptr) {
      jx->block<3, 3>(row, 12 * j) = -sw_f * rot_z(rel_yaw - psi_i);
      jx->block<3, 3>(row, 12 * i) = sw_f * rot_z(-psi_i);
      jx->block<3, 1>(row, 12 * i + 8) += sw_f * drot_z(-psi_i) * inner;
    }
    row += 3;
  }

  const int lead = 12 * problem.leader;
  const double lambda = problem.leader_frame.yaw_offset;
  const Eigen::Vector3d global = rot_z(lambda) * x.segment<3>(lead) +
                                 problem.leader_frame.origin_offset;
  r.segment<3>(row) = sw_x * (ref.leader_position - global);
  if (jx != nullptr) jx->block<3, 3>(row, lead) = -sw_x * rot_z(lambda);
  row += 3;

  r[row] = sw_t * wrap_pi(ref.leader_yaw - x[lead + 8] - lambda);
  if (jx != nullptr) (*jx)(row, lead + 8) = -sw_t;
}

}  // namespace

int stage_residual_dim(const HorizonProblem& problem) {
  return 3 * static_cast<int>(problem.graph.pairs.size()) + 4 + 6 * problem.n_vehicles;
}

int terminal_residual_dim(const HorizonProblem& problem) {
  return 3 * static_cast<int>(problem.graph.pairs.size()) + 4;
}

Eigen::Vector3d pair_actual_displacement(const VehicleState& state_obs,
                                         const VehicleState& state_tgt,
                                         double rel_yaw, const Eigen::Vector3d& offset) {
  const Eigen::Vector3d inner =
      rot_z(rel_yaw) * state_tgt.position + offset - state_obs.position;
  return rot_z(-state_obs.euler.z()) * inner;
}

void stage_residuals(const HorizonProblem& problem, int stage, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& u, Eigen::VectorXd& r, Eigen::MatrixXd* jx,
                     Eigen::MatrixXd* ju) {
  check_stacked_dims(problem, x, &u, "stage_residuals");
  const StageReference& ref = stage_ref(problem, stage, "stage_residuals");
  const int nr = stage_residual_dim(problem);
  r.setZero(nr);
  if (jx != nullptr) jx->setZero(nr, problem.state_dim());
  if (ju != nullptr) ju->setZero(nr, problem.input_dim());

  tracking_rows(problem, ref, x, r, jx);

  const double sw_force = std::sqrt(problem.weights.force);
  const double sw_torque = std::sqrt(problem.weights.torque);
  int row = 3 * static_cast<int>(problem.graph.pairs.size()) + 4;
  for (int v = 0; v < problem.n_vehicles; ++v) {
    const VehicleParams& p = problem.params[v];
    const Eigen::Matrix4d mix = mixer_matrix(p);
    const Eigen::Vector4d u_v = u.segment<4>(4 * v);
    const Eigen::Vector4d tw = mix * u_v;
    const Eigen::Vector3d body_force(0.0, 0.0, -tw[0]);
    const Eigen::Vector3d rpy = x.segment<3>(12 * v + 6);
    const Eigen::Matrix3d rot = euler_to_rotation(rpy);

    r.segment<3>(row) = sw_force * (rot * body_force +
                                    Eigen::Vector3d(0.0, 0.0, p.mass * p.gravity));
    if (jx != nullptr) {
      jx->block<3, 3>(row, 12 * v + 6) =
          sw_force * rotation_times_vector_jacobian(rpy, body_force);
    }
    if (ju != nullptr) {
      ju->block<3, 4>(row, 4 * v) =
          sw_force * (-p.thrust_coeff) * rot.col(2) * Eigen::RowVector4d::Ones();
    }
    row += 3;

    r.segment<3>(row) = sw_torque * tw.tail<3>();
    if (ju != nullptr) {
      ju->block<3, 4>(row, 4 * v) = sw_torque * mix.bottomRows<3>();
    }
    row += 3;
  }
}

void terminal_residuals(const HorizonProblem& problem, const Eigen::VectorXd& x,
                        Eigen::VectorXd& r, Eigen::MatrixXd* jx) {
  check_stacked_dims(problem, x, nullptr, "terminal_residuals");
  const StageReference& ref = stage_ref(problem, problem.horizon, "terminal_residuals");
  const int nr = terminal_residual_dim(problem);
  r.setZero(nr);
  if (jx != nullptr) jx->setZero(nr, problem.state_dim());
  tracking_rows(problem, ref, x, r, jx);
}

void stacked_dynamics_step(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                           const std::vector<VehicleParams>& params, double dt,
                           Eigen::VectorXd& x_next, Eigen::MatrixXd* a,
                           Eigen::MatrixXd* b) {
  const int n = static_cast<int>(params.size());
  if (x.size() != 12 * n || u.size() != 4 * n) {
    throw AssemblyError("stacked_dynamics_step: state/input size does not match " +
                        std::to_string(n) + " vehicles");
  }
  x_next.resize(12 * n);
  if (a != nullptr) a->setZero(12 * n, 12 * n);
  if (b != nullptr) b->setZero(12 * n, 4 * n);
  for (int v = 0; v < n; ++v) {
    const VehicleState s = VehicleState::from_vector(x.segment<12>(12 * v));
    PropellerSpeeds in;
    in.omega_sq = u.segment<4>(4 * v);
    if (a != nullptr || b != nullptr) {
      Mat12 av;
      Mat12x4 bv;
      const VehicleState next = rk4_step_sensitivities(s, in, params[v], dt, av, bv);
      x_next.segment<12>(12 * v) = next.to_vector();
      if (a != nullptr) a->block<12, 12>(12 * v, 12 * v) = av;
      if (b != nullptr) b->block<12, 4>(12 * v, 4 * v) = bv;
    } else {
      x_next.segment<12>(12 * v) = rk4_step(s, in, params[v], dt).to_vector();
    }
  }
}

double horizon_cost(const HorizonProblem& problem, const Trajectory& traj) {
  if (traj.states.size() != static_cast<std::size_t>(problem.horizon + 1) ||
      traj.inputs.size() != static_cast<std::size_t>(problem.horizon)) {
    throw AssemblyError("horizon_cost: trajectory length mismatch");
  }
  double cost = 0.0;
  Eigen::VectorXd r;
  for (int k = 0; k < problem.horizon; ++k) {
    stage_residuals(problem, k, traj.states[k], traj.inputs[k], r);
    cost += 0.5 * r.squaredNorm();
  }
  terminal_residuals(problem, traj.states[problem.horizon], r);
  cost += 0.5 * r.squaredNorm();
  return cost;
}

Trajectory make_hover_guess(const Eigen::VectorXd& initial_state,
                            const std::vector<VehicleParams>& params, int horizon,
                            double dt) {
  const int n = static_cast<int>(params.size());
  Eigen::VectorXd hover(4 * n);
  for (int v = 0; v < n; ++v) {
    hover.segment<4>(4 * v).setConstant(params[v].hover_omega_sq());
  }
  Trajectory traj;
  traj.states.reserve(horizon + 1);
  traj.inputs.assign(horizon, hover);
  traj.states.push_back(initial_state);
  Eigen::VectorXd next;
  for (int k = 0; k < horizon; ++k) {
    stacked_dynamics_step(traj.states.back(), hover, params, dt, next);
    traj.states.push_back(next);
  }
  return traj;
}

HorizonProblem build_horizon_problem(const SensingSnapshot& snapshot,
                                     const std::optional<Trajectory>& guess,
                                     const HorizonReferences& refs,
                                     const OcpConfig& config) {
  const int n = static_cast<int>(config.params.size());
  if (static_cast<int>(snapshot.vehicles.size()) != n) {
    throw AssemblyError("build_horizon_problem: snapshot covers " +
                        std::to_string(snapshot.vehicles.size()) + " of " +
                        std::to_string(n) + " vehicles");
  }
  if (static_cast<int>(refs.stages.size()) != config.horizon + 1) {
    throw AssemblyError("build_horizon_problem: reference schedule has " +
                        std::to_string(refs.stages.size()) + " stages, expected " +
                        std::to_string(config.horizon + 1));
  }

  HorizonProblem prob;
  prob.n_vehicles = n;
  prob.horizon = config.horizon;
  prob.dt = config.dt;
  prob.leader = config.leader;
  prob.graph = config.graph;
  prob.weights = config.weights;
  prob.params = config.params;
  prob.refs = refs;

  // Fresh MPC frames: position and yaw restart at zero; roll/pitch, body
  // rates and tilt-compensated velocity come straight from on-board sensing.
  prob.initial_state = Eigen::VectorXd::Zero(12 * n);
  for (int v = 0; v < n; ++v) {
    const VehicleFeedback& fb = snapshot.vehicles[v];
    const AttitudePartial att{fb.roll, fb.pitch};
    prob.initial_state.segment<3>(12 * v + 3) = tilt_compensate(fb.velocity_body, att);
    prob.initial_state[12 * v + 6] = fb.roll;
    prob.initial_state[12 * v + 7] = fb.pitch;
    prob.initial_state.segment<3>(12 * v + 9) = fb.body_rates;
  }

  auto find_measurement = [&](int observer, int target) -> const RelativeMeasurement& {
    for (const RelativeMeasurement& m : snapshot.measurements) {
      if (m.observer_id == observer && m.target_id == target) return m;
    }
    throw SensingGapError("build_horizon_problem: no measurement of vehicle " +
                          std::to_string(target) + " by vehicle " +
                          std::to_string(observer));
  };

  prob.pair_rel_yaw.reserve(config.graph.pairs.size());
  prob.pair_offset.reserve(config.graph.pairs.size());
  for (const FormationPair& pair : config.graph.pairs) {
    const RelativeMeasurement& m_ij = find_measurement(pair.observer, pair.target);
    const RelativeMeasurement& m_ji = find_measurement(pair.target, pair.observer);
    const VehicleFeedback& fb_i = snapshot.vehicles[pair.observer];
    const VehicleFeedback& fb_j = snapshot.vehicles[pair.target];
    const AttitudePartial att_i{fb_i.roll, fb_i.pitch};
    const AttitudePartial att_j{fb_j.roll, fb_j.pitch};
    // relative_yaw_estimate returns (observer yaw - target yaw); the frame of
    // the target relative to the observer carries the opposite sign.
    prob.pair_rel_yaw.push_back(
        wrap_pi(-relative_yaw_estimate(m_ij, m_ji, att_i, att_j)));
    prob.pair_offset.push_back(
        tilt_compensate(displacement_from_measurement(m_ij), att_i));
  }

  prob.leader_frame.origin_offset = snapshot.leader_position;
  prob.leader_frame.yaw_offset = snapshot.leader_yaw;

  prob.input_lower = Eigen::VectorXd::Zero(4 * n);
  prob.input_upper.resize(4 * n);
  for (int v = 0; v < n; ++v) {
    prob.input_upper.segment<4>(4 * v).setConstant(config.params[v].max_omega_sq());
  }

  prob.guess = guess.has_value()
                   ? *guess
                   : make_hover_guess(prob.initial_state, config.params,
                                      config.horizon, config.dt);
  if (prob.guess.states.size() != static_cast<std::size_t>(config.horizon + 1) ||
      prob.guess.inputs.size() != static_cast<std::size_t>(config.horizon)) {
    throw AssemblyError("build_horizon_problem: guess length mismatch");
  }
  return prob;
}

}  // namespace relmpc

#include "relmpc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "relmpc/rotation.hpp"

namespace relmpc {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;
constexpr double kRadPerSecToRpm = 60.0 / (2.0 * kPi);
constexpr double kDivergenceLimit = 1e4;
constexpr double kFovAzimuthLimit = 60.0 * kDeg;
constexpr double kFovElevationLimit = 45.0 * kDeg;

struct Piece {
  char label;
  double start;
  double duration;
};

std::vector<Piece> positive_pieces(const ScenarioConfig& c) {
  const std::array<std::pair<char, double>, 5> segments = {{{'A', c.segments.hold},
                                                            {'B', c.segments.line},
                                                            {'C', c.segments.turn},
                                                            {'D', c.segments.resume},
                                                            {'E', c.segments.spiral}}};
  std::vector<Piece> pieces;
  double t = 0.0;
  for (const auto& [label, duration] : segments) {
    if (duration > 0.0) {
      pieces.push_back({label, t, duration});
      t += duration;
    }
  }
  return pieces;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void validate_config(const ScenarioConfig& c) {
  require(std::isfinite(c.dt) && c.dt > 0.0, "dt must be positive");
  require(c.horizon >= 1, "horizon must be at least 1");
  const std::array<double, 5> durations = {c.segments.hold, c.segments.line,
                                           c.segments.turn, c.segments.resume,
                                           c.segments.spiral};
  for (double d : durations) {
    require(std::isfinite(d) && d >= 0.0, "segment durations must be nonnegative");
  }
  require(total_duration(c) > 0.0, "schedule must have positive total duration");
  require(c.line_speed >= 0.0, "line speed must be nonnegative");
  require(c.spiral_speed >= 0.0, "spiral speed must be nonnegative");
  if (c.segments.spiral > 0.0) {
    require(c.spiral_radius > 0.0, "spiral radius must be positive");
    require(std::abs(c.spiral_vertical_rate) <= c.spiral_speed,
            "spiral vertical rate cannot exceed the tangential speed");
  }
  require(c.runs >= 1, "run count must be at least 1");
  require(c.test_mode_iters >= 0, "test-mode iteration count must be nonnegative");
  require(c.initial_kkt > 0.0 && c.running_kkt > 0.0, "KKT thresholds must be positive");
  require(c.weights.formation >= 0.0 && c.weights.position >= 0.0 &&
              c.weights.yaw >= 0.0 && c.weights.force >= 0.0 && c.weights.torque >= 0.0,
          "weights must be nonnegative");
  require(c.noise.optic_flow >= 0.0 && c.noise.imu_euler_deg >= 0.0 &&
              c.noise.gyro_deg >= 0.0 && c.noise.relative_loc >= 0.0 &&
              c.noise.absolute_loc >= 0.0 && c.noise.absolute_yaw >= 0.0,
          "noise levels must be nonnegative");
  require(c.uncertainty.mass_std >= 0.0 && c.uncertainty.inertia_std >= 0.0,
          "uncertainty levels must be nonnegative");
  require(c.vehicle.mass > 0.0 && c.vehicle.thrust_coeff > 0.0 &&
              c.vehicle.torque_coeff > 0.0 && c.vehicle.max_prop_speed > 0.0 &&
              c.vehicle.inertia.minCoeff() > 0.0,
          "vehicle parameters must be positive");
}

double total_duration(const ScenarioConfig& c) {
  return c.segments.hold + c.segments.line + c.segments.turn + c.segments.resume +
         c.segments.spiral;
}

double formation_switch_time(const ScenarioConfig& c) {
  if (c.segments.resume <= 0.0) return std::numeric_limits<double>::infinity();
  return c.segments.hold + c.segments.line + c.segments.turn;
}

TrajectoryPoint reference_at(double t, const ScenarioConfig& c) {
  const std::vector<Piece> pieces = positive_pieces(c);
  const double total = total_duration(c);
  if (pieces.empty() || t < -1e-12 || t > total + 1e-9) {
    std::ostringstream msg;
    msg << "reference time " << t << " outside the schedule [0, " << total << "]";
    throw ScheduleError(msg.str());
  }
  t = std::clamp(t, 0.0, total);

  Eigen::Vector3d anchor = c.leader_start;
  double yaw = c.leader_start_yaw;
  const double turn_rad = c.turn_angle_deg * kDeg;

  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const Piece& piece = pieces[i];
    const bool last = i + 1 == pieces.size();
    const bool inside = t < piece.start + piece.duration || last;
    const double tau = inside ? t - piece.start : piece.duration;

    TrajectoryPoint out;
    switch (piece.label) {
      case 'A': {
        out.position = anchor;
        out.velocity.setZero();
        out.yaw = yaw;
        break;
      }
      case 'B':
      case 'D': {
        const Eigen::Vector3d heading(std::cos(yaw), std::sin(yaw), 0.0);
        out.position = anchor + c.line_speed * tau * heading;
        out.velocity = c.line_speed * heading;
        out.yaw = yaw;
        if (!inside) anchor = out.position;
        break;
      }
      case 'C': {
        const double rate = turn_rad / piece.duration;
        if (std::abs(rate) < 1e-12) {
          const Eigen::Vector3d heading(std::cos(yaw), std::sin(yaw), 0.0);
          out.position = anchor + c.line_speed * tau * heading;
          out.velocity = c.line_speed * heading;
          out.yaw = yaw;
          if (!inside) anchor = out.position;
          break;
        }
        const double radius = c.line_speed / rate;
        const Eigen::Vector3d center =
            anchor + radius * Eigen::Vector3d(-std::sin(yaw), std::cos(yaw), 0.0);
        const double phase = yaw + rate * tau;
        out.position =
            center + radius * Eigen::Vector3d(std::sin(phase), -std::cos(phase), 0.0);
        out.velocity = c.line_speed * Eigen::Vector3d(std::cos(phase), std::sin(phase), 0.0);
        out.yaw = wrap_pi(phase);
        if (!inside) {
          anchor = out.position;
          yaw = wrap_pi(yaw + turn_rad);
        }
        break;
      }
      default: {  // 'E'
        const double vz = c.spiral_vertical_rate;
        const double horizontal =
            std::sqrt(std::max(c.spiral_speed * c.spiral_speed - vz * vz, 0.0));
        if (horizontal < 1e-12) {
          out.position = anchor + Eigen::Vector3d(0.0, 0.0, -vz * tau);
          out.velocity = Eigen::Vector3d(0.0, 0.0, -vz);
          out.yaw = yaw;
          if (!inside) anchor = out.position;
          break;
        }
        const double rate = horizontal / c.spiral_radius;
        const Eigen::Vector3d center =
            anchor +
            c.spiral_radius * Eigen::Vector3d(-std::sin(yaw), std::cos(yaw), 0.0);
        const double phase = yaw + rate * tau;
        out.position = center +
                       c.spiral_radius *
                           Eigen::Vector3d(std::sin(phase), -std::cos(phase), 0.0) +
                       Eigen::Vector3d(0.0, 0.0, -vz * tau);
        out.velocity =
            Eigen::Vector3d(horizontal * std::cos(phase), horizontal * std::sin(phase), -vz);
        out.yaw = wrap_pi(phase);
        if (!inside) {
          anchor = out.position;
          yaw = out.yaw;
        }
        break;
      }
    }
    if (inside) return out;
  }
  throw ScheduleError("reference lookup failed");  // unreachable
}

std::vector<Eigen::Vector3d> pair_desired(const FormationTable& table) {
  return {table.f1_wrt_leader, -table.f1_wrt_leader, table.f2_wrt_leader,
          -table.f2_wrt_leader, -table.f1_wrt_f2,    table.f1_wrt_f2};
}

FormationGraph scenario_graph() {
  FormationGraph g;
  g.pairs = {{0, 1}, {1, 0}, {0, 2}, {2, 0}, {1, 2}, {2, 1}};
  return g;
}

VehicleParams perturb_model_params(const VehicleParams& params,
                                   const UncertaintyLevels& uncertainty, Rng& rng) {
  VehicleParams out = params;
  out.mass = std::max(params.mass * (1.0 + rng.gaussian(uncertainty.mass_std)), 1e-9);
  for (int i = 0; i < 3; ++i) {
    out.inertia[i] =
        std::max(params.inertia[i] * (1.0 + rng.gaussian(uncertainty.inertia_std)), 1e-12);
  }
  return out;
}

SensingSnapshot synthesize_sensing(const std::array<VehicleState, 3>& plant,
                                   const ScenarioConfig& c, Rng& rng) {
  SensingSnapshot snap;
  const double imu_std = c.noise.imu_euler_deg * kDeg;
  const double gyro_std = c.noise.gyro_deg * kDeg;

  snap.vehicles.resize(3);
  for (int v = 0; v < 3; ++v) {
    VehicleFeedback& fb = snap.vehicles[v];
    fb.roll = plant[v].euler.x() + rng.gaussian(imu_std);
    fb.pitch = plant[v].euler.y() + rng.gaussian(imu_std);
    for (int i = 0; i < 3; ++i) {
      fb.body_rates[i] = plant[v].body_rates[i] + rng.gaussian(gyro_std);
    }
    const Eigen::Vector3d velocity_body =
        euler_to_rotation(plant[v].euler).transpose() * plant[v].velocity;
    for (int i = 0; i < 3; ++i) {
      fb.velocity_body[i] = velocity_body[i] + rng.gaussian(c.noise.optic_flow);
    }
  }

  for (const FormationPair& pair : scenario_graph().pairs) {
    const Eigen::Vector3d displacement_body =
        euler_to_rotation(plant[pair.observer].euler).transpose() *
        (plant[pair.target].position - plant[pair.observer].position);
    snap.measurements.push_back(measurement_from_geometry(
        displacement_body, c.noise.relative_loc, rng, pair.observer, pair.target));
  }

  for (int i = 0; i < 3; ++i) {
    snap.leader_position[i] = plant[0].position[i] + rng.gaussian(c.noise.absolute_loc);
  }
  snap.leader_yaw = plant[0].euler.z() + rng.gaussian(c.noise.absolute_yaw);
  return snap;
}

namespace {

// Each sensor is assumed boresighted at its neighbor's nominal formation
// slot; the flag reports whether every line of sight stays within the
// half-angles around that boresight.
bool within_fov(const std::array<VehicleState, 3>& plant, const FormationTable& table) {
  const std::vector<Eigen::Vector3d> boresight = pair_desired(table);
  const FormationGraph graph = scenario_graph();
  for (std::size_t p = 0; p < graph.pairs.size(); ++p) {
    const FormationPair& pair = graph.pairs[p];
    const Eigen::Vector3d d =
        euler_to_rotation(plant[pair.observer].euler).transpose() *
        (plant[pair.target].position - plant[pair.observer].position);
    const Eigen::Vector3d& b = boresight[p];
    const double range = d.norm();
    if (range < 1e-9) return false;
    const double azimuth =
        wrap_pi(std::atan2(d.y(), d.x()) - std::atan2(b.y(), b.x()));
    const double elevation = std::asin(std::clamp(d.z() / range, -1.0, 1.0)) -
                             std::asin(std::clamp(b.z() / b.norm(), -1.0, 1.0));
    if (std::abs(azimuth) > kFovAzimuthLimit ||
        std::abs(elevation) > kFovElevationLimit) {
      return false;
    }
  }
  return true;
}

RunStep make_step_record(double t, const std::array<VehicleState, 3>& plant,
                         const std::array<Eigen::Vector4d, 3>& rpm,
                         const SolverStatus& status, const ScenarioConfig& c,
                         const FormationTable& table) {
  RunStep rec;
  rec.t = t;
  for (int v = 0; v < 3; ++v) {
    rec.position[v] = plant[v].position;
    rec.yaw[v] = plant[v].euler.z();
    rec.rpm[v] = rpm[v];
  }
  const TrajectoryPoint ref = reference_at(std::min(t, total_duration(c)), c);
  const Eigen::Matrix3d heading = rot_z(ref.yaw);
  rec.pair_error[0] =
      ((plant[1].position - plant[0].position) - heading * table.f1_wrt_leader).norm();
  rec.pair_error[1] =
      ((plant[2].position - plant[0].position) - heading * table.f2_wrt_leader).norm();
  rec.pair_error[2] =
      ((plant[1].position - plant[2].position) - heading * table.f1_wrt_f2).norm();
  rec.leader_pos_error = (plant[0].position - ref.position).norm();
  rec.leader_yaw_error = std::abs(wrap_pi(plant[0].euler.z() - ref.yaw));
  rec.objective = status.objective;
  rec.kkt = status.kkt_tolerance;
  rec.sqp_iters = status.sqp_iterations;
  rec.cpu_ms = status.cpu_time * 1000.0;
  rec.fallback = status.used_fallback;
  rec.fov_ok = within_fov(plant, table);
  return rec;
}

}  // namespace

RunLog simulate_run(const ScenarioConfig& c, std::uint64_t seed) {
  validate_config(c);
  Rng rng(seed);

  const std::vector<VehicleParams> true_params(3, c.vehicle);
  std::vector<VehicleParams> model_params;
  model_params.reserve(3);
  for (int v = 0; v < 3; ++v) {
    model_params.push_back(perturb_model_params(c.vehicle, c.uncertainty, rng));
  }

  OcpConfig ocp;
  ocp.graph = scenario_graph();
  ocp.weights = c.weights;
  ocp.params = model_params;
  ocp.horizon = c.horizon;
  ocp.dt = c.dt;
  ocp.leader = 0;

  std::array<VehicleState, 3> plant;
  plant[0].position = c.leader_start + c.start_offsets[0];
  plant[1].position = c.leader_start + c.formation.f1_wrt_leader + c.start_offsets[1];
  plant[2].position = c.leader_start + c.formation.f2_wrt_leader + c.start_offsets[2];
  for (int v = 0; v < 3; ++v) plant[v].euler.z() = c.leader_start_yaw;

  const std::vector<Eigen::Vector3d> desired_initial = pair_desired(c.formation);
  const std::vector<Eigen::Vector3d> desired_updated = pair_desired(c.updated_formation);
  const double switch_time = formation_switch_time(c);
  const double total = total_duration(c);
  const int n_steps = static_cast<int>(std::llround(total / c.dt));

  RtiBudget budget;
  budget.sample_time = c.dt;
  budget.initial_kkt = c.initial_kkt;
  budget.running_kkt = c.running_kkt;
  budget.test_mode_iters = c.test_mode_iters;

  const double rpm_max = c.vehicle.max_prop_speed * kRadPerSecToRpm;
  std::optional<Trajectory> warm;
  RtiMemory memory;

  RunLog log;
  log.steps.reserve(n_steps);
  for (int k = 0; k < n_steps; ++k) {
    const double t = k * c.dt;
    const SensingSnapshot snap = synthesize_sensing(plant, c, rng);

    HorizonReferences refs;
    refs.stages.resize(c.horizon + 1);
    for (int j = 0; j <= c.horizon; ++j) {
      const double stage_time = t + j * c.dt;
      const TrajectoryPoint ref = reference_at(std::min(stage_time, total), c);
      refs.stages[j].leader_position = ref.position;
      refs.stages[j].leader_yaw = ref.yaw;
      refs.stages[j].formation_desired =
          stage_time >= switch_time - 1e-9 ? desired_updated : desired_initial;
    }

    if (!c.warm_start && k > 0) {
      warm.reset();
      memory = RtiMemory{};
    }
    const RtiResult res = [&] {
      try {
        const HorizonProblem prob = build_horizon_problem(snap, warm, refs, ocp);
        const HorizonNlp model(prob);
        return rti_control_step(model, prob.guess, budget, k == 0, &memory);
      } catch (const SingularityError& e) {
        // The measured state itself is beyond the attitude envelope the
        // controller can represent, so the closed loop has already failed.
        std::ostringstream msg;
        msg << "closed loop diverged at t=" << t << " s: " << e.what();
        throw IntegrationError(msg.str());
      }
    }();
    warm = res.warm_start;
    if (res.status.used_fallback && !std::isfinite(res.status.kkt_tolerance)) {
      // The retained guess is numerically poisoned; restart from a fresh
      // hover-anchored guess next cycle instead of shifting it forward.
      warm.reset();
      memory = RtiMemory{};
    }

    std::array<Eigen::Vector4d, 3> rpm;
    std::array<PropellerSpeeds, 3> applied;
    for (int v = 0; v < 3; ++v) {
      for (int r = 0; r < 4; ++r) {
        const double omega = std::sqrt(std::max(res.applied_input[4 * v + r], 0.0));
        const double spin = std::clamp(omega * kRadPerSecToRpm, 0.0, rpm_max);
        rpm[v][r] = spin;
        applied[v].omega_sq[r] = (spin / kRadPerSecToRpm) * (spin / kRadPerSecToRpm);
      }
    }

    log.steps.push_back(make_step_record(
        t, plant, rpm, res.status, c,
        t >= switch_time - 1e-9 ? c.updated_formation : c.formation));

    for (int v = 0; v < 3; ++v) {
      plant[v] = rk4_step(plant[v], applied[v], true_params[v], c.dt);
      const Vec12 state = plant[v].to_vector();
      if (!state.allFinite() || state.cwiseAbs().maxCoeff() > kDivergenceLimit) {
        std::ostringstream msg;
        msg << "plant diverged at t=" << t + c.dt << " s on vehicle " << v + 1;
        throw IntegrationError(msg.str());
      }
    }
  }
  return log;
}

const std::vector<std::string>& run_csv_columns() {
  static const std::vector<std::string> columns = [] {
    std::vector<std::string> cols;
    cols.push_back("t");
    for (int v = 1; v <= 3; ++v) {
      const std::string base = "veh" + std::to_string(v);
      cols.push_back(base + "_x");
      cols.push_back(base + "_y");
      cols.push_back(base + "_z");
      cols.push_back(base + "_yaw");
      for (int r = 1; r <= 4; ++r) {
        cols.push_back(base + "_rpm" + std::to_string(r));
      }
    }
    for (const char* name : {"err_f1_L", "err_f2_L", "err_f1_f2", "err_pos_L",
                             "err_yaw_L", "objective", "kkt", "sqp_iters", "cpu_ms",
                             "fallback", "fov_ok"}) {
      cols.push_back(name);
    }
    return cols;
  }();
  return columns;
}

Eigen::VectorXd run_step_values(const RunStep& step) {
  Eigen::VectorXd vals(static_cast<int>(run_csv_columns().size()));
  int i = 0;
  vals[i++] = step.t;
  for (int v = 0; v < 3; ++v) {
    vals[i++] = step.position[v].x();
    vals[i++] = step.position[v].y();
    vals[i++] = step.position[v].z();
    vals[i++] = step.yaw[v];
    for (int r = 0; r < 4; ++r) vals[i++] = step.rpm[v][r];
  }
  for (int p = 0; p < 3; ++p) vals[i++] = step.pair_error[p];
  vals[i++] = step.leader_pos_error;
  vals[i++] = step.leader_yaw_error;
  vals[i++] = step.objective;
  vals[i++] = step.kkt;
  vals[i++] = static_cast<double>(step.sqp_iters);
  vals[i++] = step.cpu_ms;
  vals[i++] = step.fallback ? 1.0 : 0.0;
  vals[i++] = step.fov_ok ? 1.0 : 0.0;
  return vals;
}

Aggregate aggregate_runs(const std::vector<RunLog>& logs) {
  if (logs.empty()) throw AggregationError("aggregate_runs: no runs");
  const std::size_t n_steps = logs[0].steps.size();
  if (n_steps == 0) throw AggregationError("aggregate_runs: empty run log");
  for (const RunLog& log : logs) {
    if (log.steps.size() != n_steps) {
      throw AggregationError("aggregate_runs: run logs have different lengths");
    }
  }

  const std::vector<std::string>& cols = run_csv_columns();
  const int n_metrics = static_cast<int>(cols.size()) - 1;
  const int n_runs = static_cast<int>(logs.size());

  Aggregate agg;
  agg.metrics.assign(cols.begin() + 1, cols.end());
  agg.time.resize(n_steps);
  agg.mean.setZero(static_cast<int>(n_steps), n_metrics);
  agg.stddev.setZero(static_cast<int>(n_steps), n_metrics);

  Eigen::MatrixXd rows(n_runs, n_metrics);
  for (std::size_t s = 0; s < n_steps; ++s) {
    agg.time[s] = logs[0].steps[s].t;
    for (int r = 0; r < n_runs; ++r) {
      if (std::abs(logs[r].steps[s].t - agg.time[s]) > 1e-9) {
        throw AggregationError("aggregate_runs: run logs have different time stamps");
      }
      rows.row(r) = run_step_values(logs[r].steps[s]).tail(n_metrics);
    }
    const Eigen::RowVectorXd mean = rows.colwise().mean();
    agg.mean.row(static_cast<int>(s)) = mean;
    if (n_runs > 1) {
      const Eigen::RowVectorXd var =
          (rows.rowwise() - mean).array().square().colwise().sum() /
          static_cast<double>(n_runs - 1);
      agg.stddev.row(static_cast<int>(s)) = var.array().sqrt();
    }
  }
  return agg;
}

std::vector<SegmentWindowStats> summarize_segments(const std::vector<RunLog>& logs,
                                                   const ScenarioConfig& c) {
  if (logs.empty()) throw AggregationError("summarize_segments: no runs");
  const std::vector<std::string>& cols = run_csv_columns();
  const int n_metrics = static_cast<int>(cols.size()) - 1;
  const int n_runs = static_cast<int>(logs.size());

  std::vector<SegmentWindowStats> out;
  for (const Piece& piece : positive_pieces(c)) {
    // Steady-state window: skip the transient right after the segment starts.
    double skip = std::max(1.0, 0.25 * piece.duration);
    if (skip >= piece.duration) skip = 0.5 * piece.duration;
    double window_start = piece.start + skip;
    const double window_end = piece.start + piece.duration;

    const auto in_window = [&](double t, double ws) {
      return t >= ws - 1e-9 && t < window_end - 1e-9;
    };

    Eigen::MatrixXd run_means(n_runs, n_metrics);
    bool have_steps = true;
    for (int r = 0; r < n_runs && have_steps; ++r) {
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(n_metrics);
      int count = 0;
      for (const RunStep& step : logs[r].steps) {
        if (in_window(step.t, window_start)) {
          sum += run_step_values(step).tail(n_metrics);
          ++count;
        }
      }
      if (count == 0) {
        // Fall back to the whole segment for windows shorter than a step.
        window_start = piece.start;
        for (const RunStep& step : logs[r].steps) {
          if (in_window(step.t, window_start)) {
            sum += run_step_values(step).tail(n_metrics);
            ++count;
          }
        }
      }
      if (count == 0) {
        have_steps = false;
        break;
      }
      run_means.row(r) = sum.transpose() / static_cast<double>(count);
    }
    if (!have_steps) continue;

    SegmentWindowStats stats;
    stats.label = piece.label;
    stats.window_start = window_start;
    stats.window_end = window_end;
    stats.metric_mean = run_means.colwise().mean().transpose();
    if (n_runs > 1) {
      const Eigen::RowVectorXd var =
          (run_means.rowwise() - run_means.colwise().mean())
              .array()
              .square()
              .colwise()
              .sum() /
          static_cast<double>(n_runs - 1);
      stats.metric_std = var.array().sqrt().transpose();
    } else {
      stats.metric_std = Eigen::VectorXd::Zero(n_metrics);
    }
    out.push_back(std::move(stats));
  }
  return out;
}

namespace {

void write_value(std::ostream& out, double value) {
  std::ostringstream buf;
  buf << std::setprecision(9) << value;
  out << buf.str();
}

}  // namespace

void write_run_csv(std::ostream& out, const RunLog& log) {
  const std::vector<std::string>& cols = run_csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out << (i == 0 ? "" : ",") << cols[i];
  }
  out << "\n";
  for (const RunStep& step : log.steps) {
    const Eigen::VectorXd vals = run_step_values(step);
    for (int i = 0; i < vals.size(); ++i) {
      if (i > 0) out << ",";
      write_value(out, vals[i]);
    }
    out << "\n";
  }
}

void write_aggregate_csv(std::ostream& out, const Aggregate& agg) {
  out << "t";
  for (const std::string& metric : agg.metrics) {
    out << "," << metric << "_mean," << metric << "_std";
  }
  out << "\n";
  for (std::size_t s = 0; s < agg.time.size(); ++s) {
    write_value(out, agg.time[s]);
    for (int m = 0; m < agg.mean.cols(); ++m) {
      out << ",";
      write_value(out, agg.mean(static_cast<int>(s), m));
      out << ",";
      write_value(out, agg.stddev(static_cast<int>(s), m));
    }
    out << "\n";
  }
}

void write_segment_summary_csv(std::ostream& out,
                               const std::vector<SegmentWindowStats>& stats,
                               const std::vector<std::string>& metrics) {
  out << "segment,window_start,window_end,metric,mean,std\n";
  for (const SegmentWindowStats& seg : stats) {
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      out << seg.label << ",";
      write_value(out, seg.window_start);
      out << ",";
      write_value(out, seg.window_end);
      out << "," << metrics[m] << ",";
      write_value(out, seg.metric_mean[static_cast<int>(m)]);
      out << ",";
      write_value(out, seg.metric_std[static_cast<int>(m)]);
      out << "\n";
    }
  }
}

}  // namespace relmpc

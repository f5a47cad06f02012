#pragma once

// Closed-loop simulation harness: five-segment leader reference trajectory,
// sensor noise and model-uncertainty injection, seeded multi-run studies and
// CSV reporting.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "relmpc/ocp.hpp"
#include "relmpc/rng.hpp"
#include "relmpc/rti.hpp"

namespace relmpc {

// Segment durations in seconds, in scenario order: hold, straight line, 90
// degree turn, line resumed with the regenerated formation, spiral. A zero
// duration removes the segment (and, for the resume segment, the formation
// switch that comes with it).
struct SegmentSchedule {
  double hold{1.0};
  double line{6.0};
  double turn{1.5};
  double resume{6.0};
  double spiral{10.0};
};

// Sensor noise standard deviations.
struct NoiseLevels {
  double optic_flow{0.25};      // m/s, per body axis (all vehicles)
  double imu_euler_deg{0.005};  // deg, roll and pitch
  double gyro_deg{3.0};         // deg/s, per body axis
  double relative_loc{0.025};   // m, per axis of the relative displacement
  double absolute_loc{0.02};    // m, per axis (leader only)
  double absolute_yaw{0.02};    // rad (leader only)
};

// Multiplicative parameter uncertainty of the prediction model, one Gaussian
// draw per parameter per run.
struct UncertaintyLevels {
  double mass_std{0.01};
  double inertia_std{0.05};
};

// Desired relative displacements (earth frame at zero formation heading).
// f1_wrt_leader is the position of follower 1 as seen from the leader, etc.
struct FormationTable {
  Eigen::Vector3d f1_wrt_leader{-1.0, -0.5, -0.5};
  Eigen::Vector3d f2_wrt_leader{-1.0, 0.5, -0.5};
  Eigen::Vector3d f1_wrt_f2{0.0, -1.0, 0.0};
};

struct ScenarioConfig {
  double dt{0.05};
  int horizon{15};
  Weights weights;
  VehicleParams vehicle;  // true plant parameters, shared by all vehicles

  SegmentSchedule segments;
  double line_speed{2.0};          // m/s, segments B and D
  double turn_angle_deg{90.0};     // heading change over the turn segment
  double spiral_speed{1.9};        // m/s tangential
  double spiral_radius{2.0};       // m
  double spiral_vertical_rate{0.25};  // m/s climb

  FormationTable formation;
  FormationTable updated_formation{{-1.0, -0.75, -0.5},
                                   {-1.0, 0.75, -0.5},
                                   {0.0, -1.5, 0.0}};

  NoiseLevels noise;
  UncertaintyLevels uncertainty;

  Eigen::Vector3d leader_start{0.0, 0.0, -1.0};
  double leader_start_yaw{0.0};
  // Added to the nominal start positions (leader, follower 1, follower 2) so
  // regulation transients can be exercised.
  std::array<Eigen::Vector3d, 3> start_offsets{
      Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};

  int runs{10};
  std::uint64_t seed{1};
  bool warm_start{true};
  int test_mode_iters{0};  // > 0 replaces the wall-clock budget
  double initial_kkt{1e-3};
  double running_kkt{10.0};
  std::string out_dir{"out"};
};

// Leader reference sample.
struct TrajectoryPoint {
  Eigen::Vector3d position{Eigen::Vector3d::Zero()};
  Eigen::Vector3d velocity{Eigen::Vector3d::Zero()};
  double yaw{0.0};
};

// One control step of a closed-loop run (three-vehicle scenario).
struct RunStep {
  double t{0.0};
  std::array<Eigen::Vector3d, 3> position;  // true earth-frame positions
  std::array<double, 3> yaw{};              // true yaws
  std::array<Eigen::Vector4d, 3> rpm;       // applied rotor speeds
  std::array<double, 3> pair_error{};       // |f1-L|, |f2-L|, |f1-f2| vs desired
  double leader_pos_error{0.0};
  double leader_yaw_error{0.0};
  double objective{0.0};
  double kkt{0.0};
  int sqp_iters{0};
  double cpu_ms{0.0};
  bool fallback{false};
  bool fov_ok{true};
};

struct RunLog {
  std::vector<RunStep> steps;
};

// Per-step mean and sample standard deviation of every logged metric over a
// set of runs.
struct Aggregate {
  std::vector<double> time;
  std::vector<std::string> metrics;  // column names, matching mean/stddev cols
  Eigen::MatrixXd mean;              // n_steps x n_metrics
  Eigen::MatrixXd stddev;
};

// Steady-window statistics of one scenario segment: per-metric mean over the
// window (averaged across runs) and the across-run spread of per-run means.
struct SegmentWindowStats {
  char label{'A'};
  double window_start{0.0};
  double window_end{0.0};
  Eigen::VectorXd metric_mean;
  Eigen::VectorXd metric_std;
};

// Throws ConfigError when durations/speeds/limits are inconsistent.
void validate_config(const ScenarioConfig& config);

double total_duration(const ScenarioConfig& config);

// Start time of the resume segment (when the formation reference switches);
// +infinity when the scenario has no resume segment.
double formation_switch_time(const ScenarioConfig& config);

// Piecewise-analytic leader reference. Throws ScheduleError outside
// [0, total_duration].
TrajectoryPoint reference_at(double t, const ScenarioConfig& config);

// Desired displacement per ordered graph pair, in scenario pair order
// (L->F1, F1->L, L->F2, F2->L, F1->F2, F2->F1).
std::vector<Eigen::Vector3d> pair_desired(const FormationTable& table);

// The fixed sensing/formation graph of the three-vehicle scenario.
FormationGraph scenario_graph();

// One multiplicative Gaussian draw per parameter, clamped positive.
VehicleParams perturb_model_params(const VehicleParams& params,
                                   const UncertaintyLevels& uncertainty, Rng& rng);

// Noisy sensor outputs for the current true states, in a fixed draw order.
SensingSnapshot synthesize_sensing(const std::array<VehicleState, 3>& plant,
                                   const ScenarioConfig& config, Rng& rng);

// Full closed-loop run at the configured sample time. Throws
// IntegrationError if the plant diverges (any state magnitude > 1e4).
RunLog simulate_run(const ScenarioConfig& config, std::uint64_t seed);

// CSV column names of a run log, starting with "t".
const std::vector<std::string>& run_csv_columns();

// Numeric values of one step in run_csv_columns() order (including t).
Eigen::VectorXd run_step_values(const RunStep& step);

// Per-step mean/std across runs. Throws AggregationError on shape mismatch.
Aggregate aggregate_runs(const std::vector<RunLog>& logs);

// Steady-window statistics per positive-duration segment.
std::vector<SegmentWindowStats> summarize_segments(const std::vector<RunLog>& logs,
                                                   const ScenarioConfig& config);

// Writers serialize with 9 significant digits.
void write_run_csv(std::ostream& out, const RunLog& log);
void write_aggregate_csv(std::ostream& out, const Aggregate& aggregate);
void write_segment_summary_csv(std::ostream& out,
                               const std::vector<SegmentWindowStats>& stats,
                               const std::vector<std::string>& metrics);

}  // namespace relmpc

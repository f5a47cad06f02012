#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>
#include <string>

#include "relmpc/config_io.hpp"
#include "relmpc/frames.hpp"
#include "relmpc/rng.hpp"
#include "relmpc/scenario.hpp"
#include "relmpc/vehicle.hpp"

namespace py = pybind11;
using namespace relmpc;

namespace {

Eigen::MatrixXd log_matrix(const RunLog& log) {
  const int cols = static_cast<int>(run_csv_columns().size());
  Eigen::MatrixXd m(static_cast<int>(log.steps.size()), cols);
  for (std::size_t k = 0; k < log.steps.size(); ++k) {
    m.row(static_cast<int>(k)) = run_step_values(log.steps[k]).transpose();
  }
  return m;
}

template <typename Writer>
void write_file(const std::string& path, Writer&& writer) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  writer(out);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Relative-formation MPC core";
  m.attr("__version__") = "0.1.0";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ScheduleError>(m, "ScheduleError", PyExc_ValueError);
  py::register_exception<IntegrationError>(m, "IntegrationError", PyExc_RuntimeError);

  // --- vehicle model ---
  py::class_<VehicleParams>(m, "VehicleParams")
      .def(py::init<>())
      .def_readwrite("mass", &VehicleParams::mass)
      .def_readwrite("inertia", &VehicleParams::inertia)
      .def_readwrite("arm_length", &VehicleParams::arm_length)
      .def_readwrite("thrust_coeff", &VehicleParams::thrust_coeff)
      .def_readwrite("torque_coeff", &VehicleParams::torque_coeff)
      .def_readwrite("max_prop_speed", &VehicleParams::max_prop_speed)
      .def_readwrite("gravity", &VehicleParams::gravity)
      .def("max_omega_sq", &VehicleParams::max_omega_sq)
      .def("hover_omega_sq", &VehicleParams::hover_omega_sq);

  py::class_<VehicleState>(m, "VehicleState")
      .def(py::init<>())
      .def_readwrite("position", &VehicleState::position)
      .def_readwrite("velocity", &VehicleState::velocity)
      .def_readwrite("euler", &VehicleState::euler)
      .def_readwrite("body_rates", &VehicleState::body_rates)
      .def("to_vector", &VehicleState::to_vector)
      .def_static("from_vector", &VehicleState::from_vector, py::arg("vector"));

  m.def("default_vehicle_params", &default_vehicle_params);
  m.def(
      "rk4_step",
      [](const VehicleState& state, const Eigen::Vector4d& omega_sq,
         const VehicleParams& params, double dt) {
        PropellerSpeeds u;
        u.omega_sq = omega_sq;
        return rk4_step(state, u, params, dt);
      },
      py::arg("state"), py::arg("omega_sq"), py::arg("params"), py::arg("dt"),
      "One fixed integrator step with squared propeller speeds held constant.");

  // --- relative sensing ---
  py::class_<RelativeMeasurement>(m, "RelativeMeasurement")
      .def(py::init<>())
      .def_readwrite("range", &RelativeMeasurement::range)
      .def_readwrite("azimuth", &RelativeMeasurement::azimuth)
      .def_readwrite("elevation", &RelativeMeasurement::elevation)
      .def_readwrite("observer_id", &RelativeMeasurement::observer_id)
      .def_readwrite("target_id", &RelativeMeasurement::target_id);

  py::class_<AttitudePartial>(m, "AttitudePartial")
      .def(py::init<>())
      .def(py::init([](double roll, double pitch) {
             return AttitudePartial{roll, pitch};
           }),
           py::arg("roll"), py::arg("pitch"))
      .def_readwrite("roll", &AttitudePartial::roll)
      .def_readwrite("pitch", &AttitudePartial::pitch);

  m.def("displacement_from_measurement", &displacement_from_measurement,
        py::arg("measurement"));
  m.def("tilt_compensate", &tilt_compensate, py::arg("body_vec"), py::arg("attitude"));
  m.def("relative_yaw_estimate", &relative_yaw_estimate, py::arg("meas_12"),
        py::arg("meas_21"), py::arg("att_1"), py::arg("att_2"),
        "Yaw of vehicle 1 minus yaw of vehicle 2 from mutual range/bearing "
        "observations plus roll/pitch.");

  // --- scenario configuration ---
  py::class_<Weights>(m, "Weights")
      .def(py::init<>())
      .def_readwrite("formation", &Weights::formation)
      .def_readwrite("position", &Weights::position)
      .def_readwrite("yaw", &Weights::yaw)
      .def_readwrite("force", &Weights::force)
      .def_readwrite("torque", &Weights::torque);

  py::class_<SegmentSchedule>(m, "SegmentSchedule")
      .def(py::init<>())
      .def_readwrite("hold", &SegmentSchedule::hold)
      .def_readwrite("line", &SegmentSchedule::line)
      .def_readwrite("turn", &SegmentSchedule::turn)
      .def_readwrite("resume", &SegmentSchedule::resume)
      .def_readwrite("spiral", &SegmentSchedule::spiral);

  py::class_<NoiseLevels>(m, "NoiseLevels")
      .def(py::init<>())
      .def_readwrite("optic_flow", &NoiseLevels::optic_flow)
      .def_readwrite("imu_euler_deg", &NoiseLevels::imu_euler_deg)
      .def_readwrite("gyro_deg", &NoiseLevels::gyro_deg)
      .def_readwrite("relative_loc", &NoiseLevels::relative_loc)
      .def_readwrite("absolute_loc", &NoiseLevels::absolute_loc)
      .def_readwrite("absolute_yaw", &NoiseLevels::absolute_yaw);

  py::class_<UncertaintyLevels>(m, "UncertaintyLevels")
      .def(py::init<>())
      .def_readwrite("mass_std", &UncertaintyLevels::mass_std)
      .def_readwrite("inertia_std", &UncertaintyLevels::inertia_std);

  py::class_<FormationTable>(m, "FormationTable")
      .def(py::init<>())
      .def_readwrite("f1_wrt_leader", &FormationTable::f1_wrt_leader)
      .def_readwrite("f2_wrt_leader", &FormationTable::f2_wrt_leader)
      .def_readwrite("f1_wrt_f2", &FormationTable::f1_wrt_f2);

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init<>())
      .def_readwrite("dt", &ScenarioConfig::dt)
      .def_readwrite("horizon", &ScenarioConfig::horizon)
      .def_readwrite("weights", &ScenarioConfig::weights)
      .def_readwrite("vehicle", &ScenarioConfig::vehicle)
      .def_readwrite("segments", &ScenarioConfig::segments)
      .def_readwrite("line_speed", &ScenarioConfig::line_speed)
      .def_readwrite("turn_angle_deg", &ScenarioConfig::turn_angle_deg)
      .def_readwrite("spiral_speed", &ScenarioConfig::spiral_speed)
      .def_readwrite("spiral_radius", &ScenarioConfig::spiral_radius)
      .def_readwrite("spiral_vertical_rate", &ScenarioConfig::spiral_vertical_rate)
      .def_readwrite("formation", &ScenarioConfig::formation)
      .def_readwrite("updated_formation", &ScenarioConfig::updated_formation)
      .def_readwrite("noise", &ScenarioConfig::noise)
      .def_readwrite("uncertainty", &ScenarioConfig::uncertainty)
      .def_readwrite("leader_start", &ScenarioConfig::leader_start)
      .def_readwrite("leader_start_yaw", &ScenarioConfig::leader_start_yaw)
      .def_readwrite("start_offsets", &ScenarioConfig::start_offsets)
      .def_readwrite("runs", &ScenarioConfig::runs)
      .def_readwrite("seed", &ScenarioConfig::seed)
      .def_readwrite("warm_start", &ScenarioConfig::warm_start)
      .def_readwrite("test_mode_iters", &ScenarioConfig::test_mode_iters)
      .def_readwrite("initial_kkt", &ScenarioConfig::initial_kkt)
      .def_readwrite("running_kkt", &ScenarioConfig::running_kkt)
      .def_readwrite("out_dir", &ScenarioConfig::out_dir);

  m.def("parse_scenario_config", &parse_scenario_config, py::arg("json_text"));
  m.def("load_scenario_config", &load_scenario_config, py::arg("path"));
  m.def("scenario_config_to_json", &scenario_config_to_json, py::arg("config"));
  m.def("validate_config", &validate_config, py::arg("config"));
  m.def("total_duration", &total_duration, py::arg("config"));
  m.def("formation_switch_time", &formation_switch_time, py::arg("config"));
  m.def("derive_seed", &Rng::derive_seed, py::arg("base"), py::arg("index"),
        "Decorrelated per-run seed of a multi-run study.");

  // --- reference trajectory ---
  py::class_<TrajectoryPoint>(m, "TrajectoryPoint")
      .def(py::init<>())
      .def_readwrite("position", &TrajectoryPoint::position)
      .def_readwrite("velocity", &TrajectoryPoint::velocity)
      .def_readwrite("yaw", &TrajectoryPoint::yaw);

  m.def("reference_at", &reference_at, py::arg("t"), py::arg("config"));

  // --- closed-loop simulation and reporting ---
  py::class_<RunStep>(m, "RunStep")
      .def_readonly("t", &RunStep::t)
      .def_readonly("position", &RunStep::position)
      .def_readonly("yaw", &RunStep::yaw)
      .def_readonly("rpm", &RunStep::rpm)
      .def_readonly("pair_error", &RunStep::pair_error)
      .def_readonly("leader_pos_error", &RunStep::leader_pos_error)
      .def_readonly("leader_yaw_error", &RunStep::leader_yaw_error)
      .def_readonly("objective", &RunStep::objective)
      .def_readonly("kkt", &RunStep::kkt)
      .def_readonly("sqp_iters", &RunStep::sqp_iters)
      .def_readonly("cpu_ms", &RunStep::cpu_ms)
      .def_readonly("fallback", &RunStep::fallback)
      .def_readonly("fov_ok", &RunStep::fov_ok);

  py::class_<RunLog>(m, "RunLog")
      .def(py::init<>())
      .def_readonly("steps", &RunLog::steps)
      .def("__len__", [](const RunLog& log) { return log.steps.size(); })
      .def("matrix", &log_matrix,
           "Step data as a (n_steps, n_columns) array in run_csv_columns() order.");

  py::class_<Aggregate>(m, "Aggregate")
      .def_readonly("time", &Aggregate::time)
      .def_readonly("metrics", &Aggregate::metrics)
      .def_readonly("mean", &Aggregate::mean)
      .def_readonly("stddev", &Aggregate::stddev);

  py::class_<SegmentWindowStats>(m, "SegmentWindowStats")
      .def_property_readonly(
          "label", [](const SegmentWindowStats& s) { return std::string(1, s.label); })
      .def_readonly("window_start", &SegmentWindowStats::window_start)
      .def_readonly("window_end", &SegmentWindowStats::window_end)
      .def_readonly("metric_mean", &SegmentWindowStats::metric_mean)
      .def_readonly("metric_std", &SegmentWindowStats::metric_std);

  m.def("run_csv_columns", [] { return run_csv_columns(); });
  m.def("simulate_run", &simulate_run, py::arg("config"), py::arg("seed"),
        py::call_guard<py::gil_scoped_release>(),
        "Full closed-loop run; raises IntegrationError if the plant diverges.");
  m.def("aggregate_runs", &aggregate_runs, py::arg("logs"));
  m.def("summarize_segments", &summarize_segments, py::arg("logs"), py::arg("config"));

  m.def(
      "write_run_csv",
      [](const std::string& path, const RunLog& log) {
        write_file(path, [&](std::ostream& out) { write_run_csv(out, log); });
      },
      py::arg("path"), py::arg("log"));
  m.def(
      "write_aggregate_csv",
      [](const std::string& path, const Aggregate& aggregate) {
        write_file(path, [&](std::ostream& out) { write_aggregate_csv(out, aggregate); });
      },
      py::arg("path"), py::arg("aggregate"));
  m.def(
      "write_segment_summary_csv",
      [](const std::string& path, const std::vector<SegmentWindowStats>& stats,
         const std::vector<std::string>& metrics) {
        write_file(path,
                   [&](std::ostream& out) { write_segment_summary_csv(out, stats, metrics); });
      },
      py::arg("path"), py::arg("stats"), py::arg("metrics"));
}

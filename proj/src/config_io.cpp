#include "relmpc/config_io.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>
#include <string>

#include <json.hpp>

namespace relmpc {

namespace {

using nlohmann::json;

constexpr double kRpmToRadPerSec = 2.0 * std::numbers::pi / 60.0;

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where + " must be a JSON object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) fail("unknown key \"" + item.key() + "\" in " + where);
  }
}

void get_num(const json& obj, const char* key, double& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(std::string("\"") + key + "\" must be a number");
  out = v.get<double>();
}

void get_int(const json& obj, const char* key, int& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(std::string("\"") + key + "\" must be an integer");
  out = v.get<int>();
}

void get_bool(const json& obj, const char* key, bool& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(std::string("\"") + key + "\" must be a boolean");
  out = v.get<bool>();
}

void get_string(const json& obj, const char* key, std::string& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(std::string("\"") + key + "\" must be a string");
  out = v.get<std::string>();
}

void get_seed(const json& obj, const char* key, std::uint64_t& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned() && !v.is_number_integer()) {
    fail(std::string("\"") + key + "\" must be a nonnegative integer");
  }
  if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
    fail(std::string("\"") + key + "\" must be a nonnegative integer");
  }
  out = v.get<std::uint64_t>();
}

void get_vec3(const json& obj, const char* key, Eigen::Vector3d& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 3) {
    fail(std::string("\"") + key + "\" must be an array of 3 numbers");
  }
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number()) {
      fail(std::string("\"") + key + "\" must be an array of 3 numbers");
    }
    out[i] = v[i].get<double>();
  }
}

void parse_formation(const json& obj, const std::string& where, FormationTable& out) {
  check_keys(obj, where, {"f1_wrt_leader", "f2_wrt_leader", "f1_wrt_f2"});
  get_vec3(obj, "f1_wrt_leader", out.f1_wrt_leader);
  get_vec3(obj, "f2_wrt_leader", out.f2_wrt_leader);
  get_vec3(obj, "f1_wrt_f2", out.f1_wrt_f2);
}

json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json formation_to_json(const FormationTable& table) {
  return {{"f1_wrt_leader", vec3_to_json(table.f1_wrt_leader)},
          {"f2_wrt_leader", vec3_to_json(table.f2_wrt_leader)},
          {"f1_wrt_f2", vec3_to_json(table.f1_wrt_f2)}};
}

}  // namespace

ScenarioConfig parse_scenario_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(std::string("could not parse configuration JSON: ") + e.what());
  }

  ScenarioConfig c;
  check_keys(root, "configuration",
             {"dt", "horizon", "weights", "vehicle", "segments", "trajectory",
              "formation", "updated_formation", "noise", "uncertainty", "start",
              "runs", "seed", "warm_start", "test_mode_iters", "solver", "out_dir"});

  get_num(root, "dt", c.dt);
  get_int(root, "horizon", c.horizon);

  if (root.contains("weights")) {
    const json& w = root.at("weights");
    check_keys(w, "weights", {"formation", "position", "yaw", "force", "torque"});
    get_num(w, "formation", c.weights.formation);
    get_num(w, "position", c.weights.position);
    get_num(w, "yaw", c.weights.yaw);
    get_num(w, "force", c.weights.force);
    get_num(w, "torque", c.weights.torque);
  }

  if (root.contains("vehicle")) {
    const json& v = root.at("vehicle");
    check_keys(v, "vehicle",
               {"mass", "inertia", "arm_length", "max_rpm", "gravity",
                "thrust_coeff", "torque_coeff"});
    get_num(v, "mass", c.vehicle.mass);
    get_vec3(v, "inertia", c.vehicle.inertia);
    get_num(v, "arm_length", c.vehicle.arm_length);
    get_num(v, "gravity", c.vehicle.gravity);
    double max_rpm = c.vehicle.max_prop_speed / kRpmToRadPerSec;
    get_num(v, "max_rpm", max_rpm);
    c.vehicle.max_prop_speed = max_rpm * kRpmToRadPerSec;
    // Unless given explicitly, the thrust coefficient is pinned by the
    // hover-at-half-envelope convention and the torque coefficient scales
    // with it.
    if (v.contains("thrust_coeff")) {
      get_num(v, "thrust_coeff", c.vehicle.thrust_coeff);
    } else if (c.vehicle.max_prop_speed > 0.0) {
      c.vehicle.thrust_coeff =
          c.vehicle.mass * c.vehicle.gravity / c.vehicle.max_omega_sq();
    }
    if (v.contains("torque_coeff")) {
      get_num(v, "torque_coeff", c.vehicle.torque_coeff);
    } else {
      c.vehicle.torque_coeff = 0.016 * c.vehicle.thrust_coeff;
    }
  }

  if (root.contains("segments")) {
    const json& s = root.at("segments");
    check_keys(s, "segments", {"hold", "line", "turn", "resume", "spiral"});
    get_num(s, "hold", c.segments.hold);
    get_num(s, "line", c.segments.line);
    get_num(s, "turn", c.segments.turn);
    get_num(s, "resume", c.segments.resume);
    get_num(s, "spiral", c.segments.spiral);
  }

  if (root.contains("trajectory")) {
    const json& t = root.at("trajectory");
    check_keys(t, "trajectory",
               {"line_speed", "turn_angle_deg", "spiral_speed", "spiral_radius",
                "spiral_vertical_rate"});
    get_num(t, "line_speed", c.line_speed);
    get_num(t, "turn_angle_deg", c.turn_angle_deg);
    get_num(t, "spiral_speed", c.spiral_speed);
    get_num(t, "spiral_radius", c.spiral_radius);
    get_num(t, "spiral_vertical_rate", c.spiral_vertical_rate);
  }

  if (root.contains("formation")) {
    parse_formation(root.at("formation"), "formation", c.formation);
  }
  if (root.contains("updated_formation")) {
    parse_formation(root.at("updated_formation"), "updated_formation",
                    c.updated_formation);
  }

  if (root.contains("noise")) {
    const json& n = root.at("noise");
    check_keys(n, "noise",
               {"optic_flow", "imu_euler_deg", "gyro_deg", "relative_loc",
                "absolute_loc", "absolute_yaw"});
    get_num(n, "optic_flow", c.noise.optic_flow);
    get_num(n, "imu_euler_deg", c.noise.imu_euler_deg);
    get_num(n, "gyro_deg", c.noise.gyro_deg);
    get_num(n, "relative_loc", c.noise.relative_loc);
    get_num(n, "absolute_loc", c.noise.absolute_loc);
    get_num(n, "absolute_yaw", c.noise.absolute_yaw);
  }

  if (root.contains("uncertainty")) {
    const json& u = root.at("uncertainty");
    check_keys(u, "uncertainty", {"mass_std", "inertia_std"});
    get_num(u, "mass_std", c.uncertainty.mass_std);
    get_num(u, "inertia_std", c.uncertainty.inertia_std);
  }

  if (root.contains("start")) {
    const json& s = root.at("start");
    check_keys(s, "start", {"leader_position", "leader_yaw", "offsets"});
    get_vec3(s, "leader_position", c.leader_start);
    get_num(s, "leader_yaw", c.leader_start_yaw);
    if (s.contains("offsets")) {
      const json& offs = s.at("offsets");
      if (!offs.is_array() || offs.size() != 3) {
        fail("\"offsets\" must be an array of 3 vectors");
      }
      for (int v = 0; v < 3; ++v) {
        const json& row = offs[v];
        if (!row.is_array() || row.size() != 3) {
          fail("\"offsets\" must be an array of 3 vectors");
        }
        for (int i = 0; i < 3; ++i) {
          if (!row[i].is_number()) fail("\"offsets\" entries must be numbers");
          c.start_offsets[v][i] = row[i].get<double>();
        }
      }
    }
  }

  get_int(root, "runs", c.runs);
  get_seed(root, "seed", c.seed);
  get_bool(root, "warm_start", c.warm_start);
  get_int(root, "test_mode_iters", c.test_mode_iters);

  if (root.contains("solver")) {
    const json& s = root.at("solver");
    check_keys(s, "solver", {"initial_kkt", "running_kkt"});
    get_num(s, "initial_kkt", c.initial_kkt);
    get_num(s, "running_kkt", c.running_kkt);
  }

  get_string(root, "out_dir", c.out_dir);

  validate_config(c);
  return c;
}

ScenarioConfig load_scenario_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) fail("could not open configuration file: " + path);
  std::ostringstream text;
  text << file.rdbuf();
  return parse_scenario_config(text.str());
}

std::string scenario_config_to_json(const ScenarioConfig& c) {
  json root;
  root["dt"] = c.dt;
  root["horizon"] = c.horizon;
  root["weights"] = {{"formation", c.weights.formation},
                     {"position", c.weights.position},
                     {"yaw", c.weights.yaw},
                     {"force", c.weights.force},
                     {"torque", c.weights.torque}};
  root["vehicle"] = {{"mass", c.vehicle.mass},
                     {"inertia", vec3_to_json(c.vehicle.inertia)},
                     {"arm_length", c.vehicle.arm_length},
                     {"max_rpm", c.vehicle.max_prop_speed / kRpmToRadPerSec},
                     {"gravity", c.vehicle.gravity},
                     {"thrust_coeff", c.vehicle.thrust_coeff},
                     {"torque_coeff", c.vehicle.torque_coeff}};
  root["segments"] = {{"hold", c.segments.hold},
                      {"line", c.segments.line},
                      {"turn", c.segments.turn},
                      {"resume", c.segments.resume},
                      {"spiral", c.segments.spiral}};
  root["trajectory"] = {{"line_speed", c.line_speed},
                        {"turn_angle_deg", c.turn_angle_deg},
                        {"spiral_speed", c.spiral_speed},
                        {"spiral_radius", c.spiral_radius},
                        {"spiral_vertical_rate", c.spiral_vertical_rate}};
  root["formation"] = formation_to_json(c.formation);
  root["updated_formation"] = formation_to_json(c.updated_formation);
  root["noise"] = {{"optic_flow", c.noise.optic_flow},
                   {"imu_euler_deg", c.noise.imu_euler_deg},
                   {"gyro_deg", c.noise.gyro_deg},
                   {"relative_loc", c.noise.relative_loc},
                   {"absolute_loc", c.noise.absolute_loc},
                   {"absolute_yaw", c.noise.absolute_yaw}};
  root["uncertainty"] = {{"mass_std", c.uncertainty.mass_std},
                         {"inertia_std", c.uncertainty.inertia_std}};
  root["start"] = {{"leader_position", vec3_to_json(c.leader_start)},
                   {"leader_yaw", c.leader_start_yaw},
                   {"offsets", json::array({vec3_to_json(c.start_offsets[0]),
                                            vec3_to_json(c.start_offsets[1]),
                                            vec3_to_json(c.start_offsets[2])})}};
  root["runs"] = c.runs;
  root["seed"] = c.seed;
  root["warm_start"] = c.warm_start;
  root["test_mode_iters"] = c.test_mode_iters;
  root["solver"] = {{"initial_kkt", c.initial_kkt}, {"running_kkt", c.running_kkt}};
  root["out_dir"] = c.out_dir;
  return root.dump(2) + "\n";
}

}  // namespace relmpc

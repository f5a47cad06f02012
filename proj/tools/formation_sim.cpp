// Command-line front end of the formation-flight simulator: single runs,
// multi-run statistical studies, and a warm-start on/off comparison.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relmpc/config_io.hpp"
#include "relmpc/scenario.hpp"

namespace fs = std::filesystem;
using namespace relmpc;

namespace {

struct CliOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<std::string> out_dir;
  bool no_warm_start{false};
  std::optional<int> test_mode;
};

void add_common_options(CLI::App* cmd, CliOverrides& opts) {
  cmd->add_option("--config", opts.config_path, "JSON configuration file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "Base RNG seed (overrides config)");
  cmd->add_option("--runs", opts.runs, "Number of runs (overrides config)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", opts.out_dir, "Output directory (overrides config)");
  cmd->add_flag("--no-warm-start", opts.no_warm_start,
                "Disable the shift-and-transform warm start");
  cmd->add_option("--test-mode", opts.test_mode,
                  "Replace the wall-clock budget with a fixed per-step "
                  "iteration count (deterministic)")
      ->check(CLI::PositiveNumber);
}

ScenarioConfig resolve_config(const CliOverrides& opts) {
  ScenarioConfig config = opts.config_path.empty()
                              ? ScenarioConfig{}
                              : load_scenario_config(opts.config_path);
  if (opts.seed) config.seed = *opts.seed;
  if (opts.runs) config.runs = *opts.runs;
  if (opts.out_dir) config.out_dir = *opts.out_dir;
  if (opts.no_warm_start) config.warm_start = false;
  if (opts.test_mode) config.test_mode_iters = *opts.test_mode;
  validate_config(config);
  return config;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_run_file(const fs::path& path, const RunLog& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_run_csv(out, log);
}

std::string run_name(int index) {
  std::ostringstream name;
  name << "run_" << std::setfill('0') << std::setw(3) << index + 1 << ".csv";
  return name.str();
}

struct RunSummary {
  int steps{0};
  int fallbacks{0};
  double mean_cpu_ms{0.0};
  double max_cpu_ms{0.0};
  double max_rpm{0.0};
  double final_pair_error{0.0};
};

RunSummary summarize(const RunLog& log) {
  RunSummary s;
  s.steps = static_cast<int>(log.steps.size());
  for (const RunStep& step : log.steps) {
    s.fallbacks += step.fallback ? 1 : 0;
    s.mean_cpu_ms += step.cpu_ms;
    s.max_cpu_ms = std::max(s.max_cpu_ms, step.cpu_ms);
    for (int v = 0; v < 3; ++v) s.max_rpm = std::max(s.max_rpm, step.rpm[v].maxCoeff());
  }
  if (s.steps > 0) {
    s.mean_cpu_ms /= s.steps;
    const RunStep& last = log.steps.back();
    s.final_pair_error =
        std::max({last.pair_error[0], last.pair_error[1], last.pair_error[2]});
  }
  return s;
}

std::vector<RunLog> execute_study(const ScenarioConfig& config) {
  std::vector<RunLog> logs;
  logs.reserve(config.runs);
  for (int i = 0; i < config.runs; ++i) {
    logs.push_back(simulate_run(config, Rng::derive_seed(config.seed, i)));
  }
  return logs;
}

// Mean solver objective over the agile-turn segment of one run.
double turn_mean_objective(const RunLog& log, const ScenarioConfig& config) {
  const double t0 = config.segments.hold + config.segments.line;
  const double t1 = t0 + config.segments.turn;
  double sum = 0.0;
  int count = 0;
  for (const RunStep& step : log.steps) {
    if (step.t >= t0 - 1e-9 && step.t < t1 - 1e-9 && std::isfinite(step.objective)) {
      sum += step.objective;
      ++count;
    }
  }
  return count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
}

void write_study_outputs(const fs::path& dir, const ScenarioConfig& config,
                         const std::vector<RunLog>& logs) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < logs.size(); ++i) {
    write_run_file(dir / run_name(static_cast<int>(i)), logs[i]);
  }
  const Aggregate agg = aggregate_runs(logs);
  std::ofstream agg_out(dir / "aggregate.csv");
  write_aggregate_csv(agg_out, agg);
  const std::vector<SegmentWindowStats> stats = summarize_segments(logs, config);
  std::ofstream sum_out(dir / "summary.csv");
  write_segment_summary_csv(sum_out, stats, agg.metrics);
  write_text_file(dir / "resolved_config.json", scenario_config_to_json(config));
}

void print_segment_errors(const ScenarioConfig& config,
                          const std::vector<RunLog>& logs) {
  const std::vector<SegmentWindowStats> stats = summarize_segments(logs, config);
  const Aggregate agg = aggregate_runs(logs);
  const auto metric = [&](const SegmentWindowStats& s, const std::string& name) {
    for (std::size_t m = 0; m < agg.metrics.size(); ++m) {
      if (agg.metrics[m] == name) return s.metric_mean[static_cast<int>(m)];
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  std::cout << "steady-window means per segment:\n";
  for (const SegmentWindowStats& s : stats) {
    std::cout << "  " << s.label << " [" << std::fixed << std::setprecision(2)
              << s.window_start << ", " << s.window_end << ") s:"
              << std::setprecision(4) << "  err_f1_L " << metric(s, "err_f1_L")
              << "  err_f2_L " << metric(s, "err_f2_L") << "  err_f1_f2 "
              << metric(s, "err_f1_f2") << "  err_pos_L " << metric(s, "err_pos_L")
              << "  cpu_ms " << std::setprecision(2) << metric(s, "cpu_ms") << "\n";
  }
  std::cout.unsetf(std::ios::fixed);
}

int cmd_run(const CliOverrides& opts) {
  const ScenarioConfig config = resolve_config(opts);
  const RunLog log = simulate_run(config, config.seed);

  const fs::path dir(config.out_dir);
  fs::create_directories(dir);
  write_run_file(dir / "run.csv", log);
  write_text_file(dir / "resolved_config.json", scenario_config_to_json(config));

  const RunSummary s = summarize(log);
  std::cout << "run complete: " << s.steps << " steps, " << s.fallbacks
            << " fallbacks, mean cpu " << std::setprecision(3) << s.mean_cpu_ms
            << " ms, max rpm " << std::setprecision(0) << std::fixed << s.max_rpm
            << ", final max pair error " << std::defaultfloat
            << std::setprecision(4) << s.final_pair_error << " m\n"
            << "wrote " << (dir / "run.csv").string() << "\n";
  return 0;
}

int cmd_study(const CliOverrides& opts) {
  const ScenarioConfig config = resolve_config(opts);
  const std::vector<RunLog> logs = execute_study(config);
  const fs::path dir(config.out_dir);
  write_study_outputs(dir, config, logs);

  double mean_cpu = 0.0;
  int fallbacks = 0, steps = 0;
  for (const RunLog& log : logs) {
    const RunSummary s = summarize(log);
    mean_cpu += s.mean_cpu_ms * s.steps;
    fallbacks += s.fallbacks;
    steps += s.steps;
  }
  std::cout << "study complete: " << logs.size() << " runs x "
            << (steps / static_cast<int>(logs.size())) << " steps, " << fallbacks
            << " fallbacks (" << std::setprecision(3)
            << (steps > 0 ? 100.0 * fallbacks / steps : 0.0) << "%), mean cpu "
            << mean_cpu / std::max(steps, 1) << " ms\n";
  print_segment_errors(config, logs);
  std::cout << "wrote " << dir.string() << "/run_*.csv, aggregate.csv, summary.csv\n";
  return 0;
}

int cmd_ablate(const CliOverrides& opts) {
  ScenarioConfig warm_config = resolve_config(opts);
  if (warm_config.segments.turn <= 0.0) {
    throw ConfigError("the warm-start comparison needs a turn segment");
  }
  warm_config.warm_start = true;
  ScenarioConfig cold_config = warm_config;
  cold_config.warm_start = false;

  const std::vector<RunLog> warm_logs = execute_study(warm_config);
  const std::vector<RunLog> cold_logs = execute_study(cold_config);

  const fs::path dir(warm_config.out_dir);
  write_study_outputs(dir / "warm", warm_config, warm_logs);
  write_study_outputs(dir / "cold", cold_config, cold_logs);

  std::ostringstream csv;
  csv << std::setprecision(9);
  csv << "run,seed,warm_turn_objective,cold_turn_objective\n";
  double warm_mean = 0.0, cold_mean = 0.0;
  for (std::size_t i = 0; i < warm_logs.size(); ++i) {
    const double w = turn_mean_objective(warm_logs[i], warm_config);
    const double c = turn_mean_objective(cold_logs[i], cold_config);
    warm_mean += w;
    cold_mean += c;
    csv << i + 1 << "," << Rng::derive_seed(warm_config.seed, i) << "," << w << ","
        << c << "\n";
  }
  warm_mean /= static_cast<double>(warm_logs.size());
  cold_mean /= static_cast<double>(cold_logs.size());
  csv << "mean,," << warm_mean << "," << cold_mean << "\n";
  write_text_file(dir / "ablation.csv", csv.str());

  std::cout << "turn-segment mean objective: warm " << std::setprecision(6)
            << warm_mean << " vs cold " << cold_mean << " -> "
            << (warm_mean < cold_mean
                    ? "warm start lowers the objective"
                    : "WARNING: warm start did not lower the objective")
            << "\n"
            << "wrote " << (dir / "ablation.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Closed-loop formation-flight simulator: three vehicles under "
      "centralized model-predictive control with relative sensing"};
  app.require_subcommand(1);

  CliOverrides run_opts, study_opts, ablate_opts;
  CLI::App* run_cmd = app.add_subcommand("run", "Simulate a single seeded run");
  add_common_options(run_cmd, run_opts);
  CLI::App* study_cmd =
      app.add_subcommand("study", "Run a seeded multi-run study with statistics");
  add_common_options(study_cmd, study_opts);
  CLI::App* ablate_cmd = app.add_subcommand(
      "ablate", "Compare warm-start on/off over paired seeds");
  add_common_options(ablate_cmd, ablate_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(run_opts);
    if (study_cmd->parsed()) return cmd_study(study_opts);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

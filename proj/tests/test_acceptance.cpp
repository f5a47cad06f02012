// Acceptance suite: end-to-end scenario checks plus component-level oracles,
// one printed PASS/FAIL line per criterion. The process exit code is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "relmpc/frames.hpp"
#include "relmpc/ocp.hpp"
#include "relmpc/rng.hpp"
#include "relmpc/rotation.hpp"
#include "relmpc/rti.hpp"
#include "relmpc/scenario.hpp"
#include "relmpc/vehicle.hpp"

using namespace relmpc;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

int g_failures = 0;

std::string fmt(const char* format, ...) {
  va_list args;
  va_start(args, format);
  char buffer[512];
  std::vsnprintf(buffer, sizeof(buffer), format, args);
  va_end(args);
  return buffer;
}

void report(int id, const char* label, bool pass, const std::string& detail) {
  std::printf("criterion %2d [%-24s] %s  %s\n", id, label, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int metric_index(const std::string& name) {
  const std::vector<std::string>& cols = run_csv_columns();
  for (std::size_t i = 1; i < cols.size(); ++i) {
    if (cols[i] == name) return static_cast<int>(i) - 1;
  }
  std::fprintf(stderr, "unknown metric %s\n", name.c_str());
  std::abort();
}

std::vector<RunLog> run_study(const ScenarioConfig& config) {
  std::vector<RunLog> logs;
  logs.reserve(config.runs);
  for (int i = 0; i < config.runs; ++i) {
    logs.push_back(simulate_run(config, Rng::derive_seed(config.seed, i)));
  }
  return logs;
}

// 1. Noise-free hover regulation from offset starts: every pairwise formation
//    error norm is below 1e-2 m from t = 5 s on, within a wall-time budget.
void criterion_1() {
  ScenarioConfig c;
  c.segments = {10.0, 0.0, 0.0, 0.0, 0.0};
  c.noise = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  c.uncertainty = {0.0, 0.0};
  c.start_offsets[0] = Eigen::Vector3d(0.05, -0.04, 0.03);
  c.start_offsets[1] = Eigen::Vector3d(-0.06, 0.05, -0.02);
  c.start_offsets[2] = Eigen::Vector3d(0.04, 0.03, 0.05);

  const auto t0 = std::chrono::steady_clock::now();
  const RunLog log = simulate_run(c, 2024);
  const double wall = seconds_since(t0);

  double late_worst = 0.0;
  for (const RunStep& step : log.steps) {
    if (step.t < 5.0) continue;
    for (double e : step.pair_error) late_worst = std::max(late_worst, e);
  }
  const bool settled = late_worst < 1e-2;
  const bool fast_enough = wall < 30.0;
  report(1, "hover regulation", settled && fast_enough,
         fmt("max pair error %.2e m for t >= 5 s (limit 1e-2); wall %.1f s for a "
             "10 s run (limit 30 s)",
             late_worst, wall));
}

// 2. Straight-line tracking under the default sensing noise and model
//    uncertainty: steady-window time-averaged pair errors stay within 0.1 m.
void criterion_2() {
  ScenarioConfig c;
  c.segments = {1.0, 6.0, 0.0, 0.0, 0.0};
  c.runs = 10;
  c.seed = 42;
  const std::vector<RunLog> logs = run_study(c);
  const std::vector<SegmentWindowStats> stats = summarize_segments(logs, c);

  const SegmentWindowStats* line = nullptr;
  for (const SegmentWindowStats& s : stats) {
    if (s.label == 'B') line = &s;
  }
  if (line == nullptr) {
    report(2, "line-segment accuracy", false, "no line segment in the summary");
    return;
  }
  const double e1 = line->metric_mean[metric_index("err_f1_L")];
  const double e2 = line->metric_mean[metric_index("err_f2_L")];
  const double e3 = line->metric_mean[metric_index("err_f1_f2")];
  const double worst = std::max({e1, e2, e3});
  report(2, "line-segment accuracy", worst <= 0.1,
         fmt("time-averaged pair errors %.3f / %.3f / %.3f m over [%.2f, %.2f) s, "
             "10 runs (limit 0.1 m)",
             e1, e2, e3, line->window_start, line->window_end));
}

// 3/4/6 share one ten-run study of the full five-segment scenario with the
// default noise, uncertainty and wall-clock solver budget.
void criteria_3_4_6() {
  ScenarioConfig c;
  c.runs = 10;
  c.seed = 7;
  const std::vector<RunLog> logs = run_study(c);

  double rpm_min = 1e30, rpm_max = -1e30;
  double cold_kkt_worst = 0.0;
  long running_violations = 0;
  long fallback_steps = 0;
  long total_steps = 0;
  double cpu_sum = 0.0, cpu_max = 0.0;
  for (const RunLog& log : logs) {
    for (std::size_t k = 0; k < log.steps.size(); ++k) {
      const RunStep& step = log.steps[k];
      for (const Eigen::Vector4d& rpm : step.rpm) {
        rpm_min = std::min(rpm_min, rpm.minCoeff());
        rpm_max = std::max(rpm_max, rpm.maxCoeff());
      }
      if (k == 0) {
        cold_kkt_worst = std::max(cold_kkt_worst, step.kkt);
      } else if (!(step.kkt <= 10.0 + 1e-9) && !step.fallback) {
        ++running_violations;
      }
      if (step.fallback) ++fallback_steps;
      ++total_steps;
      cpu_sum += step.cpu_ms;
      cpu_max = std::max(cpu_max, step.cpu_ms);
    }
  }
  const double fallback_rate = static_cast<double>(fallback_steps) / total_steps;

  report(3, "rotor-speed limits", rpm_min >= -1e-9 && rpm_max <= 6000.0 + 1e-9,
         fmt("logged rotor speeds span [%.1f, %.1f] rpm over %ld steps (limits "
             "[0, 6000])",
             rpm_min, rpm_max, total_steps));
  report(4, "solver tolerances",
         cold_kkt_worst <= 1e-3 + 1e-12 && running_violations == 0 &&
             fallback_rate < 0.01,
         fmt("worst first-step KKT %.2e (limit 1e-3); %ld running steps above 10 "
             "without fallback; fallback rate %.2f%% (limit 1%%)",
             cold_kkt_worst, running_violations, 100.0 * fallback_rate));
  report(6, "solver timing", true,
         fmt("reported, not gated: mean %.1f ms, max %.1f ms per step (soft "
             "target 50 ms)",
             cpu_sum / total_steps, cpu_max));
}

// 5. Warm-start ablation: with the shifted/transformed initialization the mean
//    objective over the turn segment is strictly lower than with a hover
//    initialization every cycle, on ten seed-paired runs. Sensing noise is off
//    (the cold variant cannot stabilize the loop under noise, which is the
//    point of the warm start, but here both arms must finish); seeded model
//    uncertainty still differentiates the runs. One iteration per step makes
//    the comparison deterministic and is the regime where the initialization
//    matters most.
void criterion_5() {
  ScenarioConfig base;
  base.segments = {1.0, 2.0, 1.5, 0.0, 0.0};
  base.noise = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  base.test_mode_iters = 1;
  base.runs = 10;
  base.seed = 11;

  const double turn_begin = base.segments.hold + base.segments.line;
  const double turn_end = turn_begin + base.segments.turn;
  const auto turn_mean = [&](const RunLog& log) {
    double sum = 0.0;
    int n = 0;
    for (const RunStep& step : log.steps) {
      if (step.t >= turn_begin - 1e-9 && step.t < turn_end - 1e-9 &&
          std::isfinite(step.objective)) {
        sum += step.objective;
        ++n;
      }
    }
    return sum / std::max(n, 1);
  };

  ScenarioConfig cold = base;
  cold.warm_start = false;

  double warm_sum = 0.0, cold_sum = 0.0;
  int lower_count = 0;
  for (int i = 0; i < base.runs; ++i) {
    const std::uint64_t seed = Rng::derive_seed(base.seed, i);
    const double w = turn_mean(simulate_run(base, seed));
    const double f = turn_mean(simulate_run(cold, seed));
    warm_sum += w;
    cold_sum += f;
    if (w < f) ++lower_count;
  }
  const double warm_mean = warm_sum / base.runs;
  const double cold_mean = cold_sum / base.runs;
  report(5, "warm-start ablation", warm_mean < cold_mean,
         fmt("turn-segment objective mean %.4f warm vs %.4f cold over 10 paired "
             "seeds (%d/10 pairs lower)",
             warm_mean, cold_mean, lower_count));
}

// 7. Integrator order: global-error slope of the fixed-step integrator on a
//    1 s tumbling maneuver against a dt = 1e-5 reference.
void criterion_7() {
  const VehicleParams p = default_vehicle_params();
  VehicleState s0;
  s0.position = Eigen::Vector3d(0.0, 0.0, -1.0);
  s0.body_rates = Eigen::Vector3d(0.45, -0.35, 0.3);
  const PropellerSpeeds u = PropellerSpeeds::hover(p);

  const auto propagate = [&](int substeps) {
    VehicleState s = s0;
    const double dt = 1.0 / substeps;
    for (int i = 0; i < substeps; ++i) s = rk4_step(s, u, p, dt);
    return s.to_vector();
  };
  const Vec12 reference = propagate(100000);  // dt = 1e-5

  std::vector<double> log_dt, log_err;
  for (int n : {50, 100, 200, 400}) {
    log_dt.push_back(std::log(1.0 / n));
    log_err.push_back(std::log((propagate(n) - reference).norm()));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int m = static_cast<int>(log_dt.size());
  for (int i = 0; i < m; ++i) {
    sx += log_dt[i];
    sy += log_err[i];
    sxx += log_dt[i] * log_dt[i];
    sxy += log_dt[i] * log_err[i];
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  report(7, "integrator order", std::abs(slope - 4.0) <= 0.2,
         fmt("global-error slope %.3f over dt in [2.5e-3, 2e-2] vs dt = 1e-5 "
             "reference (target 4.0 +/- 0.2)",
             slope));
}

// 8. Analytic sensitivities: dynamics Jacobians, stage/terminal residual
//    Jacobians, and the implied cost gradient all match central finite
//    differences on randomized problems.
void criterion_8() {
  double worst = 0.0;
  const char* worst_what = "none";

  const auto track = [&](const char* what, const Eigen::MatrixXd& analytic,
                         const Eigen::MatrixXd& numeric) {
    const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
    const double rel = (analytic - numeric).cwiseAbs().maxCoeff() / scale;
    if (rel > worst) {
      worst = rel;
      worst_what = what;
    }
  };

  for (int trial = 0; trial < 50; ++trial) {
    Rng rng(1000 + trial);
    HorizonProblem p;
    p.n_vehicles = 3;
    p.horizon = 1;
    p.dt = 0.05;
    p.leader = 0;
    p.graph = scenario_graph();
    for (int v = 0; v < 3; ++v) {
      p.params.push_back(
          perturb_model_params(default_vehicle_params(), {0.01, 0.05}, rng));
    }
    for (int e = 0; e < 6; ++e) {
      p.pair_rel_yaw.push_back(rng.uniform(-0.4, 0.4));
      p.pair_offset.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1),
                                 rng.uniform(-1, 1));
    }
    p.leader_frame.origin_offset =
        Eigen::Vector3d(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    p.leader_frame.yaw_offset = rng.uniform(-kPi, kPi);
    p.refs.stages.resize(2);
    for (StageReference& stage : p.refs.stages) {
      for (int e = 0; e < 6; ++e) {
        stage.formation_desired.emplace_back(rng.uniform(-2, 2), rng.uniform(-2, 2),
                                             rng.uniform(-1, 1));
      }
      stage.leader_position = Eigen::Vector3d(rng.uniform(-2, 2), rng.uniform(-2, 2),
                                              rng.uniform(-2, 2));
      stage.leader_yaw = rng.uniform(-2.0, 2.0);
    }
    p.initial_state.setZero(36);
    p.input_lower.setZero(12);
    p.input_upper.setConstant(12, p.params[0].max_omega_sq());

    Eigen::VectorXd x(36), du(12);
    for (int v = 0; v < 3; ++v) {
      x.segment<3>(12 * v) = Eigen::Vector3d(rng.uniform(-2, 2), rng.uniform(-2, 2),
                                             rng.uniform(-2, 2));
      x.segment<3>(12 * v + 3) = Eigen::Vector3d(
          rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
      x.segment<3>(12 * v + 6) = Eigen::Vector3d(
          rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-2.5, 2.5));
      x.segment<3>(12 * v + 9) = Eigen::Vector3d(
          rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
    }
    Eigen::VectorXd u(12);
    for (int i = 0; i < 12; ++i) {
      u[i] = rng.uniform(0.3, 2.0) * p.params[i / 4].hover_omega_sq();
    }

    // Dynamics sensitivities.
    Eigen::VectorXd x_next;
    Eigen::MatrixXd a, b;
    stacked_dynamics_step(x, u, p.params, p.dt, x_next, &a, &b);
    const double hx = 1e-6, hu = 1.0;
    Eigen::MatrixXd a_fd(36, 36), b_fd(36, 12);
    Eigen::VectorXd plus, minus;
    for (int j = 0; j < 36; ++j) {
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += hx;
      xm[j] -= hx;
      stacked_dynamics_step(xp, u, p.params, p.dt, plus);
      stacked_dynamics_step(xm, u, p.params, p.dt, minus);
      a_fd.col(j) = (plus - minus) / (2 * hx);
    }
    for (int j = 0; j < 12; ++j) {
      Eigen::VectorXd up = u, um = u;
      up[j] += hu;
      um[j] -= hu;
      stacked_dynamics_step(x, up, p.params, p.dt, plus);
      stacked_dynamics_step(x, um, p.params, p.dt, minus);
      b_fd.col(j) = (plus - minus) / (2 * hu);
    }
    track("dynamics d/dx", a, a_fd);
    track("dynamics d/du", b, b_fd);

    // Stage and terminal residual Jacobians.
    Eigen::VectorXd r;
    Eigen::MatrixXd jx, ju;
    stage_residuals(p, 0, x, u, r, &jx, &ju);
    Eigen::MatrixXd jx_fd(r.size(), 36), ju_fd(r.size(), 12);
    for (int j = 0; j < 36; ++j) {
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += hx;
      xm[j] -= hx;
      stage_residuals(p, 0, xp, u, plus);
      stage_residuals(p, 0, xm, u, minus);
      jx_fd.col(j) = (plus - minus) / (2 * hx);
    }
    for (int j = 0; j < 12; ++j) {
      Eigen::VectorXd up = u, um = u;
      up[j] += hu;
      um[j] -= hu;
      stage_residuals(p, 0, x, up, plus);
      stage_residuals(p, 0, x, um, minus);
      ju_fd.col(j) = (plus - minus) / (2 * hu);
    }
    track("stage residual d/dx", jx, jx_fd);
    track("stage residual d/du", ju, ju_fd);

    Eigen::VectorXd rt;
    Eigen::MatrixXd jt;
    terminal_residuals(p, x, rt, &jt);
    Eigen::MatrixXd jt_fd(rt.size(), 36);
    for (int j = 0; j < 36; ++j) {
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += hx;
      xm[j] -= hx;
      terminal_residuals(p, xp, plus);
      terminal_residuals(p, xm, minus);
      jt_fd.col(j) = (plus - minus) / (2 * hx);
    }
    track("terminal residual d/dx", jt, jt_fd);

    // Cost gradient along a random direction, via the residual Jacobians.
    Trajectory traj;
    traj.states = {x, x_next};
    traj.inputs = {u};
    Eigen::VectorXd dx0(36), dx1(36), du0(12);
    for (int i = 0; i < 36; ++i) dx0[i] = rng.uniform(-1, 1);
    for (int i = 0; i < 36; ++i) dx1[i] = rng.uniform(-1, 1);
    for (int i = 0; i < 12; ++i) du0[i] = rng.uniform(-1, 1) * 100.0;
    Eigen::VectorXd rt1;
    Eigen::MatrixXd jt1;
    terminal_residuals(p, x_next, rt1, &jt1);
    const double analytic_dir = r.dot(jx * dx0) + r.dot(ju * du0) + rt1.dot(jt1 * dx1);
    const double eps = 1e-6;
    Trajectory tp = traj, tm = traj;
    tp.states[0] += eps * dx0;
    tp.states[1] += eps * dx1;
    tp.inputs[0] += eps * du0;
    tm.states[0] -= eps * dx0;
    tm.states[1] -= eps * dx1;
    tm.inputs[0] -= eps * du0;
    const double numeric_dir =
        (horizon_cost(p, tp) - horizon_cost(p, tm)) / (2 * eps);
    Eigen::MatrixXd one_a(1, 1), one_n(1, 1);
    one_a << analytic_dir;
    one_n << numeric_dir;
    track("cost gradient", one_a, one_n);
  }
  report(8, "analytic sensitivities", worst <= 1e-5,
         fmt("worst relative deviation %.2e from central differences over 50 "
             "random problems (%s; limit 1e-5)",
             worst, worst_what));
}

// 9. Box-QP solver equivalence against exhaustive active-set enumeration.
void criterion_9() {
  double worst_gap = 0.0;
  int solved = 0;
  Rng rng(9090);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform01() * 6.0 - 1e-12);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) m(i, j) = rng.uniform(-1, 1);
    }
    QpSubproblem qp;
    qp.hessian = m.transpose() * m +
                 rng.uniform(0.1, 1.0) * Eigen::MatrixXd::Identity(n, n);
    qp.gradient.resize(n);
    qp.lower.resize(n);
    qp.upper.resize(n);
    for (int i = 0; i < n; ++i) {
      qp.gradient[i] = rng.uniform(-2, 2);
      qp.lower[i] = rng.uniform(-2.0, -0.05);
      qp.upper[i] = rng.uniform(0.05, 2.0);
      if (rng.uniform01() < 0.2) qp.upper[i] = qp.lower[i] + 1e-3;
    }
    qp.constant = 0.0;
    qp.levenberg = 0.0;
    qp.input_scale = 1.0;

    const QpSolution sol = qp_solve(qp, 3 * n + 50, nullptr);
    if (!sol.feasible) continue;
    const double obj_solver = 0.5 * sol.primal.dot(qp.hessian * sol.primal) +
                              qp.gradient.dot(sol.primal);

    // Every partition of the variables into {lower, free, upper} yields one
    // candidate point; the optimum is the best bound-feasible candidate.
    double obj_best = 1e300;
    int patterns = 1;
    for (int i = 0; i < n; ++i) patterns *= 3;
    for (int code = 0; code < patterns; ++code) {
      int rem = code;
      std::vector<int> state(n);
      std::vector<int> free_idx;
      Eigen::VectorXd z(n);
      for (int i = 0; i < n; ++i) {
        state[i] = rem % 3;
        rem /= 3;
        if (state[i] == 0) {
          free_idx.push_back(i);
        } else {
          z[i] = state[i] == 1 ? qp.lower[i] : qp.upper[i];
        }
      }
      const int nf = static_cast<int>(free_idx.size());
      if (nf > 0) {
        Eigen::MatrixXd hff(nf, nf);
        Eigen::VectorXd rhs(nf);
        for (int a = 0; a < nf; ++a) {
          rhs[a] = -qp.gradient[free_idx[a]];
          for (int b = 0; b < nf; ++b) hff(a, b) = qp.hessian(free_idx[a], free_idx[b]);
          for (int i = 0; i < n; ++i) {
            if (state[i] != 0) rhs[a] -= qp.hessian(free_idx[a], i) * z[i];
          }
        }
        const Eigen::VectorXd zf = hff.ldlt().solve(rhs);
        bool inside = true;
        for (int a = 0; a < nf; ++a) {
          if (zf[a] < qp.lower[free_idx[a]] - 1e-9 ||
              zf[a] > qp.upper[free_idx[a]] + 1e-9) {
            inside = false;
            break;
          }
          z[free_idx[a]] = zf[a];
        }
        if (!inside) continue;
      }
      const double obj = 0.5 * z.dot(qp.hessian * z) + qp.gradient.dot(z);
      obj_best = std::min(obj_best, obj);
    }
    worst_gap = std::max(worst_gap, std::abs(obj_solver - obj_best));
    ++solved;
  }
  report(9, "box-QP equivalence", solved == 100 && worst_gap < 1e-8,
         fmt("%d/100 random QPs (n <= 6) solved; worst objective gap %.2e vs "
             "exhaustive enumeration (limit 1e-8)",
             solved, worst_gap));
}

// 10. Relative-yaw estimator exactness on random noiseless geometry.
void criterion_10() {
  Rng rng(10101);
  double worst = 0.0;
  const auto body_disp = [](const Eigen::Vector3d& p_i, const Eigen::Vector3d& rpy_i,
                            const Eigen::Vector3d& p_j) {
    return (euler_to_rotation(rpy_i).transpose() * (p_j - p_i)).eval();
  };
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d p1(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    Eigen::Vector3d p2(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    if ((p2 - p1).head<2>().norm() < 0.1) p2.x() += 1.0;
    const Eigen::Vector3d rpy1(rng.uniform(-60 * kDeg, 60 * kDeg),
                               rng.uniform(-60 * kDeg, 60 * kDeg),
                               rng.uniform(-kPi, kPi));
    const Eigen::Vector3d rpy2(rng.uniform(-60 * kDeg, 60 * kDeg),
                               rng.uniform(-60 * kDeg, 60 * kDeg),
                               rng.uniform(-kPi, kPi));
    const RelativeMeasurement m12 =
        measurement_from_geometry(body_disp(p1, rpy1, p2), 0.0, rng);
    const RelativeMeasurement m21 =
        measurement_from_geometry(body_disp(p2, rpy2, p1), 0.0, rng);
    const AttitudePartial a1{rpy1.x(), rpy1.y()};
    const AttitudePartial a2{rpy2.x(), rpy2.y()};
    const double est = relative_yaw_estimate(m12, m21, a1, a2);
    worst = std::max(worst, std::abs(wrap_pi(est - (rpy1.z() - rpy2.z()))));
  }
  report(10, "relative-yaw exactness", worst <= 1e-9,
         fmt("worst error %.2e rad over 1000 noiseless tilted configurations "
             "(limit 1e-9)",
             worst));
}

}  // namespace

int main() {
  std::printf("acceptance suite: three-vehicle relative-sensing formation MPC\n");
  criterion_1();
  criterion_2();
  criteria_3_4_6();
  criterion_5();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  std::printf("%d/10 criteria passed\n", 10 - g_failures);
  return g_failures;
}

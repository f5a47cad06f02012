#include "relmpc/rti.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "relmpc/rotation.hpp"

namespace relmpc {

namespace {

constexpr double kLevenberg = 1e-8;
constexpr double kLevenbergCap = 1e2;
constexpr double kStepTol = 1e-11;
constexpr double kDualTol = 1e-9;
constexpr int kMaxInitialIterations = 200;

using Clock = std::chrono::steady_clock;

double seconds_since(const Clock::time_point& start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_trajectory(const NlpModel& model, const Trajectory& traj, const char* where) {
  if (traj.states.size() != static_cast<std::size_t>(model.horizon() + 1) ||
      traj.inputs.size() != static_cast<std::size_t>(model.horizon())) {
    throw AssemblyError(std::string(where) + ": trajectory length mismatch");
  }
  for (const Eigen::VectorXd& x : traj.states) {
    if (x.size() != model.state_dim()) {
      throw AssemblyError(std::string(where) + ": state dimension mismatch");
    }
  }
  for (const Eigen::VectorXd& u : traj.inputs) {
    if (u.size() != model.input_dim()) {
      throw AssemblyError(std::string(where) + ": input dimension mismatch");
    }
  }
}

}  // namespace

QpSubproblem condense(const NlpModel& model, const Trajectory& guess) {
  check_trajectory(model, guess, "condense");
  const int n_stages = model.horizon();
  const int nx = model.state_dim();
  const int nu = model.input_dim();
  const int nv = n_stages * nu;
  const double sigma = model.input_scale();

  QpSubproblem qp;
  qp.levenberg = 0.0;
  qp.input_scale = sigma;
  qp.hessian.setZero(nv, nv);
  qp.gradient.setZero(nv);
  qp.lower.resize(nv);
  qp.upper.resize(nv);
  qp.state_offset.setZero((n_stages + 1) * nx);
  qp.state_map.setZero((n_stages + 1) * nx, nv);

  qp.state_offset.head(nx) = model.initial_state() - guess.states[0];

  Eigen::VectorXd r, x_next;
  Eigen::MatrixXd jx, ju, a, b, jhat;
  Eigen::VectorXd rbar;
  double constant = 0.0;

  for (int k = 0; k < n_stages; ++k) {
    qp.lower.segment(k * nu, nu) = (model.input_lower() - guess.inputs[k]) / sigma;
    qp.upper.segment(k * nu, nu) = (model.input_upper() - guess.inputs[k]) / sigma;

    const auto s_k = qp.state_map.middleRows(k * nx, nx);
    const auto e_k = qp.state_offset.segment(k * nx, nx);

    model.residuals(k, guess.states[k], guess.inputs[k], r, &jx, &ju);
    jhat.noalias() = jx * s_k;
    jhat.middleCols(k * nu, nu) += sigma * ju;
    rbar.noalias() = r + jx * e_k;
    qp.hessian.noalias() += jhat.transpose() * jhat;
    qp.gradient.noalias() += jhat.transpose() * rbar;
    constant += 0.5 * rbar.squaredNorm();

    model.dynamics(k, guess.states[k], guess.inputs[k], x_next, a, b);
    auto s_next = qp.state_map.middleRows((k + 1) * nx, nx);
    s_next.noalias() = a * s_k;
    s_next.middleCols(k * nu, nu) += sigma * b;
    qp.state_offset.segment((k + 1) * nx, nx).noalias() =
        a * e_k + (x_next - guess.states[k + 1]);
  }

  Eigen::MatrixXd jv;
  model.terminal(guess.states[n_stages], r, &jv);
  jhat.noalias() = jv * qp.state_map.middleRows(n_stages * nx, nx);
  rbar.noalias() = r + jv * qp.state_offset.segment(n_stages * nx, nx);
  qp.hessian.noalias() += jhat.transpose() * jhat;
  qp.gradient.noalias() += jhat.transpose() * rbar;
  constant += 0.5 * rbar.squaredNorm();
  qp.constant = constant;

  if (!qp.hessian.allFinite() || !qp.gradient.allFinite() ||
      !qp.state_offset.allFinite() || !qp.state_map.allFinite() ||
      !qp.lower.allFinite() || !qp.upper.allFinite() || !std::isfinite(constant)) {
    throw CondensingError("condense: non-finite linearization");
  }

  // Gauss-Newton Hessians are only guaranteed semidefinite; shift the
  // diagonal just enough to make the factorization succeed.
  if (Eigen::LLT<Eigen::MatrixXd>(qp.hessian).info() != Eigen::Success) {
    double shift = kLevenberg * std::max(1.0, qp.hessian.diagonal().maxCoeff());
    while (Eigen::LLT<Eigen::MatrixXd>(
               Eigen::MatrixXd(qp.hessian +
                               shift * Eigen::MatrixXd::Identity(nv, nv)))
               .info() != Eigen::Success) {
      shift *= 10.0;
      if (shift > kLevenbergCap * std::max(1.0, qp.hessian.diagonal().maxCoeff())) {
        throw CondensingError("condense: Hessian cannot be regularized");
      }
    }
    qp.hessian.diagonal().array() += shift;
    qp.levenberg = shift;
  }
  return qp;
}

double qp_model_value(const QpSubproblem& qp, const Eigen::VectorXd& step) {
  const double quad = 0.5 * step.dot(qp.hessian * step) -
                      0.5 * qp.levenberg * step.squaredNorm();
  return quad + qp.gradient.dot(step) + qp.constant;
}

QpSolution qp_solve(const QpSubproblem& qp, int max_iters,
                    const std::vector<signed char>* warm_active) {
  const int n = static_cast<int>(qp.gradient.size());
  QpSolution sol;
  sol.active_set.assign(n, 0);
  sol.primal.setZero(n);

  if (!qp.hessian.allFinite() || !qp.gradient.allFinite() || !qp.lower.allFinite() ||
      !qp.upper.allFinite()) {
    return sol;
  }
  for (int i = 0; i < n; ++i) {
    if (qp.lower[i] > qp.upper[i] + 1e-12) return sol;
  }

  Eigen::VectorXd z(n);
  std::vector<signed char> active(n, 0);
  if (warm_active != nullptr && static_cast<int>(warm_active->size()) == n) {
    active = *warm_active;
  }
  for (int i = 0; i < n; ++i) {
    if (active[i] < 0) {
      z[i] = qp.lower[i];
    } else if (active[i] > 0) {
      z[i] = qp.upper[i];
    } else {
      z[i] = std::clamp(0.0, qp.lower[i], qp.upper[i]);
    }
  }

  Eigen::VectorXd grad(n), direction, g_free;
  Eigen::MatrixXd h_free;
  std::vector<int> free_idx;
  free_idx.reserve(n);

  for (int iter = 1; iter <= max_iters; ++iter) {
    grad.noalias() = qp.hessian * z + qp.gradient;
    if (!grad.allFinite()) return sol;

    free_idx.clear();
    for (int i = 0; i < n; ++i) {
      if (active[i] == 0) free_idx.push_back(i);
    }
    const int nf = static_cast<int>(free_idx.size());
    h_free.resize(nf, nf);
    g_free.resize(nf);
    for (int c = 0; c < nf; ++c) {
      g_free[c] = grad[free_idx[c]];
      for (int rr = 0; rr < nf; ++rr) {
        h_free(rr, c) = qp.hessian(free_idx[rr], free_idx[c]);
      }
    }
    direction = -h_free.ldlt().solve(g_free);
    if (!direction.allFinite()) return sol;

    // Longest step along the free-set Newton direction before a bound blocks.
    double alpha = 1.0;
    int blocking = -1;
    signed char blocking_side = 0;
    for (int c = 0; c < nf; ++c) {
      const int i = free_idx[c];
      const double d = direction[c];
      if (d > kStepTol) {
        const double limit = (qp.upper[i] - z[i]) / d;
        if (limit < alpha) {
          alpha = limit;
          blocking = i;
          blocking_side = 1;
        }
      } else if (d < -kStepTol) {
        const double limit = (qp.lower[i] - z[i]) / d;
        if (limit < alpha) {
          alpha = limit;
          blocking = i;
          blocking_side = -1;
        }
      }
    }

    if (blocking >= 0) {
      // Partial step: pin the blocking variable and keep iterating.
      alpha = std::max(alpha, 0.0);
      for (int c = 0; c < nf; ++c) z[free_idx[c]] += alpha * direction[c];
      z[blocking] = blocking_side > 0 ? qp.upper[blocking] : qp.lower[blocking];
      active[blocking] = blocking_side;
      continue;
    }

    // Full step: the current free set is now solved exactly, so optimality
    // reduces to the multiplier signs on the active bounds.
    for (int c = 0; c < nf; ++c) z[free_idx[c]] += direction[c];
    grad.noalias() = qp.hessian * z + qp.gradient;
    if (!grad.allFinite()) return sol;
    int worst = -1;
    double worst_violation = kDualTol;
    for (int i = 0; i < n; ++i) {
      double violation = 0.0;
      if (active[i] < 0) {
        violation = -grad[i];  // at a lower bound the gradient must be >= 0
      } else if (active[i] > 0) {
        violation = grad[i];  // at an upper bound it must be <= 0
      }
      if (violation > worst_violation) {
        worst_violation = violation;
        worst = i;
      }
    }
    if (worst < 0) {
      sol.primal = z;
      sol.active_set = active;
      sol.feasible = true;
      sol.iterations = iter;
      return sol;
    }
    active[worst] = 0;
  }
  return sol;  // iteration budget exhausted
}

double nlp_objective(const NlpModel& model, const Trajectory& traj) {
  check_trajectory(model, traj, "nlp_objective");
  Eigen::VectorXd r;
  double cost = 0.0;
  for (int k = 0; k < model.horizon(); ++k) {
    model.residuals(k, traj.states[k], traj.inputs[k], r, nullptr, nullptr);
    cost += 0.5 * r.squaredNorm();
  }
  model.terminal(traj.states[model.horizon()], r, nullptr);
  cost += 0.5 * r.squaredNorm();
  return cost;
}

double kkt_tolerance(const NlpModel& model, const Trajectory& traj) {
  check_trajectory(model, traj, "kkt_tolerance");
  const int n_stages = model.horizon();
  const double sigma = model.input_scale();
  const Eigen::VectorXd lb = model.input_lower() / sigma;
  const Eigen::VectorXd ub = model.input_upper() / sigma;

  double kkt =
      (model.initial_state() - traj.states[0]).lpNorm<Eigen::Infinity>();

  std::vector<Eigen::MatrixXd> a(n_stages), b(n_stages), ju(n_stages);
  std::vector<Eigen::VectorXd> grad_x(n_stages), defect(n_stages);
  std::vector<Eigen::VectorXd> r_stage(n_stages);
  Eigen::VectorXd r, x_next;
  Eigen::MatrixXd jx;
  for (int k = 0; k < n_stages; ++k) {
    model.residuals(k, traj.states[k], traj.inputs[k], r, &jx, &ju[k]);
    r_stage[k] = r;
    grad_x[k].noalias() = jx.transpose() * r;
    model.dynamics(k, traj.states[k], traj.inputs[k], x_next, a[k], b[k]);
    defect[k] = x_next - traj.states[k + 1];
  }
  model.terminal(traj.states[n_stages], r, &jx);
  Eigen::VectorXd adjoint = jx.transpose() * r;

  for (int k = n_stages - 1; k >= 0; --k) {
    const Eigen::VectorXd grad_u =
        ju[k].transpose() * r_stage[k] + b[k].transpose() * adjoint;
    const Eigen::VectorXd u_hat = traj.inputs[k] / sigma;
    const Eigen::VectorXd target = u_hat - sigma * grad_u;
    double stationarity = 0.0;
    double bound_violation = 0.0;
    for (int i = 0; i < u_hat.size(); ++i) {
      const double projected = std::clamp(target[i], lb[i], ub[i]);
      stationarity = std::max(stationarity, std::abs(u_hat[i] - projected));
      const double clamped = std::clamp(u_hat[i], lb[i], ub[i]);
      bound_violation = std::max(bound_violation, std::abs(u_hat[i] - clamped));
    }
    kkt = std::max({kkt, stationarity, bound_violation,
                    defect[k].lpNorm<Eigen::Infinity>()});
    adjoint = grad_x[k] + a[k].transpose() * adjoint;
  }
  return kkt;
}

SqpStepResult sqp_step(const NlpModel& model, const Trajectory& guess,
                       RtiMemory* memory) {
  const auto start = Clock::now();
  SqpStepResult out;
  out.status.sqp_iterations = 1;

  const auto fall_back = [&]() {
    out.traj = guess;
    out.status.used_fallback = true;
    try {
      out.status.kkt_tolerance = kkt_tolerance(model, guess);
      out.status.objective = nlp_objective(model, guess);
    } catch (const std::exception&) {
      out.status.kkt_tolerance = std::numeric_limits<double>::infinity();
      out.status.objective = std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(out.status.kkt_tolerance)) {
      out.status.kkt_tolerance = std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(out.status.objective)) {
      out.status.objective = std::numeric_limits<double>::infinity();
    }
    out.status.cpu_time = seconds_since(start);
  };

  try {
    const QpSubproblem qp = condense(model, guess);
    const int nv = static_cast<int>(qp.gradient.size());
    const std::vector<signed char>* warm =
        (memory != nullptr &&
         static_cast<int>(memory->qp_active_set.size()) == nv)
            ? &memory->qp_active_set
            : nullptr;
    const QpSolution sol = qp_solve(qp, 3 * nv + 50, warm);
    if (!sol.feasible) {
      fall_back();
      return out;
    }
    if (memory != nullptr) memory->qp_active_set = sol.active_set;

    const int n_stages = model.horizon();
    const int nx = model.state_dim();
    const int nu = model.input_dim();
    Trajectory next;
    next.states.resize(n_stages + 1);
    next.inputs.resize(n_stages);
    for (int k = 0; k <= n_stages; ++k) {
      next.states[k] = guess.states[k] + qp.state_offset.segment(k * nx, nx) +
                       qp.state_map.middleRows(k * nx, nx) * sol.primal;
    }
    for (int k = 0; k < n_stages; ++k) {
      Eigen::VectorXd u =
          guess.inputs[k] + qp.input_scale * sol.primal.segment(k * nu, nu);
      next.inputs[k] =
          u.cwiseMax(model.input_lower()).cwiseMin(model.input_upper());
    }
    out.traj = std::move(next);
    out.status.kkt_tolerance = kkt_tolerance(model, out.traj);
    out.status.objective = nlp_objective(model, out.traj);
    out.status.cpu_time = seconds_since(start);
  } catch (const std::exception&) {
    fall_back();
  }
  return out;
}

Trajectory shift_and_transform(const Trajectory& traj,
                               const std::vector<FrameMotion>& motion) {
  const int n_stages = static_cast<int>(traj.inputs.size());
  const auto transform = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    if (motion.empty()) return x;
    if (x.size() != 12 * static_cast<int>(motion.size())) {
      throw AssemblyError("shift_and_transform: motion does not match state layout");
    }
    Eigen::VectorXd y = x;
    for (std::size_t v = 0; v < motion.size(); ++v) {
      const Eigen::Matrix3d rot = rot_z(-motion[v].yaw);
      y.segment<3>(12 * v) = rot * (x.segment<3>(12 * v) - motion[v].translation);
      y.segment<3>(12 * v + 3) = rot * x.segment<3>(12 * v + 3);
      y[12 * v + 8] = wrap_pi(x[12 * v + 8] - motion[v].yaw);
    }
    return y;
  };

  Trajectory out;
  out.states.reserve(n_stages + 1);
  out.inputs.reserve(n_stages);
  for (int k = 1; k <= n_stages; ++k) out.states.push_back(transform(traj.states[k]));
  out.states.push_back(out.states.back());
  for (int k = 1; k < n_stages; ++k) out.inputs.push_back(traj.inputs[k]);
  out.inputs.push_back(traj.inputs[n_stages - 1]);
  return out;
}

RtiResult rti_control_step(const NlpModel& model, const Trajectory& guess,
                           const RtiBudget& budget, bool is_first,
                           RtiMemory* memory) {
  const auto start = Clock::now();
  Trajectory traj = guess;
  SolverStatus status;
  int iterations = 0;
  bool fallback = false;

  while (true) {
    SqpStepResult res = sqp_step(model, traj, memory);
    ++iterations;
    status = res.status;
    if (res.status.used_fallback) {
      fallback = true;
      break;
    }
    traj = std::move(res.traj);
    if (is_first) {
      if (status.kkt_tolerance <= budget.initial_kkt ||
          iterations >= kMaxInitialIterations) {
        break;
      }
    } else {
      const bool within_budget =
          budget.test_mode_iters > 0
              ? iterations < budget.test_mode_iters
              : seconds_since(start) <= budget.sample_time;
      if (!within_budget || status.kkt_tolerance < budget.running_kkt) break;
    }
  }

  status.sqp_iterations = iterations;
  status.used_fallback = fallback;
  status.cpu_time = seconds_since(start);

  RtiResult out;
  out.applied_input = traj.inputs[0];
  out.warm_start = shift_and_transform(traj, model.frame_motion(traj.states[1]));
  if (memory != nullptr && !memory->qp_active_set.empty()) {
    // Shift the QP working set along with the trajectory: drop stage 0,
    // leave the duplicated terminal stage unconstrained.
    const int nu = model.input_dim();
    std::vector<signed char>& as = memory->qp_active_set;
    if (static_cast<int>(as.size()) == model.horizon() * nu) {
      as.erase(as.begin(), as.begin() + nu);
      as.insert(as.end(), nu, 0);
    } else {
      as.clear();
    }
  }
  out.status = status;
  return out;
}

HorizonNlp::HorizonNlp(const HorizonProblem& problem) : problem_(&problem) {
  double scale = 0.0;
  for (const VehicleParams& p : problem.params) scale += p.hover_omega_sq();
  input_scale_ = scale / static_cast<double>(problem.params.size());
}

int HorizonNlp::stage_residual_dim() const { return relmpc::stage_residual_dim(*problem_); }

int HorizonNlp::terminal_residual_dim() const {
  return relmpc::terminal_residual_dim(*problem_);
}

void HorizonNlp::dynamics(int stage, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                          Eigen::VectorXd& x_next, Eigen::MatrixXd& a,
                          Eigen::MatrixXd& b) const {
  (void)stage;
  stacked_dynamics_step(x, u, problem_->params, problem_->dt, x_next, &a, &b);
}

void HorizonNlp::residuals(int stage, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                           Eigen::VectorXd& r, Eigen::MatrixXd* jx,
                           Eigen::MatrixXd* ju) const {
  stage_residuals(*problem_, stage, x, u, r, jx, ju);
}

void HorizonNlp::terminal(const Eigen::VectorXd& x, Eigen::VectorXd& r,
                          Eigen::MatrixXd* jx) const {
  terminal_residuals(*problem_, x, r, jx);
}

std::vector<FrameMotion> HorizonNlp::frame_motion(const Eigen::VectorXd& predicted) const {
  std::vector<FrameMotion> motion(problem_->n_vehicles);
  for (int v = 0; v < problem_->n_vehicles; ++v) {
    motion[v].translation = predicted.segment<3>(12 * v);
    motion[v].yaw = predicted[12 * v + 8];
  }
  return motion;
}

}  // namespace relmpc

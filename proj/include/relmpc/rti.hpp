#pragma once

#include <Eigen/Dense>
#include <vector>

#include "relmpc/errors.hpp"
#include "relmpc/ocp.hpp"

namespace relmpc {

// One-step motion of a vehicle's horizon frame: where the new frame origin
// sits in the old frame, and how much it is yawed.
struct FrameMotion {
  Eigen::Vector3d translation{Eigen::Vector3d::Zero()};
  double yaw{0.0};
};

// Multiple-shooting nonlinear least-squares problem seen by the solver:
// dynamics, weighted residuals and input bounds per stage. Implemented by the
// formation horizon problem and by small test models.
class NlpModel {
 public:
  virtual ~NlpModel() = default;
  virtual int horizon() const = 0;
  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual int stage_residual_dim() const = 0;
  virtual int terminal_residual_dim() const = 0;
  virtual const Eigen::VectorXd& initial_state() const = 0;
  virtual void dynamics(int stage, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                        Eigen::VectorXd& x_next, Eigen::MatrixXd& a,
                        Eigen::MatrixXd& b) const = 0;
  virtual void residuals(int stage, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         Eigen::VectorXd& r, Eigen::MatrixXd* jx,
                         Eigen::MatrixXd* ju) const = 0;
  virtual void terminal(const Eigen::VectorXd& x, Eigen::VectorXd& r,
                        Eigen::MatrixXd* jx) const = 0;
  virtual const Eigen::VectorXd& input_lower() const = 0;
  virtual const Eigen::VectorXd& input_upper() const = 0;
  // Characteristic input magnitude; the solver works on inputs divided by
  // this, so gradients and KKT values are O(1).
  virtual double input_scale() const { return 1.0; }
  // How the model's reference frame moves over one step when the given
  // predicted state is reached; empty means a pure time shift.
  virtual std::vector<FrameMotion> frame_motion(const Eigen::VectorXd&) const {
    return {};
  }
};

// Dense box-constrained QP over the scaled input steps of the whole horizon,
// produced by condensing the linearized problem.
struct QpSubproblem {
  Eigen::MatrixXd hessian;   // regularized Gauss-Newton Hessian
  Eigen::VectorXd gradient;
  Eigen::VectorXd lower;     // bounds on the scaled input step
  Eigen::VectorXd upper;
  double levenberg{0.0};  // diagonal shift applied when JᵀJ is not PD
  double input_scale{1.0};
  double constant{0.0};      // residual part of the quadratic model
  Eigen::VectorXd state_offset;  // stacked per-stage state deviation at zero step
  Eigen::MatrixXd state_map;     // stacked per-stage sensitivity to the step
};

struct QpSolution {
  Eigen::VectorXd primal;                // scaled input step
  std::vector<signed char> active_set;   // -1 lower, 0 free, +1 upper
  bool feasible{false};
  int iterations{0};
};

struct SolverStatus {
  double kkt_tolerance{0.0};
  double objective{0.0};
  double cpu_time{0.0};  // seconds
  int sqp_iterations{0};
  bool used_fallback{false};
};

struct RtiBudget {
  double sample_time{0.05};
  double initial_kkt{1e-3};
  double running_kkt{10.0};
  // When positive, replaces the wall-clock budget with a fixed iteration
  // count for reproducible runs.
  int test_mode_iters{0};
};

// State carried between control steps: the QP active set, shifted along with
// the warm-start trajectory.
struct RtiMemory {
  std::vector<signed char> qp_active_set;
};

struct SqpStepResult {
  Trajectory traj;
  SolverStatus status;
};

struct RtiResult {
  Eigen::VectorXd applied_input;
  Trajectory warm_start;
  SolverStatus status;
};

// Eliminate the state variables of the linearized multiple-shooting problem
// around the guess, leaving a dense QP over the scaled input steps.
QpSubproblem condense(const NlpModel& model, const Trajectory& guess);

// Quadratic model value (without the regularization shift) at a given step.
double qp_model_value(const QpSubproblem& qp, const Eigen::VectorXd& step);

// Primal active-set solver for the box QP. An optional warm active set seeds
// the working set.
QpSolution qp_solve(const QpSubproblem& qp, int max_iters,
                    const std::vector<signed char>* warm_active = nullptr);

// One Gauss-Newton iteration: linearize, condense, solve the QP, take the
// full step, and report the KKT tolerance at the new iterate. QP failures
// leave the guess unchanged and set used_fallback.
SqpStepResult sqp_step(const NlpModel& model, const Trajectory& guess,
                       RtiMemory* memory = nullptr);

// Infinity norm of the first-order optimality residual at a trajectory:
// projected input stationarity, dynamics defects, initial-state mismatch and
// bound violations.
double kkt_tolerance(const NlpModel& model, const Trajectory& traj);

// 0.5 * sum of squared residuals along the trajectory.
double nlp_objective(const NlpModel& model, const Trajectory& traj);

// Warm start for the next horizon: drop stage 0, duplicate the last stage,
// and re-express every vehicle's states in its one-step-advanced frame.
Trajectory shift_and_transform(const Trajectory& traj,
                               const std::vector<FrameMotion>& motion);

// Full control step: iterate sqp_step within the budget (to convergence on
// the first call), fall back to the previous guess on failure, and return the
// stage-0 input plus the shifted warm start.
RtiResult rti_control_step(const NlpModel& model, const Trajectory& guess,
                           const RtiBudget& budget, bool is_first,
                           RtiMemory* memory = nullptr);

// The formation horizon problem viewed through the solver interface.
class HorizonNlp : public NlpModel {
 public:
  explicit HorizonNlp(const HorizonProblem& problem);
  int horizon() const override { return problem_->horizon; }
  int state_dim() const override { return problem_->state_dim(); }
  int input_dim() const override { return problem_->input_dim(); }
  int stage_residual_dim() const override;
  int terminal_residual_dim() const override;
  const Eigen::VectorXd& initial_state() const override {
    return problem_->initial_state;
  }
  void dynamics(int stage, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                Eigen::VectorXd& x_next, Eigen::MatrixXd& a,
                Eigen::MatrixXd& b) const override;
  void residuals(int stage, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                 Eigen::VectorXd& r, Eigen::MatrixXd* jx,
                 Eigen::MatrixXd* ju) const override;
  void terminal(const Eigen::VectorXd& x, Eigen::VectorXd& r,
                Eigen::MatrixXd* jx) const override;
  const Eigen::VectorXd& input_lower() const override { return problem_->input_lower; }
  const Eigen::VectorXd& input_upper() const override { return problem_->input_upper; }
  double input_scale() const override { return input_scale_; }
  std::vector<FrameMotion> frame_motion(const Eigen::VectorXd& predicted) const override;

 private:
  const HorizonProblem* problem_;
  double input_scale_;
};

}  // namespace relmpc

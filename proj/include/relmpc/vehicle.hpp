#pragma once

// Six-DOF rigid-body quadrotor model with propeller mixing and a fixed-step
// RK4 integrator. Axis convention is NED (z down, gravity +z); positive total
// thrust acts along -z of the body frame. Used both as the simulated plant
// (true parameters) and as the NMPC prediction model (perturbed parameters).

#include <Eigen/Dense>

#include "relmpc/errors.hpp"

namespace relmpc {

using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using Mat12x4 = Eigen::Matrix<double, 12, 4>;

inline constexpr double kPitchGuard = 1e-3;  // rad, Euler-rate singularity margin

/// Rigid-body state: position [m], velocity [m/s] (both in the inertial
/// frame), Z-Y-X Euler angles [rad], body rates [rad/s].
struct VehicleState {
  Eigen::Vector3d position{Eigen::Vector3d::Zero()};
  Eigen::Vector3d velocity{Eigen::Vector3d::Zero()};
  Eigen::Vector3d euler{Eigen::Vector3d::Zero()};
  Eigen::Vector3d body_rates{Eigen::Vector3d::Zero()};

  Vec12 to_vector() const {
    Vec12 v;
    v << position, velocity, euler, body_rates;
    return v;
  }
  static VehicleState from_vector(const Vec12& v) {
    VehicleState s;
    s.position = v.segment<3>(0);
    s.velocity = v.segment<3>(3);
    s.euler = v.segment<3>(6);
    s.body_rates = v.segment<3>(9);
    return s;
  }
};

struct VehicleParams {
  double mass{0.5};                                      // kg
  Eigen::Vector3d inertia{2.5e-3, 2.5e-3, 5.0e-3};       // kg m^2, diagonal
  double arm_length{0.18};                               // m
  double thrust_coeff{1.242451014414167e-05};            // N/(rad/s)^2
  double torque_coeff{0.016 * 1.242451014414167e-05};    // N m/(rad/s)^2
  double max_prop_speed{628.3185307179587};              // rad/s (6000 rpm)
  double gravity{9.81};                                  // m/s^2 along +z (NED)

  double max_omega_sq() const { return max_prop_speed * max_prop_speed; }
  /// Squared propeller speed at which four rotors balance gravity.
  double hover_omega_sq() const { return mass * gravity / (4.0 * thrust_coeff); }
};

/// Nominal vehicle: hover at half the speed envelope (3000 of 6000 rpm),
/// thrust coefficient fixed by that hover condition.
VehicleParams default_vehicle_params();

/// Squared propeller speeds, [rad/s]^2, rotors 1..4.
struct PropellerSpeeds {
  Eigen::Vector4d omega_sq{Eigen::Vector4d::Zero()};

  static PropellerSpeeds hover(const VehicleParams& p) {
    PropellerSpeeds w;
    w.omega_sq.setConstant(p.hover_omega_sq());
    return w;
  }
};

/// Body-frame generalized force. For a quadrotor the force has only a third
/// component, which is <= 0 (thrust pulls toward -z body).
struct Wrench {
  Eigen::Vector3d body_force{Eigen::Vector3d::Zero()};
  Eigen::Vector3d body_torque{Eigen::Vector3d::Zero()};
};

/// 4x4 map from squared propeller speeds to (total thrust, body torques).
/// Row 0 is the thrust magnitude; the stored body force is (0, 0, -thrust).
Eigen::Matrix4d mixer_matrix(const VehicleParams& params);

/// Generalized forces produced by the propellers.
/// Throws DomainError when a squared speed leaves [0, max^2].
Wrench mixer(const PropellerSpeeds& omega_sq, const VehicleParams& params);

/// Squared propeller speeds that realize a wrench.
/// Throws InfeasibleWrenchError when the solution has a negative component.
PropellerSpeeds inverse_mixer(const Wrench& wrench, const VehicleParams& params);

/// Continuous-time state derivative. Throws SingularityError when |pitch|
/// reaches pi/2 - kPitchGuard.
Vec12 dynamics_deriv(const VehicleState& state, const Wrench& wrench,
                     const VehicleParams& params);

/// Jacobians of dynamics_deriv with respect to the state and to the squared
/// propeller speeds (through the mixer).
void dynamics_jacobians(const VehicleState& state, const PropellerSpeeds& omega_sq,
                        const VehicleParams& params, Mat12* d_state, Mat12x4* d_input);

/// Classical RK4 step with the input held constant over the step. Euler
/// angles of the result are wrapped into (-pi, pi].
VehicleState rk4_step(const VehicleState& state, const PropellerSpeeds& omega_sq,
                      const VehicleParams& params, double dt);

/// RK4 step with first-order sensitivities of the next state w.r.t. the
/// current state and the squared propeller speeds.
VehicleState rk4_step_sensitivities(const VehicleState& state,
                                    const PropellerSpeeds& omega_sq,
                                    const VehicleParams& params, double dt,
                                    Mat12& d_state, Mat12x4& d_input);

}  // namespace relmpc

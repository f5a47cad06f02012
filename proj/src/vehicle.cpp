#include "relmpc/vehicle.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "relmpc/rotation.hpp"

namespace relmpc {

VehicleParams default_vehicle_params() {
  VehicleParams p;
  p.max_prop_speed = 6000.0 * 2.0 * std::numbers::pi / 60.0;
  const double hover_speed = 0.5 * p.max_prop_speed;  // 3000 rpm
  p.thrust_coeff = p.mass * p.gravity / (4.0 * hover_speed * hover_speed);
  p.torque_coeff = 0.016 * p.thrust_coeff;
  return p;
}

Eigen::Matrix4d mixer_matrix(const VehicleParams& params) {
  const double ct = params.thrust_coeff;
  const double cq = params.torque_coeff;
  const double d = params.arm_length;
  Eigen::Matrix4d m;
  m << ct, ct, ct, ct,                      // total thrust magnitude
      0.0, d * ct, 0.0, -d * ct,            // roll torque
      -d * ct, 0.0, d * ct, 0.0,            // pitch torque
      cq, -cq, cq, -cq;                     // yaw torque
  return m;
}

Wrench mixer(const PropellerSpeeds& omega_sq, const VehicleParams& params) {
  const double max_sq = params.max_omega_sq();
  for (int i = 0; i < 4; ++i) {
    const double w = omega_sq.omega_sq[i];
    if (!(w >= 0.0 && w <= max_sq)) {
      throw DomainError("mixer: squared speed of rotor " + std::to_string(i + 1) +
                        " outside [0, max^2]: " + std::to_string(w));
    }
  }
  const Eigen::Vector4d tw = mixer_matrix(params) * omega_sq.omega_sq;
  Wrench w;
  w.body_force = Eigen::Vector3d(0.0, 0.0, -tw[0]);
  w.body_torque = tw.tail<3>();
  return w;
}

PropellerSpeeds inverse_mixer(const Wrench& wrench, const VehicleParams& params) {
  const double thrust = -wrench.body_force.z();
  const double s = thrust / params.thrust_coeff;
  const double a = wrench.body_torque.x() / (params.arm_length * params.thrust_coeff);
  const double b = wrench.body_torque.y() / (params.arm_length * params.thrust_coeff);
  const double c = wrench.body_torque.z() / params.torque_coeff;
  PropellerSpeeds out;
  out.omega_sq[0] = 0.25 * (s + c) - 0.5 * b;
  out.omega_sq[1] = 0.25 * (s - c) + 0.5 * a;
  out.omega_sq[2] = 0.25 * (s + c) + 0.5 * b;
  out.omega_sq[3] = 0.25 * (s - c) - 0.5 * a;
  for (int i = 0; i < 4; ++i) {
    if (out.omega_sq[i] < 0.0) {
      throw InfeasibleWrenchError("inverse_mixer: rotor " + std::to_string(i + 1) +
                                  " requires negative squared speed " +
                                  std::to_string(out.omega_sq[i]));
    }
  }
  return out;
}

namespace {

void check_pitch(double pitch) {
  if (std::abs(pitch) >= std::numbers::pi / 2.0 - kPitchGuard) {
    throw SingularityError("pitch " + std::to_string(pitch) +
                           " rad is inside the Euler-rate singularity guard");
  }
}

Vec12 deriv_unchecked(const Vec12& s, const Wrench& wrench, const VehicleParams& p) {
  const Eigen::Vector3d vel = s.segment<3>(3);
  const Eigen::Vector3d rpy = s.segment<3>(6);
  const Eigen::Vector3d w = s.segment<3>(9);
  const Eigen::Matrix3d r = euler_to_rotation(rpy);
  const Eigen::Vector3d gravity(0.0, 0.0, p.gravity);
  const Eigen::Vector3d iw = p.inertia.cwiseProduct(w);
  Vec12 ds;
  ds.segment<3>(0) = vel;
  ds.segment<3>(3) = gravity + r * wrench.body_force / p.mass;
  ds.segment<3>(6) = euler_rate_matrix(rpy.x(), rpy.y()) * w;
  ds.segment<3>(9) = (wrench.body_torque - w.cross(iw)).cwiseQuotient(p.inertia);
  return ds;
}

}  // namespace

Vec12 dynamics_deriv(const VehicleState& state, const Wrench& wrench,
                     const VehicleParams& params) {
  check_pitch(state.euler.y());
  return deriv_unchecked(state.to_vector(), wrench, params);
}

void dynamics_jacobians(const VehicleState& state, const PropellerSpeeds& omega_sq,
                        const VehicleParams& params, Mat12* d_state, Mat12x4* d_input) {
  check_pitch(state.euler.y());
  const Eigen::Vector3d rpy = state.euler;
  const Eigen::Vector3d w = state.body_rates;
  const Eigen::Matrix4d mix = mixer_matrix(params);
  const Eigen::Vector4d tw = mix * omega_sq.omega_sq;
  const Eigen::Vector3d body_force(0.0, 0.0, -tw[0]);

  if (d_state != nullptr) {
    Mat12& a = *d_state;
    a.setZero();
    a.block<3, 3>(0, 3).setIdentity();
    a.block<3, 3>(3, 6) = rotation_times_vector_jacobian(rpy, body_force) / params.mass;
    Eigen::Vector3d d_roll, d_pitch;
    euler_rate_matrix_jacobian(rpy.x(), rpy.y(), w, d_roll, d_pitch);
    a.block<3, 1>(6, 6) = d_roll;
    a.block<3, 1>(6, 7) = d_pitch;
    a.block<3, 3>(6, 9) = euler_rate_matrix(rpy.x(), rpy.y());
    const Eigen::Vector3d iw = params.inertia.cwiseProduct(w);
    const Eigen::Matrix3d dcross =
        skew(iw) - skew(w) * params.inertia.asDiagonal().toDenseMatrix();
    a.block<3, 3>(9, 9) = params.inertia.cwiseInverse().asDiagonal() * dcross;
  }
  if (d_input != nullptr) {
    Mat12x4& b = *d_input;
    b.setZero();
    const Eigen::Matrix3d r = euler_to_rotation(rpy);
    // Each rotor contributes the same -c_T along body z.
    b.block<3, 4>(3, 0) =
        (-params.thrust_coeff / params.mass) * r.col(2) * Eigen::RowVector4d::Ones();
    b.block<3, 4>(9, 0) =
        params.inertia.cwiseInverse().asDiagonal() * mix.bottomRows<3>();
  }
}

VehicleState rk4_step(const VehicleState& state, const PropellerSpeeds& omega_sq,
                      const VehicleParams& params, double dt) {
  if (!(dt > 0.0)) throw DomainError("rk4_step: dt must be positive");
  const Wrench wrench = mixer(omega_sq, params);
  check_pitch(state.euler.y());

  const Vec12 s0 = state.to_vector();
  auto eval = [&](const Vec12& s) {
    check_pitch(s[7]);
    return deriv_unchecked(s, wrench, params);
  };
  const Vec12 k1 = eval(s0);
  const Vec12 k2 = eval(s0 + 0.5 * dt * k1);
  const Vec12 k3 = eval(s0 + 0.5 * dt * k2);
  const Vec12 k4 = eval(s0 + dt * k3);
  Vec12 s1 = s0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!s1.allFinite()) throw IntegrationError("rk4_step: non-finite state");
  for (int i = 6; i < 9; ++i) s1[i] = wrap_pi(s1[i]);
  check_pitch(s1[7]);
  return VehicleState::from_vector(s1);
}

VehicleState rk4_step_sensitivities(const VehicleState& state,
                                    const PropellerSpeeds& omega_sq,
                                    const VehicleParams& params, double dt,
                                    Mat12& d_state, Mat12x4& d_input) {
  if (!(dt > 0.0)) throw DomainError("rk4_step: dt must be positive");
  const Wrench wrench = mixer(omega_sq, params);
  check_pitch(state.euler.y());

  const Vec12 s0 = state.to_vector();
  Vec12 k[4];
  Mat12 dk_ds[4];
  Mat12x4 dk_du[4];
  const double sub[4] = {0.0, 0.5 * dt, 0.5 * dt, dt};
  for (int i = 0; i < 4; ++i) {
    const Vec12 si = (i == 0) ? s0 : Vec12(s0 + sub[i] * k[i - 1]);
    check_pitch(si[7]);
    Mat12 a;
    Mat12x4 b;
    dynamics_jacobians(VehicleState::from_vector(si), omega_sq, params, &a, &b);
    k[i] = deriv_unchecked(si, wrench, params);
    if (i == 0) {
      dk_ds[i] = a;
      dk_du[i] = b;
    } else {
      dk_ds[i] = a * (Mat12::Identity() + sub[i] * dk_ds[i - 1]);
      dk_du[i] = a * (sub[i] * dk_du[i - 1]) + b;
    }
  }
  Vec12 s1 = s0 + (dt / 6.0) * (k[0] + 2.0 * k[1] + 2.0 * k[2] + k[3]);
  if (!s1.allFinite()) throw IntegrationError("rk4_step: non-finite state");
  for (int i = 6; i < 9; ++i) s1[i] = wrap_pi(s1[i]);
  check_pitch(s1[7]);
  d_state = Mat12::Identity() +
            (dt / 6.0) * (dk_ds[0] + 2.0 * dk_ds[1] + 2.0 * dk_ds[2] + dk_ds[3]);
  d_input = (dt / 6.0) * (dk_du[0] + 2.0 * dk_du[1] + 2.0 * dk_du[2] + dk_du[3]);
  return VehicleState::from_vector(s1);
}

}  // namespace relmpc

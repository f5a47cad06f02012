#pragma once

// Z-Y-X Euler rotations, their angle derivatives, and the Euler-rate
// transformation used by the rigid-body model.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace relmpc {

/// Wrap an angle into (-pi, pi].
inline double wrap_pi(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a <= 0.0) a += two_pi;
  return a - std::numbers::pi;
}

inline Eigen::Matrix3d rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

inline Eigen::Matrix3d rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

inline Eigen::Matrix3d rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

inline Eigen::Matrix3d drot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d r;
  r << 0, 0, 0, 0, -s, -c, 0, c, -s;
  return r;
}

inline Eigen::Matrix3d drot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d r;
  r << -s, 0, c, 0, 0, 0, -c, 0, -s;
  return r;
}

inline Eigen::Matrix3d drot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d r;
  r << -s, -c, 0, c, -s, 0, 0, 0, 0;
  return r;
}

/// Body-to-world rotation for Z-Y-X Euler angles (roll, pitch, yaw).
inline Eigen::Matrix3d euler_to_rotation(const Eigen::Vector3d& rpy) {
  return rot_z(rpy.z()) * rot_y(rpy.y()) * rot_x(rpy.x());
}

/// Derivatives of euler_to_rotation applied to a fixed vector f:
/// columns are d(R f)/d(roll, pitch, yaw).
inline Eigen::Matrix3d rotation_times_vector_jacobian(const Eigen::Vector3d& rpy,
                                                      const Eigen::Vector3d& f) {
  const Eigen::Matrix3d rx = rot_x(rpy.x()), ry = rot_y(rpy.y()), rz = rot_z(rpy.z());
  Eigen::Matrix3d j;
  j.col(0) = rz * ry * (drot_x(rpy.x()) * f);
  j.col(1) = rz * (drot_y(rpy.y()) * (rx * f));
  j.col(2) = drot_z(rpy.z()) * (ry * (rx * f));
  return j;
}

/// Euler-rate transformation T with rpy_dot = T * body_rates.
/// Singular at |pitch| = pi/2; callers guard the pitch range.
inline Eigen::Matrix3d euler_rate_matrix(double roll, double pitch) {
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), tp = std::tan(pitch);
  Eigen::Matrix3d t;
  t << 1, sr * tp, cr * tp, 0, cr, -sr, 0, sr / cp, cr / cp;
  return t;
}

/// d(T w)/d(roll) and d(T w)/d(pitch) for a fixed rate vector w.
inline void euler_rate_matrix_jacobian(double roll, double pitch, const Eigen::Vector3d& w,
                                       Eigen::Vector3d& d_roll, Eigen::Vector3d& d_pitch) {
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch), tp = std::tan(pitch);
  const double sec2 = 1.0 / (cp * cp);
  d_roll << w.y() * cr * tp - w.z() * sr * tp, -w.y() * sr - w.z() * cr,
      w.y() * cr / cp - w.z() * sr / cp;
  d_pitch << (w.y() * sr + w.z() * cr) * sec2, 0.0, (w.y() * sr + w.z() * cr) * sp * sec2;
}

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

}  // namespace relmpc

#include "relmpc/frames.hpp"

#include <cmath>

#include "relmpc/rotation.hpp"

namespace relmpc {

namespace {
constexpr double kDegenerateTol = 1e-9;
}

Eigen::Vector3d displacement_from_measurement(const RelativeMeasurement& meas) {
  const double ca = std::cos(meas.azimuth), sa = std::sin(meas.azimuth);
  const double cb = std::cos(meas.elevation), sb = std::sin(meas.elevation);
  return meas.range * Eigen::Vector3d(cb * ca, cb * sa, sb);
}

RelativeMeasurement measurement_from_geometry(const Eigen::Vector3d& true_displacement_body,
                                              double noise_std, Rng& rng,
                                              int observer_id, int target_id) {
  Eigen::Vector3d d = true_displacement_body;
  if (noise_std > 0.0) {
    for (int i = 0; i < 3; ++i) d[i] += rng.gaussian(noise_std);
  }
  const double r = d.norm();
  if (r < kDegenerateTol) {
    throw GeometryError("measurement_from_geometry: displacement is zero");
  }
  if (d.head<2>().norm() < kDegenerateTol * r) {
    throw GeometryError("measurement_from_geometry: vertically aligned vehicles");
  }
  RelativeMeasurement meas;
  meas.range = r;
  meas.azimuth = std::atan2(d.y(), d.x());
  meas.elevation = std::asin(std::clamp(d.z() / r, -1.0, 1.0));
  meas.observer_id = observer_id;
  meas.target_id = target_id;
  return meas;
}

Eigen::Vector3d tilt_compensate(const Eigen::Vector3d& body_vec,
                                const AttitudePartial& att) {
  return rot_y(att.pitch) * rot_x(att.roll) * body_vec;
}

double relative_yaw_estimate(const RelativeMeasurement& meas_12,
                             const RelativeMeasurement& meas_21,
                             const AttitudePartial& att_1,
                             const AttitudePartial& att_2) {
  const Eigen::Vector3d b = tilt_compensate(displacement_from_measurement(meas_12), att_1);
  const Eigen::Vector3d a = -tilt_compensate(displacement_from_measurement(meas_21), att_2);
  if (b.head<2>().norm() < kDegenerateTol || a.head<2>().norm() < kDegenerateTol) {
    throw GeometryError("relative_yaw_estimate: vertically aligned vehicles");
  }
  return wrap_pi(std::atan2(a.y() * b.x() - a.x() * b.y(),
                            a.x() * b.x() + a.y() * b.y()));
}

Eigen::Vector3d relative_displacement_control_frame(const VehicleState& state_i,
                                                    const VehicleState& state_j,
                                                    const FramePose& frame_i,
                                                    const FramePose& frame_j,
                                                    double rel_yaw_ij) {
  const Eigen::Vector3d offset =
      rot_z(-frame_i.yaw_offset) * (frame_j.origin_offset - frame_i.origin_offset);
  const Eigen::Vector3d in_frame_i =
      rot_z(rel_yaw_ij) * state_j.position + offset - state_i.position;
  return rot_z(-state_i.euler.z()) * in_frame_i;
}

GlobalLeaderStates leader_global_states(const VehicleState& state_leader,
                                        const FramePose& frame_leader) {
  const Eigen::Matrix3d r = rot_z(frame_leader.yaw_offset);
  GlobalLeaderStates out;
  out.position = r * state_leader.position + frame_leader.origin_offset;
  out.velocity = r * state_leader.velocity;
  out.yaw = wrap_pi(state_leader.euler.z() + frame_leader.yaw_offset);
  return out;
}

}  // namespace relmpc

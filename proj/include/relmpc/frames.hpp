#pragma once

#include <Eigen/Dense>

#include "relmpc/errors.hpp"
#include "relmpc/rng.hpp"
#include "relmpc/vehicle.hpp"

namespace relmpc {

// A level horizon-anchored MPC frame: fixed earth-frame origin plus a yaw
// rotation about z. Roll and pitch are shared with the earth frame.
struct FramePose {
  Eigen::Vector3d origin_offset{Eigen::Vector3d::Zero()};
  double yaw_offset{0.0};
};

// Range/bearing observation of one vehicle by another, in the observer's
// body frame.
struct RelativeMeasurement {
  double range{1.0};
  double azimuth{0.0};    // rad, (-pi, pi]
  double elevation{0.0};  // rad, (-pi/2, pi/2)
  int observer_id{0};
  int target_id{0};
};

// Roll/pitch supplied by an IMU; yaw deliberately absent.
struct AttitudePartial {
  double roll{0.0};
  double pitch{0.0};
};

struct GlobalLeaderStates {
  Eigen::Vector3d position;
  Eigen::Vector3d velocity;
  double yaw;
};

// Cartesian displacement of the target in the observer's body frame.
Eigen::Vector3d displacement_from_measurement(const RelativeMeasurement& meas);

// Simulation-side inverse: build a (range, azimuth, elevation) observation of
// a true body-frame displacement, perturbing the Cartesian reconstruction with
// i.i.d. zero-mean Gaussian noise of the given std per axis.
RelativeMeasurement measurement_from_geometry(const Eigen::Vector3d& true_displacement_body,
                                              double noise_std, Rng& rng,
                                              int observer_id = 0, int target_id = 0);

// Rotate a body-frame vector into the level frame sharing the body yaw.
Eigen::Vector3d tilt_compensate(const Eigen::Vector3d& body_vec,
                                const AttitudePartial& att);

// Yaw of vehicle 1 minus yaw of vehicle 2, from mutual observations plus each
// vehicle's roll/pitch; wrapped to (-pi, pi].
double relative_yaw_estimate(const RelativeMeasurement& meas_12,
                             const RelativeMeasurement& meas_21,
                             const AttitudePartial& att_1,
                             const AttitudePartial& att_2);

// Displacement of vehicle j as seen from vehicle i's control frame (level,
// anchored at i's position, rotated by i's yaw). States are expressed in the
// vehicles' own MPC frames; rel_yaw_ij is the yaw of frame j relative to
// frame i.
Eigen::Vector3d relative_displacement_control_frame(const VehicleState& state_i,
                                                    const VehicleState& state_j,
                                                    const FramePose& frame_i,
                                                    const FramePose& frame_j,
                                                    double rel_yaw_ij);

// Map an MPC-frame state of the leader back to earth-frame position, velocity
// and yaw using the frame pose recorded at horizon start.
GlobalLeaderStates leader_global_states(const VehicleState& state_leader,
                                        const FramePose& frame_leader);

}  // namespace relmpc

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "relmpc/frames.hpp"
#include "relmpc/rng.hpp"
#include "relmpc/rotation.hpp"

using namespace relmpc;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

// Body-frame displacement of target j as seen by observer i, from earth-frame
// truth: an independent oracle for the sensing chain.
Eigen::Vector3d body_displacement(const Eigen::Vector3d& p_i, const Eigen::Vector3d& rpy_i,
                                  const Eigen::Vector3d& p_j) {
  return euler_to_rotation(rpy_i).transpose() * (p_j - p_i);
}

RelativeMeasurement exact_measurement(const Eigen::Vector3d& p_i,
                                      const Eigen::Vector3d& rpy_i,
                                      const Eigen::Vector3d& p_j, Rng& rng) {
  return measurement_from_geometry(body_displacement(p_i, rpy_i, p_j), 0.0, rng);
}

}  // namespace

TEST_CASE("displacement_from_measurement axis and diagonal cases") {
  CHECK((displacement_from_measurement({1.0, 0.0, 0.0}) -
         Eigen::Vector3d(1, 0, 0)).norm() < 1e-15);
  CHECK((displacement_from_measurement({2.0, kPi / 2, 0.0}) -
         Eigen::Vector3d(0, 2, 0)).norm() < 1e-15);
  const Eigen::Vector3d diag = displacement_from_measurement({1.0, kPi / 4, kPi / 4});
  CHECK(diag.x() == doctest::Approx(0.5));
  CHECK(diag.y() == doctest::Approx(0.5));
  CHECK(diag.z() == doctest::Approx(0.70711).epsilon(1e-4));
}

TEST_CASE("measurement_from_geometry roundtrips exactly without noise") {
  Rng rng(5);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Eigen::Vector3d d(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    if (d.head<2>().norm() < 1e-6) d.x() += 1.0;
    const Eigen::Vector3d back =
        displacement_from_measurement(measurement_from_geometry(d, 0.0, rng));
    worst = std::max(worst, (back - d).norm());
  }
  CHECK(worst < 1e-12);

  const RelativeMeasurement unit =
      measurement_from_geometry(Eigen::Vector3d(1, 0, 0), 0.0, rng);
  CHECK(unit.range == doctest::Approx(1.0));
  CHECK(unit.azimuth == doctest::Approx(0.0));
  CHECK(unit.elevation == doctest::Approx(0.0));
}

TEST_CASE("measurement_from_geometry noise has the configured per-axis std") {
  Rng rng(99);
  const Eigen::Vector3d truth(2.0, 1.0, -0.5);
  const int n = 100000;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero(), sumsq = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d err =
        displacement_from_measurement(measurement_from_geometry(truth, 0.025, rng)) - truth;
    sum += err;
    sumsq += err.cwiseProduct(err);
  }
  for (int k = 0; k < 3; ++k) {
    const double mean = sum[k] / n;
    const double std = std::sqrt(sumsq[k] / n - mean * mean);
    CHECK(std == doctest::Approx(0.025).epsilon(0.05));
    CHECK(std::abs(mean) < 0.001);
  }
}

TEST_CASE("measurement_from_geometry rejects degenerate geometry") {
  Rng rng(1);
  CHECK_THROWS_AS(measurement_from_geometry(Eigen::Vector3d::Zero(), 0.0, rng),
                  GeometryError);
  CHECK_THROWS_AS(measurement_from_geometry(Eigen::Vector3d(0, 0, 2.0), 0.0, rng),
                  GeometryError);
}

TEST_CASE("relative_yaw_estimate: level equal-yaw vehicles give zero") {
  Rng rng(2);
  const RelativeMeasurement m12 =
      measurement_from_geometry(Eigen::Vector3d(1.0, 2.0, 0.3), 0.0, rng);
  const RelativeMeasurement m21 =
      measurement_from_geometry(Eigen::Vector3d(-1.0, -2.0, -0.3), 0.0, rng);
  CHECK(relative_yaw_estimate(m12, m21, {}, {}) == doctest::Approx(0.0));
}

TEST_CASE("relative_yaw_estimate: level 30/10 degree case returns 20 degrees") {
  Rng rng(3);
  const Eigen::Vector3d p1(0, 0, 0), p2(2, 1, 0.5);
  const Eigen::Vector3d rpy1(0, 0, 30 * kDeg), rpy2(0, 0, 10 * kDeg);
  const RelativeMeasurement m12 = exact_measurement(p1, rpy1, p2, rng);
  const RelativeMeasurement m21 = exact_measurement(p2, rpy2, p1, rng);
  const double est = relative_yaw_estimate(m12, m21, {}, {});
  CHECK(std::abs(est - 20 * kDeg) < 1e-9);
}

TEST_CASE("relative_yaw_estimate is exact over random tilted configurations") {
  Rng rng(4);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d p1(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    Eigen::Vector3d p2(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    if ((p2 - p1).head<2>().norm() < 0.1) p2.x() += 1.0;
    const Eigen::Vector3d rpy1(rng.uniform(-20 * kDeg, 20 * kDeg),
                               rng.uniform(-20 * kDeg, 20 * kDeg),
                               rng.uniform(-kPi, kPi));
    const Eigen::Vector3d rpy2(rng.uniform(-20 * kDeg, 20 * kDeg),
                               rng.uniform(-20 * kDeg, 20 * kDeg),
                               rng.uniform(-kPi, kPi));
    const RelativeMeasurement m12 = exact_measurement(p1, rpy1, p2, rng);
    const RelativeMeasurement m21 = exact_measurement(p2, rpy2, p1, rng);
    const AttitudePartial a1{rpy1.x(), rpy1.y()}, a2{rpy2.x(), rpy2.y()};
    const double est = relative_yaw_estimate(m12, m21, a1, a2);
    const double truth = wrap_pi(rpy1.z() - rpy2.z());
    worst = std::max(worst, std::abs(wrap_pi(est - truth)));

    // Residual of the defining constraint: the two tilt-compensated rays,
    // one rotated by the estimate, must cancel horizontally.
    const Eigen::Vector3d b = tilt_compensate(displacement_from_measurement(m12), a1);
    const Eigen::Vector3d x21 = tilt_compensate(displacement_from_measurement(m21), a2);
    const Eigen::Vector3d residual = rot_z(est) * b + x21;
    CHECK(residual.head<2>().norm() < 1e-9);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("relative_yaw_estimate rejects vertically aligned vehicles") {
  RelativeMeasurement vertical;
  vertical.range = 2.0;
  vertical.azimuth = 0.0;
  vertical.elevation = kPi / 2 - 1e-13;
  RelativeMeasurement other;
  other.range = 2.0;
  CHECK_THROWS_AS(relative_yaw_estimate(vertical, other, {}, {}), GeometryError);
}

TEST_CASE("relative_displacement_control_frame hand cases") {
  VehicleState si, sj;
  FramePose fi, fj;
  fj.origin_offset = Eigen::Vector3d(1, 0, 0);

  CHECK((relative_displacement_control_frame(si, sj, fi, fj, 0.0) -
         Eigen::Vector3d(1, 0, 0)).norm() < 1e-12);

  VehicleState si_yawed = si;
  si_yawed.euler.z() = kPi / 2;
  CHECK((relative_displacement_control_frame(si_yawed, sj, fi, fj, 0.0) -
         Eigen::Vector3d(0, -1, 0)).norm() < 1e-12);

  VehicleState sj_off = sj;
  sj_off.position = Eigen::Vector3d(0, 1, 0);
  FramePose fj_zero;
  CHECK((relative_displacement_control_frame(si, sj_off, fi, fj_zero, kPi / 2) -
         Eigen::Vector3d(-1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("relative_displacement_control_frame matches the earth-frame oracle") {
  Rng rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::Vector3d pn_i(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4));
    const Eigen::Vector3d pn_j(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4));
    const double psi_i = rng.uniform(-kPi, kPi), psi_j = rng.uniform(-kPi, kPi);

    FramePose fi{Eigen::Vector3d(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)),
                 rng.uniform(-kPi, kPi)};
    FramePose fj{Eigen::Vector3d(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)),
                 rng.uniform(-kPi, kPi)};

    VehicleState si, sj;
    si.position = rot_z(-fi.yaw_offset) * (pn_i - fi.origin_offset);
    si.euler.z() = wrap_pi(psi_i - fi.yaw_offset);
    sj.position = rot_z(-fj.yaw_offset) * (pn_j - fj.origin_offset);
    sj.euler.z() = wrap_pi(psi_j - fj.yaw_offset);

    const double rel_yaw = wrap_pi(fj.yaw_offset - fi.yaw_offset);
    const Eigen::Vector3d got =
        relative_displacement_control_frame(si, sj, fi, fj, rel_yaw);
    const Eigen::Vector3d want = rot_z(-psi_i) * (pn_j - pn_i);
    CHECK((got - want).norm() < 1e-9);
  }
}

TEST_CASE("leader_global_states maps MPC-frame state back to earth frame") {
  VehicleState s;
  s.position = Eigen::Vector3d(1, 0, 0);
  s.velocity = Eigen::Vector3d(0.5, 0.2, -0.1);
  s.euler.z() = 0.3;

  const GlobalLeaderStates ident = leader_global_states(s, FramePose{});
  CHECK((ident.position - s.position).norm() < 1e-15);
  CHECK((ident.velocity - s.velocity).norm() < 1e-15);
  CHECK(ident.yaw == doctest::Approx(0.3));

  FramePose shift{Eigen::Vector3d(5, 5, -2), 0.0};
  const GlobalLeaderStates moved = leader_global_states(s, shift);
  CHECK((moved.position - Eigen::Vector3d(6, 5, -2)).norm() < 1e-15);
  CHECK((moved.velocity - s.velocity).norm() < 1e-15);

  FramePose turned{Eigen::Vector3d(0.5, -0.5, 0), kPi / 2};
  const GlobalLeaderStates rot = leader_global_states(s, turned);
  CHECK((rot.position - (Eigen::Vector3d(0, 1, 0) + turned.origin_offset)).norm() < 1e-12);
  CHECK(rot.yaw == doctest::Approx(0.3 + kPi / 2));
}

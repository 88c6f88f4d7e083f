#include <gtest/gtest.h>

#include <cmath>

#include "ddslit/integrator.hpp"
#include "ddslit/packets.hpp"
#include "oracles.hpp"

using namespace ddslit;

namespace {

/// Guidance field of a lone Gaussian packet.
auto single_packet_field(const Packet1D& p) {
  return [p](double t, const Vec<1>& x) {
    return Vec<1>{kHbar / p.mass * packet_log_derivative(p, x[0], t).imag()};
  };
}

double integrate_single(const Packet1D& p, double x0, double t_end, double rel_tol) {
  IntegratorConfig cfg;
  cfg.rel_tol = rel_tol;
  return integrate_to<1>(single_packet_field(p), Vec<1>{x0}, 0.0, t_end, cfg.dt_init, cfg)[0];
}

}  // namespace

TEST(Integrator, ConstantFieldIsExact) {
  const IntegratorConfig cfg;
  auto field = [](double, const Vec<4>&) { return Vec<4>{0.1, 0.0, -0.1, 0.0}; };
  const Vec<4> q0{0.005, 1e-5, -0.005, -1e-5};
  const auto step = step_adaptive<4>(field, q0, 0.0, 0.01, cfg);
  EXPECT_LT(step.error_norm, 1e-6);  // rounding only
  const double h = step.t1 - step.t0;
  EXPECT_DOUBLE_EQ(step.q1[0], q0[0] + 0.1 * h);
  EXPECT_DOUBLE_EQ(step.q1[2], q0[2] - 0.1 * h);
  EXPECT_EQ(step.q1[1], q0[1]);
  const auto end = integrate_to<4>(field, q0, 0.0, 1.0, 1e-3, cfg);
  EXPECT_NEAR(end[0], 0.105, 1e-15);
  EXPECT_NEAR(end[2], -0.105, 1e-15);
}

TEST(Integrator, SingleGaussianClosedForm) {
  const Packet1D p{1e-6, 5e-3, 0.1, 6.646e-27};
  for (double k : {-2.0, -0.5, 0.7, 1.9}) {
    const double x0 = p.center + k * p.sigma;
    const double x = integrate_single(p, x0, 1.0, 1e-8);
    const double ref = oracle::single_packet_trajectory(p, x0, 1.0);
    EXPECT_LT(std::abs(x - ref) / std::abs(ref), 1e-6) << "k=" << k;
    // The spreading part alone is the delicate component.
    const double spread = ref - p.center - p.velocity;
    EXPECT_LT(std::abs((x - p.center - p.velocity) - spread) / std::abs(spread), 1e-5) << "k=" << k;
  }
}

TEST(Integrator, TighterToleranceNeverWorse) {
  const Packet1D p{1e-5, 0.0, 0.0, 6.646e-27};
  const double x0 = 1.3e-5;
  const double ref = oracle::single_packet_trajectory(p, x0, 1.0);
  double prev = INFINITY;
  for (double tol : {1e-4, 1e-6, 1e-8, 1e-10}) {
    const double err = std::abs(integrate_single(p, x0, 1.0, tol) - ref);
    EXPECT_LE(err, prev * (1 + 1e-9) + 1e-18) << "rel_tol " << tol;
    prev = err;
  }
}

TEST(Integrator, IntegrateToLandsExactly) {
  IntegratorConfig cfg;
  auto field = [](double t, const Vec<1>&) { return Vec<1>{t}; };
  const auto q = integrate_to<1>(field, Vec<1>{0.0}, 0.0, 0.3, 0.07, cfg);
  EXPECT_NEAR(q[0], 0.045, 1e-15);
}

TEST(Integrator, StiffFieldRaises) {
  IntegratorConfig cfg;
  cfg.dt_min = 1e-9;
  cfg.dt_init = 1e-3;
  auto field = [](double, const Vec<1>&) -> Vec<1> { throw NodeSingularity("always"); };
  EXPECT_THROW(step_adaptive<1>(field, Vec<1>{0.0}, Vec<1>{0.0}, 0.0, 1e-3, cfg), StiffnessError);
}

TEST(Crossing, LinearSegment) {
  HermiteSegment<1> seg(0.0, {0.4}, {0.2}, 1.0, {0.6}, {0.2});
  const double tol = 1e-9;
  const auto c = locate_crossing(seg, 0.5, 0, tol);
  EXPECT_NEAR(c.t, 0.5, tol);
  EXPECT_NEAR(c.point[0], 0.5, 1e-9);
}

TEST(Crossing, PlaneAtEndpoint) {
  HermiteSegment<1> seg(2.0, {0.4}, {0.2}, 3.0, {0.6}, {0.2});
  EXPECT_EQ(locate_crossing(seg, 0.6, 0, 1e-9).t, 3.0);
  EXPECT_EQ(locate_crossing(seg, 0.4, 0, 1e-9).t, 2.0);
}

TEST(Crossing, CubicRoot) {
  // x(t) = t^3 - 0.5 over [0.5, 1.0]: the Hermite interpolant is exact for a cubic.
  HermiteSegment<1> seg(0.5, {0.125 - 0.5}, {0.75}, 1.0, {0.5}, {3.0});
  const double tol = 1e-9;
  const auto c = locate_crossing(seg, 0.0, 0, tol);
  EXPECT_NEAR(c.t, std::cbrt(0.5), tol);
}

TEST(Crossing, DecreasingCoordinate) {
  HermiteSegment<2> seg(0.0, {0.0, 1.0}, {-1.0, 0.0}, 1.0, {-1.0, 1.0}, {-1.0, 0.0});
  EXPECT_NEAR(locate_crossing(seg, -0.25, 0, 1e-10).t, 0.25, 1e-10);
}

TEST(Crossing, NoSignChangeIsContractViolation) {
  HermiteSegment<1> seg(0.0, {0.1}, {0.1}, 1.0, {0.2}, {0.1});
  EXPECT_THROW(locate_crossing(seg, 0.5, 0, 1e-9), std::invalid_argument);
}

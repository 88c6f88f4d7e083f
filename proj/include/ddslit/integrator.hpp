#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "ddslit/errors.hpp"
#include "ddslit/params.hpp"

namespace ddslit {

template <std::size_t N>
using Vec = std::array<double, N>;

/// Accepted step of the adaptive integrator, with everything needed for the
/// cubic Hermite interpolant over [t0, t1].
template <std::size_t N>
struct StepResult {
  double t0 = 0, t1 = 0;
  Vec<N> q0{}, q1{};
  Vec<N> f0{}, f1{};  // field at both ends (FSAL)
  double dt_next = 0;
  double error_norm = 0;
};

/// Cubic Hermite interpolant of one step.
template <std::size_t N>
struct HermiteSegment {
  double t0 = 0, t1 = 0;
  Vec<N> q0{}, q1{}, f0{}, f1{};

  HermiteSegment() = default;
  HermiteSegment(double ta, const Vec<N>& qa, const Vec<N>& fa, double tb, const Vec<N>& qb, const Vec<N>& fb)
      : t0(ta), t1(tb), q0(qa), q1(qb), f0(fa), f1(fb) {}
  explicit HermiteSegment(const StepResult<N>& s) : HermiteSegment(s.t0, s.q0, s.f0, s.t1, s.q1, s.f1) {}

  double component(std::size_t i, double t) const {
    const double h = t1 - t0;
    if (h == 0.0) return q0[i];
    const double s = (t - t0) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * q0[i] + (s3 - 2 * s2 + s) * h * f0[i] + (-2 * s3 + 3 * s2) * q1[i] +
           (s3 - s2) * h * f1[i];
  }

  Vec<N> at(double t) const {
    Vec<N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = component(i, t);
    return out;
  }
};

namespace dopri {
// Dormand-Prince 5(4) tableau.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace dopri

/// One accepted embedded Runge-Kutta 4(5) step (Dormand-Prince, FSAL).
///
/// `field(t, q)` returns dq/dt and may throw NodeSingularity; that counts as a
/// rejected trial. Rejections shrink dt until it drops below cfg.dt_min, at
/// which point StiffnessError is raised.
template <std::size_t N, class Field>
StepResult<N> step_adaptive(Field&& field, const Vec<N>& q, const Vec<N>& f0, double t, double dt,
                            const IntegratorConfig& cfg) {
  using namespace dopri;
  Vec<N> k2, k3, k4, k5, k6, k7, y, q1;
  auto combine = [&](auto&& fn) {
    for (std::size_t i = 0; i < N; ++i) y[i] = fn(i);
  };
  for (;;) {
    if (!(dt >= cfg.dt_min)) throw StiffnessError("step size underflow", t);
    try {
      combine([&](std::size_t i) { return q[i] + dt * a21 * f0[i]; });
      k2 = field(t + c2 * dt, y);
      combine([&](std::size_t i) { return q[i] + dt * (a31 * f0[i] + a32 * k2[i]); });
      k3 = field(t + c3 * dt, y);
      combine([&](std::size_t i) { return q[i] + dt * (a41 * f0[i] + a42 * k2[i] + a43 * k3[i]); });
      k4 = field(t + c4 * dt, y);
      combine([&](std::size_t i) { return q[i] + dt * (a51 * f0[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]); });
      k5 = field(t + c5 * dt, y);
      combine([&](std::size_t i) {
        return q[i] + dt * (a61 * f0[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      });
      k6 = field(t + dt, y);
      for (std::size_t i = 0; i < N; ++i)
        q1[i] = q[i] + dt * (b1 * f0[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
      k7 = field(t + dt, q1);
    } catch (const NodeSingularity&) {
      dt *= 0.25;
      continue;
    }
    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e = dt * (e1 * f0[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double scale = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(q[i]), std::abs(q1[i]));
      err = std::max(err, std::abs(e) / scale);
    }
    if (!std::isfinite(err)) {
      dt *= 0.25;
      continue;
    }
    if (err <= 1.0) {
      const double grow = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      return {t, t + dt, q, q1, f0, k7, dt * grow, err};
    }
    dt *= std::max(0.1, 0.9 * std::pow(err, -0.2));
  }
}

template <std::size_t N, class Field>
StepResult<N> step_adaptive(Field&& field, const Vec<N>& q, double t, double dt, const IntegratorConfig& cfg) {
  const Vec<N> f0 = field(t, q);
  return step_adaptive<N>(field, q, f0, t, dt, cfg);
}

/// Integrates from (t, q) to exactly t_end.
template <std::size_t N, class Field>
Vec<N> integrate_to(Field&& field, Vec<N> q, double t, double t_end, double dt, const IntegratorConfig& cfg) {
  if (t_end <= t) return q;
  Vec<N> f = field(t, q);
  while (t < t_end) {
    const double remaining = t_end - t;
    const bool last = dt >= remaining;
    auto step = step_adaptive<N>(field, q, f, t, last ? remaining : dt, cfg);
    q = step.q1;
    f = step.f1;
    const bool landed = step.t1 - step.t0 == remaining;
    t = landed ? t_end : step.t1;
    dt = step.dt_next;
  }
  return q;
}

/// Crossing of the plane `component(axis) == plane` inside one step.
template <std::size_t N>
struct Crossing {
  double t = 0;
  Vec<N> point{};
};

/// Bisection on the Hermite interpolant until the bracket is below `time_tol`.
/// Requires the coordinate to reach or pass the plane across the segment.
template <std::size_t N>
Crossing<N> locate_crossing(const HermiteSegment<N>& seg, double plane, std::size_t axis, double time_tol) {
  const double g0 = seg.q0[axis] - plane;
  const double g1 = seg.q1[axis] - plane;
  if (g0 == 0.0) return {seg.t0, seg.q0};
  if (g1 == 0.0) return {seg.t1, seg.q1};
  if ((g0 < 0) == (g1 < 0)) throw std::invalid_argument("locate_crossing: no sign change across segment");
  double lo = seg.t0, hi = seg.t1;
  const bool rising = g0 < 0;
  while (hi - lo > time_tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double g = seg.component(axis, mid) - plane;
    if (g == 0.0) return {mid, seg.at(mid)};
    if ((g < 0) == rising)
      lo = mid;
    else
      hi = mid;
  }
  const double t = 0.5 * (lo + hi);
  return {t, seg.at(t)};
}

}  // namespace ddslit

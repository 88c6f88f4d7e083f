#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ddslit/integrator.hpp"
#include "ddslit/params.hpp"
#include "ddslit/state.hpp"

namespace ddslit {

enum class RecordStatus { complete, censored, anomalous_same_side };

inline std::string_view to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::complete: return "complete";
    case RecordStatus::censored: return "censored";
    default: return "anomalous_same_side";
  }
}

/// Detection outcome of one trajectory: the sample unit of P(t_L, y_L; t_R, y_R).
/// Fields not observed before t_max hold Side::none and NaN.
struct DetectionRecord {
  static constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

  std::uint64_t trajectory_index = 0;
  TrajectoryMode mode = TrajectoryMode::collapse;
  Side first_side = Side::none;
  double t_first = kMissing;
  double y_first = kMissing;
  Side second_side = Side::none;
  double t_second = kMissing;
  double y_second = kMissing;
  RecordStatus status = RecordStatus::censored;

  bool complete() const { return status == RecordStatus::complete; }

  /// Detection time on the given screen, if this record saw one there.
  std::optional<double> time_on(Side side) const {
    if (first_side == side) return t_first;
    if (second_side == side) return t_second;
    return std::nullopt;
  }
  std::optional<double> y_on(Side side) const {
    if (first_side == side) return y_first;
    if (second_side == side) return y_second;
    return std::nullopt;
  }
};

struct PathSample {
  double t = 0;
  ConfigPoint4 point;
};

struct TrajectoryResult {
  DetectionRecord record;
  std::vector<PathSample> path;
  /// Set when the integrator hit dt_min; the record is then censored.
  bool stiff = false;
  /// Survivor velocity just before and just after the collapse (collapse mode only).
  std::optional<Velocity2> velocity_before_collapse;
  std::optional<Velocity2> velocity_after_collapse;
};

namespace detail {

struct Detection {
  double t = 0;
  Particle particle = Particle::one;
  Side side = Side::none;
  double x = 0, y = 0;
};

inline Side side_beyond(double x, const Screens& screens) {
  if (x <= screens.x_left) return Side::left;
  if (x >= screens.x_right) return Side::right;
  return Side::none;
}

inline double plane_of(Side side, const Screens& screens) {
  return side == Side::left ? screens.x_left : screens.x_right;
}

/// Records every `stride`-th accepted step plus explicitly forced points.
class PathRecorder {
 public:
  explicit PathRecorder(std::uint64_t stride) : stride_(stride) {}

  bool enabled() const { return stride_ > 0; }

  void step(double t, const ConfigPoint4& q) {
    if (!enabled()) return;
    if (++count_ % stride_ == 0) force(t, q);
  }
  void force(double t, const ConfigPoint4& q) {
    if (!enabled()) return;
    if (!samples_.empty() && samples_.back().t >= t) return;
    samples_.push_back({t, q});
  }
  std::vector<PathSample> take() { return std::move(samples_); }

 private:
  std::uint64_t stride_;
  std::uint64_t count_ = 0;
  std::vector<PathSample> samples_;
};

/// State at t inside an accepted step, re-integrated from the step start.
template <std::size_t N, class Field>
Vec<N> state_at(Field&& field, const StepResult<N>& step, double t, const IntegratorConfig& cfg) {
  if (t <= step.t0) return step.q0;
  if (t >= step.t1) return step.q1;
  return integrate_to<N>(field, step.q0, step.t0, t, t - step.t0, cfg);
}

/// Newton iteration on the re-integrated trajectory, started from the
/// interpolant's crossing. Long steps make the cubic interpolant much less
/// accurate than the integrator, so the bracket alone is not enough.
template <std::size_t N, class Field>
double refine_crossing(Field&& field, const StepResult<N>& step, std::size_t axis, double plane, double t,
                       const IntegratorConfig& cfg) {
  try {
    for (int it = 0; it < 20; ++it) {
      const Vec<N> q = state_at<N>(field, step, t, cfg);
      const double v = field(t, q)[axis];
      if (!(v != 0.0) || !std::isfinite(v)) break;
      const double next = std::clamp(t - (q[axis] - plane) / v, step.t0, step.t1);
      const double change = std::abs(next - t);
      t = next;
      if (change <= 0.1 * cfg.crossing_time_tol) break;
    }
  } catch (const NodeSingularity&) {
  }
  return t;
}

/// Crossings of the still-undetected coordinates inside one accepted step, earliest first.
/// `x_axes[j]` is the component index of particle `particles[j]`'s x coordinate.
template <std::size_t N, std::size_t P, class Field>
std::vector<Detection> crossings_in_step(Field&& field, const StepResult<N>& step, const Screens& screens,
                                         const std::array<std::size_t, P>& x_axes,
                                         const std::array<Particle, P>& particles,
                                         const std::array<bool, P>& done, const IntegratorConfig& cfg) {
  std::vector<Detection> out;
  const HermiteSegment<N> seg(step);
  for (std::size_t j = 0; j < P; ++j) {
    if (done[j]) continue;
    const std::size_t ax = x_axes[j];
    if (side_beyond(step.q0[ax], screens) != Side::none) continue;
    const Side side = side_beyond(step.q1[ax], screens);
    if (side == Side::none) continue;
    const double plane = plane_of(side, screens);
    const auto c = locate_crossing(seg, plane, ax, cfg.crossing_time_tol);
    out.push_back({refine_crossing<N>(field, step, ax, plane, c.t, cfg), particles[j], side, 0.0, 0.0});
  }
  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) { return a.t < b.t; });
  return out;
}

inline void set_first(DetectionRecord& r, const Detection& d) {
  r.first_side = d.side;
  r.t_first = d.t;
  r.y_first = d.y;
}
inline void set_second(DetectionRecord& r, const Detection& d) {
  r.second_side = d.side;
  r.t_second = d.t;
  r.y_second = d.y;
  r.status = d.side == r.first_side ? RecordStatus::anomalous_same_side : RecordStatus::complete;
}

}  // namespace detail

/// Follows one initial configuration until both particles are detected.
///
/// Collapse mode integrates the two-particle guidance field until the first
/// plane crossing by either particle, replaces the state by the conditional
/// wave function at the detected position, then guides the survivor alone.
/// Free mode keeps the two-particle field throughout. A particle that starts
/// on or beyond a plane is detected at t = 0.
/// `path_stride` > 0 records every stride-th accepted step.
inline TrajectoryResult run_trajectory(const TwoParticleState& s, const ConfigPoint4& q0, const Screens& screens,
                                       TrajectoryMode mode, const IntegratorConfig& cfg,
                                       std::uint64_t path_stride = 0) {
  using detail::Detection;
  TrajectoryResult result;
  DetectionRecord& rec = result.record;
  rec.mode = mode;
  detail::PathRecorder path(path_stride);

  if (!q0.finite()) throw std::invalid_argument("run_trajectory: non-finite initial point");

  auto field4 = [&](double t, const Vec<4>& q) {
    return velocity2(s, ConfigPoint4::from_array(q), t, cfg.node_floor).as_array();
  };
  constexpr std::array<std::size_t, 2> x_axes4{0, 2};
  constexpr std::array<Particle, 2> particles{Particle::one, Particle::two};

  std::vector<Detection> detections;
  std::array<bool, 2> done{false, false};

  auto finish = [&] {
    result.path = path.take();
    return result;
  };
  auto censor = [&] {
    if (rec.status != RecordStatus::anomalous_same_side) rec.status = RecordStatus::censored;
    return finish();
  };

  Vec<4> q = q0.as_array();
  double t = 0.0;
  path.force(t, q0);

  for (std::size_t j = 0; j < 2; ++j) {
    const Side side = detail::side_beyond(q[x_axes4[j]], screens);
    if (side != Side::none) {
      detections.push_back({0.0, particles[j], side, q[x_axes4[j]], q[x_axes4[j] + 1]});
      done[j] = true;
    }
  }

  std::optional<Detection> first;
  ConfigPoint4 q_collapse;

  if (!detections.empty()) {
    detail::set_first(rec, detections.front());
    if (mode == TrajectoryMode::collapse) {
      first = detections.front();
      q_collapse = q0;
    } else if (detections.size() == 2) {
      detail::set_second(rec, detections[1]);
      return finish();
    }
  }

  // Two-particle phase.
  if (!first) {
    try {
      Vec<4> f = field4(t, q);
      double dt = cfg.dt_init;
      while (true) {
        if (t >= cfg.t_max) return censor();
        const double remaining = cfg.t_max - t;
        auto step = step_adaptive<4>(field4, q, f, t, std::min(dt, remaining), cfg);
        if (step.t1 - step.t0 == remaining) step.t1 = cfg.t_max;
        auto events = detail::crossings_in_step(field4, step, screens, x_axes4, particles, done, cfg);
        if (!events.empty() && mode == TrajectoryMode::collapse) {
          Detection d = events.front();
          const Vec<4> qc = detail::state_at<4>(field4, step, d.t, cfg);
          const std::size_t ax = d.particle == Particle::one ? 0 : 2;
          d.x = qc[ax];
          d.y = qc[ax + 1];
          detail::set_first(rec, d);
          first = d;
          q_collapse = ConfigPoint4::from_array(qc);
          path.force(d.t, q_collapse);
          break;
        }
        for (auto d : events) {
          const Vec<4> qc = detail::state_at<4>(field4, step, d.t, cfg);
          const std::size_t ax = d.particle == Particle::one ? 0 : 2;
          d.x = qc[ax];
          d.y = qc[ax + 1];
          done[static_cast<int>(d.particle)] = true;
          if (rec.first_side == Side::none)
            detail::set_first(rec, d);
          else
            detail::set_second(rec, d);
          if (done[0] && done[1]) {
            path.force(d.t, ConfigPoint4::from_array(qc));
            return finish();
          }
        }
        q = step.q1;
        f = step.f1;
        t = step.t1;
        dt = step.dt_next;
        path.step(t, ConfigPoint4::from_array(q));
      }
    } catch (const StiffnessError&) {
      result.stiff = true;
      return censor();
    }
  }

  // Collapse, then the survivor alone.
  const Particle det = first->particle;
  const Particle surv = other(det);
  const OneParticleState one = collapse(s, det, first->x, first->y, first->t);
  const double t_c = first->t;
  const Velocity4 v_before = velocity2(s, q_collapse, t_c, cfg.node_floor);
  result.velocity_before_collapse =
      surv == Particle::one ? Velocity2{v_before.vx1, v_before.vy1} : Velocity2{v_before.vx2, v_before.vy2};
  Vec<2> r{q_collapse.x(surv), q_collapse.y(surv)};
  result.velocity_after_collapse = velocity1(one, r[0], r[1], t_c, cfg.node_floor);

  auto record_survivor = [&](double tt, const Vec<2>& rr) {
    ConfigPoint4 p = q_collapse;
    if (surv == Particle::one) {
      p.x1 = rr[0];
      p.y1 = rr[1];
    } else {
      p.x2 = rr[0];
      p.y2 = rr[1];
    }
    path.step(tt, p);
    return p;
  };

  const Side immediate = detail::side_beyond(r[0], screens);
  if (immediate != Side::none) {
    detail::set_second(rec, {t_c, surv, immediate, r[0], r[1]});
    return finish();
  }

  auto field2 = [&](double tt, const Vec<2>& rr) {
    const Velocity2 v = velocity1(one, rr[0], rr[1], tt, cfg.node_floor);
    return Vec<2>{v.vx, v.vy};
  };
  try {
    t = t_c;
    Vec<2> f = field2(t, r);
    double dt = cfg.dt_init;
    const std::array<std::size_t, 1> x_axis2{0};
    const std::array<Particle, 1> survivor{surv};
    const std::array<bool, 1> not_done{false};
    while (true) {
      if (t >= cfg.t_max) return censor();
      const double remaining = cfg.t_max - t;
      auto step = step_adaptive<2>(field2, r, f, t, std::min(dt, remaining), cfg);
      if (step.t1 - step.t0 == remaining) step.t1 = cfg.t_max;
      auto events = detail::crossings_in_step(field2, step, screens, x_axis2, survivor, not_done, cfg);
      if (!events.empty()) {
        Detection d = events.front();
        const Vec<2> rc = detail::state_at<2>(field2, step, d.t, cfg);
        d.x = rc[0];
        d.y = rc[1];
        detail::set_second(rec, d);
        path.force(d.t, [&] {
          ConfigPoint4 p = q_collapse;
          (surv == Particle::one ? p.x1 : p.x2) = rc[0];
          (surv == Particle::one ? p.y1 : p.y2) = rc[1];
          return p;
        }());
        return finish();
      }
      r = step.q1;
      f = step.f1;
      t = step.t1;
      dt = step.dt_next;
      record_survivor(t, r);
    }
  } catch (const StiffnessError&) {
    result.stiff = true;
    return censor();
  }
}

}  // namespace ddslit

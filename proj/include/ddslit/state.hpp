#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <utility>

#include "ddslit/complex_log.hpp"
#include "ddslit/errors.hpp"
#include "ddslit/packets.hpp"
#include "ddslit/params.hpp"

namespace ddslit {

/// Coefficient times a product of one packet per configuration-space axis.
template <std::size_t Axes>
struct ProductTerm {
  ComplexLog coefficient = ComplexLog::one();
  std::array<Packet1D, Axes> factors{};
};

/// Both state types are four-term sums.
template <std::size_t Axes>
using TermList = std::array<ProductTerm<Axes>, 4>;

enum class Particle : int { one = 0, two = 1 };

inline Particle other(Particle p) { return p == Particle::one ? Particle::two : Particle::one; }

/// Point (x1, y1, x2, y2) in configuration space.
struct ConfigPoint4 {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  std::array<double, 4> as_array() const { return {x1, y1, x2, y2}; }
  static ConfigPoint4 from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }

  double x(Particle p) const { return p == Particle::one ? x1 : x2; }
  double y(Particle p) const { return p == Particle::one ? y1 : y2; }
  ConfigPoint4 swapped() const { return {x2, y2, x1, y1}; }
  bool finite() const {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2);
  }
  friend bool operator==(const ConfigPoint4&, const ConfigPoint4&) = default;
};

struct Velocity4 {
  double vx1 = 0, vy1 = 0, vx2 = 0, vy2 = 0;
  std::array<double, 4> as_array() const { return {vx1, vy1, vx2, vy2}; }
};

struct Velocity2 {
  double vx = 0, vy = 0;
};

/// Symmetrized two-particle state, axes ordered (x1, y1, x2, y2).
struct TwoParticleState {
  TermList<4> terms{};
  double mass1 = 1.0;
  double mass2 = 1.0;
  double hbar = kHbar;
};

/// Conditional wave function of the undetected particle, axes (x, y).
/// Coefficients are frozen at the collapse and never renormalized; the clock
/// stays the global experiment time.
struct OneParticleState {
  TermList<2> terms{};
  double mass = 1.0;
  double hbar = kHbar;
  double collapse_time = 0.0;
  Particle survivor = Particle::two;
};

namespace detail {

template <std::size_t Axes>
ComplexLog term_value(const ProductTerm<Axes>& term, const std::array<double, Axes>& q, double t,
                      double hbar) {
  ComplexLog v = term.coefficient;
  if (v.is_zero()) return v;
  for (std::size_t a = 0; a < Axes; ++a) v *= packet_value(term.factors[a], q[a], t, hbar);
  return v;
}

template <std::size_t Axes>
LogSum sum_terms(const TermList<Axes>& terms, const std::array<double, Axes>& q, double t, double hbar) {
  std::array<ComplexLog, 4> values;
  for (std::size_t k = 0; k < 4; ++k) values[k] = term_value(terms[k], q, t, hbar);
  return log_sum(values);
}

/// Exact gradient of ln(sum of terms) per axis.
/// Terms are weighted relative to the largest one, so ratios survive even when
/// every individual amplitude underflows.
template <std::size_t Axes>
std::array<std::complex<double>, Axes> log_gradient(const TermList<Axes>& terms,
                                                    const std::array<double, Axes>& q, double t,
                                                    double hbar, double node_floor) {
  std::array<ComplexLog, 4> values;
  double lmax = -std::numeric_limits<double>::infinity();
  std::size_t kmax = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    values[k] = term_value(terms[k], q, t, hbar);
    if (values[k].log_magnitude > lmax) {
      lmax = values[k].log_magnitude;
      kmax = k;
    }
  }
  if (std::isinf(lmax)) throw NodeSingularity("all terms vanish");

  std::array<std::complex<double>, Axes> numer{};
  std::complex<double> total{};
  double magnitude_sum = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double rel = values[k].log_magnitude - lmax;
    if (!(rel > -745.0)) continue;  // exp underflows to zero
    const std::complex<double> w = std::polar(std::exp(rel), values[k].phase - values[kmax].phase);
    total += w;
    magnitude_sum += std::exp(rel);
    for (std::size_t a = 0; a < Axes; ++a)
      numer[a] += w * packet_log_derivative(terms[k].factors[a], q[a], t, hbar);
  }
  if (!(std::abs(total) > std::exp(-node_floor))) throw NodeSingularity("|psi| below node floor");
  // A sum at the level of its own rounding noise has no usable phase.
  if (!(std::abs(total) > 16 * std::numeric_limits<double>::epsilon() * magnitude_sum))
    throw NodeSingularity("|psi| lost to cancellation");
  for (auto& n : numer) n /= total;
  return numer;
}

}  // namespace detail

/// Builds [f_u+(r1) f_d-(r2) + f_d+(r1) f_u-(r2)] + (1 <-> 2) with unit coefficients.
inline TwoParticleState build_initial_state(const ExperimentParams& params) {
  params.validate_physics();
  auto x_packet = [&](int sign, double mass) {
    return Packet1D{params.sigma_x, sign * params.l_x, sign * params.u_x, mass};
  };
  auto y_packet = [&](int updown, double mass) {
    return Packet1D{params.sigma_y, updown * params.l_y, updown * params.u_y, mass};
  };
  // f_{u/d}^{sign} for a particle of the given mass: (x-packet, y-packet)
  auto f = [&](int updown, int sign, double mass) {
    return std::pair{x_packet(sign, mass), y_packet(updown, mass)};
  };
  const double m1 = params.mass1, m2 = params.mass2;
  auto product = [](std::pair<Packet1D, Packet1D> p1, std::pair<Packet1D, Packet1D> p2) {
    return ProductTerm<4>{ComplexLog::one(), {p1.first, p1.second, p2.first, p2.second}};
  };
  constexpr int up = +1, down = -1, plus = +1, minus = -1;
  TwoParticleState s;
  s.terms = {
      product(f(up, plus, m1), f(down, minus, m2)),
      product(f(down, plus, m1), f(up, minus, m2)),
      product(f(down, minus, m1), f(up, plus, m2)),
      product(f(up, minus, m1), f(down, plus, m2)),
  };
  s.mass1 = m1;
  s.mass2 = m2;
  s.hbar = params.hbar;
  return s;
}

inline ComplexLog psi2_value(const TwoParticleState& s, const ConfigPoint4& q, double t) {
  return detail::sum_terms(s.terms, q.as_array(), t, s.hbar).value;
}

/// Guidance velocity v_i = (hbar / m_i) Im(grad_i Psi / Psi).
inline Velocity4 velocity2(const TwoParticleState& s, const ConfigPoint4& q, double t,
                           double node_floor = 60.0) {
  const auto g = detail::log_gradient(s.terms, q.as_array(), t, s.hbar, node_floor);
  const double k1 = s.hbar / s.mass1, k2 = s.hbar / s.mass2;
  return {k1 * g[0].imag(), k1 * g[1].imag(), k2 * g[2].imag(), k2 * g[3].imag()};
}

/// Effective collapse: the detected particle's coordinates are frozen at
/// (x_detected, y_detected) and absorbed into the coefficients. All four terms
/// are kept, so the result is exact rather than the two-term overlap approximation.
inline OneParticleState collapse(const TwoParticleState& s, Particle detected, double x_detected,
                                 double y_detected, double t_c) {
  const std::size_t det = detected == Particle::one ? 0 : 2;
  const std::size_t surv = detected == Particle::one ? 2 : 0;
  OneParticleState out;
  bool any = false;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& term = s.terms[k];
    ComplexLog c = term.coefficient * packet_value(term.factors[det], x_detected, t_c, s.hbar) *
                   packet_value(term.factors[det + 1], y_detected, t_c, s.hbar);
    out.terms[k] = ProductTerm<2>{c, {term.factors[surv], term.factors[surv + 1]}};
    any = any || !c.is_zero();
  }
  if (!any) throw DegenerateCollapse("detected position lies on a global node of the state");
  out.survivor = other(detected);
  out.mass = out.survivor == Particle::one ? s.mass1 : s.mass2;
  out.hbar = s.hbar;
  out.collapse_time = t_c;
  return out;
}

inline ComplexLog psi1_value(const OneParticleState& s, double x, double y, double t) {
  return detail::sum_terms(s.terms, {x, y}, t, s.hbar).value;
}

inline Velocity2 velocity1(const OneParticleState& s, double x, double y, double t,
                           double node_floor = 60.0) {
  const auto g = detail::log_gradient(s.terms, {x, y}, t, s.hbar, node_floor);
  const double k = s.hbar / s.mass;
  return {k * g[0].imag(), k * g[1].imag()};
}

}  // namespace ddslit

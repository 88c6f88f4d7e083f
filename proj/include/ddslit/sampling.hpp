#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "ddslit/errors.hpp"
#include "ddslit/params.hpp"
#include "ddslit/rng.hpp"
#include "ddslit/state.hpp"

namespace ddslit {

/// Proposal bookkeeping of the rejection sampler.
struct SamplerStats {
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;

  double acceptance_rate() const { return proposals ? double(accepted) / double(proposals) : 0.0; }
  SamplerStats& operator+=(const SamplerStats& o) {
    proposals += o.proposals;
    accepted += o.accepted;
    return *this;
  }
};

struct SampleBatch {
  std::vector<ConfigPoint4> points;
  SamplerStats stats;
};

namespace detail {

inline void require_unit_coefficients(const TwoParticleState& s) {
  for (const auto& term : s.terms)
    if (term.coefficient.log_magnitude != 0.0)
      throw ConfigError("Born-rule sampler requires unit-modulus term coefficients");
}

/// One draw from the equal-weight mixture of the four |term|^2 densities at t = 0,
/// with every width multiplied by `scale`.
template <class Rng>
ConfigPoint4 draw_mixture(const TwoParticleState& s, double scale, Rng& rng) {
  std::normal_distribution<double> normal;
  const std::size_t k = static_cast<std::size_t>(rng.uniform() * 4.0);
  const auto& f = s.terms[k < 4 ? k : 3].factors;
  std::array<double, 4> q;
  for (std::size_t a = 0; a < 4; ++a) q[a] = f[a].center + scale * f[a].sigma * normal(rng);
  return ConfigPoint4::from_array(q);
}

/// |Psi_0|^2 / (16 q) where q is the proposal density; bounded by one because
/// |sum_k c_k phi_k|^2 <= 4 sum_k |phi_k|^2 for unit |c_k|.
inline double acceptance_ratio(const TwoParticleState& s, const ConfigPoint4& q) {
  const auto x = q.as_array();
  std::array<double, 4> log_components;
  for (std::size_t k = 0; k < 4; ++k) {
    double l = 0.0;
    for (std::size_t a = 0; a < 4; ++a) l += packet_value(s.terms[k].factors[a], x[a], 0.0, s.hbar).log_magnitude;
    log_components[k] = 2.0 * l;
  }
  const double log_psi2 = 2.0 * psi2_value(s, q, 0.0).log_magnitude;
  return std::exp(log_psi2 - std::log(4.0) - log_sum_exp(log_components));
}

}  // namespace detail

/// Exact draw from |Psi_0|^2 by rejection against the diagonal mixture.
inline ConfigPoint4 draw_equilibrium(const TwoParticleState& s, Substream& rng, SamplerStats& stats) {
  for (;;) {
    const ConfigPoint4 q = detail::draw_mixture(s, 1.0, rng);
    const double ratio = detail::acceptance_ratio(s, q);
    ++stats.proposals;
    if (ratio > 1.0 + 1e-12) throw EnvelopeViolation("acceptance ratio exceeds one");
    if (rng.uniform() < ratio) {
      ++stats.accepted;
      return q;
    }
  }
}

/// Born-rule sample; point i uses substream (spec.seed, first_index + i).
inline SampleBatch sample_initial(const TwoParticleState& s, const SamplerSpec& spec, std::size_t n,
                                  std::uint64_t first_index = 0) {
  spec.validate();
  if (spec.mode != SamplerMode::equilibrium) throw ConfigError("sample_initial requires equilibrium mode");
  if (n < 1) throw ConfigError("sample count must be >= 1");
  detail::require_unit_coefficients(s);
  SampleBatch out;
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Substream rng(spec.seed, first_index + i);
    out.points.push_back(draw_equilibrium(s, rng, out.stats));
  }
  return out;
}

/// Direct draw from the mixture with every width scaled by spec.sigma_scale;
/// no rejection step, so the result is out of quantum equilibrium.
inline ConfigPoint4 draw_nonequilibrium(const TwoParticleState& s, double sigma_scale, Substream& rng) {
  return detail::draw_mixture(s, sigma_scale, rng);
}

inline SampleBatch sample_nonequilibrium(const ExperimentParams& params, const SamplerSpec& spec, std::size_t n,
                                         std::uint64_t first_index = 0) {
  spec.validate();
  if (spec.mode != SamplerMode::narrowed) throw ConfigError("sample_nonequilibrium requires narrowed mode");
  const TwoParticleState s = build_initial_state(params);
  SampleBatch out;
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Substream rng(spec.seed, first_index + i);
    out.points.push_back(draw_nonequilibrium(s, spec.sigma_scale, rng));
  }
  out.stats = {n, n};
  return out;
}

/// CDF along `axis` (0..3 = x1, y1, x2, y2) of the equal-weight mixture of the
/// four |term|^2 densities, freely evolved to time t. For the default
/// separations this is the |Psi_t|^2 marginal up to interference terms of
/// order exp(-(l/sigma)^2 / 2).
inline double mixture_marginal_cdf(const TwoParticleState& s, std::size_t axis, double x, double scale = 1.0,
                                   double t = 0.0) {
  double acc = 0.0;
  for (const auto& term : s.terms) {
    const auto& p = term.factors[axis];
    const double width = scale * packet_width(p, t, s.hbar);
    acc += 0.5 * std::erfc(-(x - p.center - p.velocity * t) / (width * std::numbers::sqrt2));
  }
  return acc / 4.0;
}

/// Bin edges with equal mixture probability per bin (inverse CDF by bisection).
inline std::vector<double> mixture_quantile_edges(const TwoParticleState& s, std::size_t axis, std::size_t bins,
                                                  double scale = 1.0, double t = 0.0, double tail = 1e-6) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& term : s.terms) {
    const auto& p = term.factors[axis];
    const double c = p.center + p.velocity * t, w = scale * packet_width(p, t, s.hbar);
    lo = std::min(lo, c - 40 * w);
    hi = std::max(hi, c + 40 * w);
  }
  auto quantile = [&](double prob) {
    double a = lo, b = hi;
    for (int it = 0; it < 200 && b - a > 0; ++it) {
      const double m = 0.5 * (a + b);
      if (m <= a || m >= b) break;
      (mixture_marginal_cdf(s, axis, m, scale, t) < prob ? a : b) = m;
    }
    return 0.5 * (a + b);
  };
  std::vector<double> edges(bins + 1);
  edges.front() = quantile(tail);
  edges.back() = quantile(1.0 - tail);
  for (std::size_t k = 1; k < bins; ++k) edges[k] = quantile(double(k) / double(bins));
  return edges;
}

}  // namespace ddslit

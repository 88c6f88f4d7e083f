#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "ddslit/dynamics.hpp"

namespace ddslit {

struct Histogram1D {
  std::vector<double> edges;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;         // every value offered, in range or not
  std::uint64_t out_of_range = 0;  // below lo, above hi, or NaN

  std::size_t bins() const { return counts.size(); }
  std::uint64_t in_range() const { return total - out_of_range; }
  double lo() const { return edges.front(); }
  double hi() const { return edges.back(); }
};

struct Histogram2D {
  std::vector<double> x_edges, y_edges;
  std::vector<std::uint64_t> counts;  // row-major, x index outer
  std::uint64_t total = 0;
  std::uint64_t out_of_range = 0;

  std::uint64_t at(std::size_t ix, std::size_t iy) const { return counts[ix * (y_edges.size() - 1) + iy]; }
};

namespace detail {

inline std::vector<double> uniform_edges(double lo, double hi, std::size_t bins) {
  if (!(lo < hi) || bins < 1) throw std::invalid_argument("histogram needs lo < hi and bins >= 1");
  std::vector<double> e(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) e[i] = lo + (hi - lo) * double(i) / double(bins);
  e.back() = hi;
  return e;
}

/// Bins are [e_i, e_{i+1}); the last bin also takes v == hi.
inline std::optional<std::size_t> bin_index(double v, double lo, double hi, std::size_t bins) {
  if (!(v >= lo && v <= hi)) return std::nullopt;
  if (v == hi) return bins - 1;
  auto i = static_cast<std::size_t>((v - lo) / (hi - lo) * double(bins));
  return std::min(i, bins - 1);
}

}  // namespace detail

inline Histogram1D histogram1d(std::span<const double> values, double lo, double hi, std::size_t bins) {
  Histogram1D h;
  h.edges = detail::uniform_edges(lo, hi, bins);
  h.counts.assign(bins, 0);
  for (double v : values) {
    ++h.total;
    if (auto i = detail::bin_index(v, lo, hi, bins))
      ++h.counts[*i];
    else
      ++h.out_of_range;
  }
  return h;
}

/// Histogram over arbitrary strictly increasing edges (same closure rules).
inline Histogram1D histogram_with_edges(std::span<const double> values, std::vector<double> edges) {
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw std::invalid_argument("histogram edges must be strictly increasing");
  Histogram1D h;
  h.edges = std::move(edges);
  h.counts.assign(h.edges.size() - 1, 0);
  for (double v : values) {
    ++h.total;
    if (!(v >= h.lo() && v <= h.hi())) {
      ++h.out_of_range;
      continue;
    }
    auto it = std::upper_bound(h.edges.begin(), h.edges.end(), v);
    std::size_t i = static_cast<std::size_t>(it - h.edges.begin());
    i = i == 0 ? 0 : std::min(i - 1, h.bins() - 1);
    ++h.counts[i];
  }
  return h;
}

inline Histogram2D histogram2d(std::span<const double> xs, std::span<const double> ys, double x_lo, double x_hi,
                               std::size_t x_bins, double y_lo, double y_hi, std::size_t y_bins) {
  if (xs.size() != ys.size()) throw std::invalid_argument("histogram2d: coordinate lists differ in length");
  Histogram2D h;
  h.x_edges = detail::uniform_edges(x_lo, x_hi, x_bins);
  h.y_edges = detail::uniform_edges(y_lo, y_hi, y_bins);
  h.counts.assign(x_bins * y_bins, 0);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    ++h.total;
    auto ix = detail::bin_index(xs[k], x_lo, x_hi, x_bins);
    auto iy = detail::bin_index(ys[k], y_lo, y_hi, y_bins);
    if (ix && iy)
      ++h.counts[*ix * y_bins + *iy];
    else
      ++h.out_of_range;
  }
  return h;
}

/// sup |ECDF_a - ECDF_b|; ties are stepped over together.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = double(a.size()), nb = double(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(double(i) / na - double(j) / nb));
  }
  return d;
}

/// Survival function of the Kolmogorov distribution, P(K > lambda).
inline double kolmogorov_sf(double lambda) {
  if (lambda <= 0) return 1.0;
  if (lambda < 1.18) {
    // P(K <= x) = sqrt(2 pi) / x * sum exp(-(2k-1)^2 pi^2 / (8 x^2))
    const double c = -std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double cdf = 0.0;
    for (int k = 1; k <= 8; ++k) cdf += std::exp(double((2 * k - 1) * (2 * k - 1)) * c);
    return 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * cdf;
  }
  double sf = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sf += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(sf, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0;
  double p_value = 1;
  std::size_t n_a = 0, n_b = 0;

  bool rejects(double alpha) const { return p_value < alpha; }
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value at
/// effective size n_a n_b / (n_a + n_b).
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 10 || b.size() < 10) throw std::invalid_argument("ks_two_sample: need at least 10 values per sample");
  KsResult r;
  r.n_a = a.size();
  r.n_b = b.size();
  r.statistic = ks_statistic({a.begin(), a.end()}, {b.begin(), b.end()});
  const double ne = double(r.n_a) * double(r.n_b) / double(r.n_a + r.n_b);
  r.p_value = kolmogorov_sf(std::sqrt(ne) * r.statistic);
  return r;
}

struct ChiSquareResult {
  double statistic = 0;
  double p_value = 1;
  std::size_t degrees_of_freedom = 0;
  std::size_t groups = 0;  // bins after merging
};

/// Pearson goodness of fit over the in-range counts. Adjacent bins are merged
/// left to right until every group expects at least 5 counts.
inline ChiSquareResult chi_square_gof(const Histogram1D& observed, std::span<const double> expected_probabilities) {
  if (expected_probabilities.size() != observed.bins())
    throw std::invalid_argument("chi_square_gof: expected probabilities do not match the binning");
  double psum = 0.0;
  for (double p : expected_probabilities) {
    if (!(p >= 0)) throw std::invalid_argument("chi_square_gof: negative or NaN expected probability");
    psum += p;
  }
  const double n = double(observed.in_range());
  if (!(psum > 0) || n == 0) throw std::invalid_argument("chi_square_gof: nothing to compare");

  std::vector<double> obs, exp;
  double o_acc = 0, e_acc = 0;
  for (std::size_t i = 0; i < observed.bins(); ++i) {
    o_acc += double(observed.counts[i]);
    e_acc += expected_probabilities[i] / psum * n;
    if (e_acc >= 5.0) {
      obs.push_back(o_acc);
      exp.push_back(e_acc);
      o_acc = e_acc = 0;
    }
  }
  if (e_acc > 0 || o_acc > 0) {
    if (obs.empty()) {
      obs.push_back(o_acc);
      exp.push_back(e_acc);
    } else {
      obs.back() += o_acc;
      exp.back() += e_acc;
    }
  }
  ChiSquareResult r;
  r.groups = obs.size();
  for (std::size_t g = 0; g < obs.size(); ++g) {
    const double diff = obs[g] - exp[g];
    r.statistic += diff * diff / exp[g];
  }
  if (r.groups < 2) return r;
  r.degrees_of_freedom = r.groups - 1;
  r.p_value = boost::math::gamma_q(0.5 * double(r.degrees_of_freedom), 0.5 * r.statistic);
  return r;
}

enum class Observable { y, t };

inline std::string_view to_string(Observable o) { return o == Observable::y ? "y" : "t"; }

/// Observable on one screen from the complete records.
inline std::vector<double> extract(std::span<const DetectionRecord> records, Side side, Observable obs) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (!r.complete()) continue;
    auto v = obs == Observable::y ? r.y_on(side) : r.time_on(side);
    if (v) out.push_back(*v);
  }
  return out;
}

inline std::vector<DetectionRecord> select_mode(std::span<const DetectionRecord> records, TrajectoryMode mode) {
  std::vector<DetectionRecord> out;
  for (const auto& r : records)
    if (r.mode == mode) out.push_back(r);
  return out;
}

struct Binning {
  double lo = -0.05;
  double hi = 0.05;
  std::size_t bins = 80;
};

struct MarginalComparison {
  Side side = Side::right;
  Observable observable = Observable::y;
  KsResult ks;
  Histogram1D hist_a, hist_b;
};

/// Compares one screen's marginal between two record sets.
inline MarginalComparison marginal_compare(std::span<const DetectionRecord> a, std::span<const DetectionRecord> b,
                                           Side side, Observable obs, const Binning& binning = {}) {
  const auto va = extract(a, side, obs);
  const auto vb = extract(b, side, obs);
  if (va.empty() || vb.empty()) throw std::invalid_argument("marginal_compare: empty selection");
  MarginalComparison c;
  c.side = side;
  c.observable = obs;
  c.ks = ks_two_sample(va, vb);
  c.hist_a = histogram1d(va, binning.lo, binning.hi, binning.bins);
  c.hist_b = histogram1d(vb, binning.lo, binning.hi, binning.bins);
  return c;
}

/// (max - min) / (max + min) over the 3-bin moving average of the interior bins.
inline double visibility(const Histogram1D& h) {
  if (h.bins() < 3) throw std::invalid_argument("visibility: need at least 3 bins");
  double mx = -1, mn = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < h.bins(); ++i) {
    const double s = (double(h.counts[i - 1]) + double(h.counts[i]) + double(h.counts[i + 1])) / 3.0;
    mx = std::max(mx, s);
    mn = std::min(mn, s);
  }
  return mx + mn > 0 ? (mx - mn) / (mx + mn) : 0.0;
}

/// Band on one screen's y used to condition the other screen's pattern.
struct Band {
  double lo = -1e-3;
  double hi = 1e-3;
};

struct FringeResult {
  double visibility = 0;
  std::size_t conditioned = 0;
  Histogram1D histogram;
};

/// Visibility of the y pattern on `observed` among complete records whose y on
/// the opposite screen lies in `band` (no band: every complete record).
inline FringeResult fringe_visibility(std::span<const DetectionRecord> records, std::optional<Band> band,
                                      const Binning& binning, Side observed = Side::right,
                                      std::size_t min_records = 1000) {
  const Side conditioning = observed == Side::right ? Side::left : Side::right;
  std::vector<double> ys;
  for (const auto& r : records) {
    if (!r.complete()) continue;
    auto yo = r.y_on(observed);
    auto yc = r.y_on(conditioning);
    if (!yo || !yc) continue;
    if (band && !(*yc >= band->lo && *yc <= band->hi)) continue;
    ys.push_back(*yo);
  }
  if (ys.size() < min_records)
    throw std::invalid_argument("fringe_visibility: only " + std::to_string(ys.size()) + " conditioned records");
  FringeResult out;
  out.conditioned = ys.size();
  out.histogram = histogram1d(ys, binning.lo, binning.hi, binning.bins);
  out.visibility = visibility(out.histogram);
  return out;
}

}  // namespace ddslit

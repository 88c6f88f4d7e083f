#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ddslit/stats.hpp"

using namespace ddslit;

namespace {

/// sup |ECDF_a - ECDF_b| by evaluating both step functions at every sample point.
double brute_force_ks(const std::vector<double>& a, const std::vector<double>& b) {
  auto ecdf = [](const std::vector<double>& s, double x) {
    return double(std::count_if(s.begin(), s.end(), [&](double v) { return v <= x; })) / double(s.size());
  };
  double d = 0;
  for (const auto* s : {&a, &b})
    for (double x : *s) d = std::max(d, std::abs(ecdf(a, x) - ecdf(b, x)));
  return d;
}

DetectionRecord record(Side first, double y_first, double y_second, double t_first = 0.1, double t_second = 5.0) {
  DetectionRecord r;
  r.first_side = first;
  r.second_side = first == Side::left ? Side::right : Side::left;
  r.t_first = t_first;
  r.t_second = t_second;
  r.y_first = y_first;
  r.y_second = y_second;
  r.status = RecordStatus::complete;
  return r;
}

}  // namespace

TEST(Histogram, SingleValueUpperBin) {
  const std::vector<double> v{0.5};
  const auto h = histogram1d(v, 0.0, 1.0, 2);
  EXPECT_EQ(h.counts, (std::vector<std::uint64_t>{0, 1}));
  EXPECT_EQ(h.total, 1u);
}

TEST(Histogram, ClosureRules) {
  const std::vector<double> v{0.0, 1.0, -0.1, 1.1, NAN, 0.25};
  const auto h = histogram1d(v, 0.0, 1.0, 4);
  EXPECT_EQ(h.counts, (std::vector<std::uint64_t>{1, 1, 0, 1}));
  EXPECT_EQ(h.out_of_range, 3u);
  EXPECT_EQ(h.in_range(), 3u);
  EXPECT_THROW(histogram1d(v, 1.0, 1.0, 4), std::invalid_argument);
}

TEST(Histogram, UniformSampleIsFlat) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(10000);
  for (auto& x : v) x = u(rng);
  const auto h = histogram1d(v, 0.0, 1.0, 20);
  const std::vector<double> flat(20, 1.0 / 20);
  EXPECT_GT(chi_square_gof(h, flat).p_value, 0.001);
}

TEST(Histogram, ExplicitEdges) {
  const std::vector<double> v{-1, 0, 0.5, 2, 3};
  const auto h = histogram_with_edges(v, {0, 1, 3});
  EXPECT_EQ(h.counts, (std::vector<std::uint64_t>{2, 2}));
  EXPECT_EQ(h.out_of_range, 1u);
  EXPECT_THROW(histogram_with_edges(v, {0, 0, 1}), std::invalid_argument);
}

TEST(Histogram, TwoDimensional) {
  const std::vector<double> x{0.1, 0.9, 0.9, 2.0}, y{0.1, 0.1, 0.9, 0.5};
  const auto h = histogram2d(x, y, 0, 1, 2, 0, 1, 2);
  EXPECT_EQ(h.at(0, 0), 1u);
  EXPECT_EQ(h.at(1, 0), 1u);
  EXPECT_EQ(h.at(1, 1), 1u);
  EXPECT_EQ(h.out_of_range, 1u);
}

TEST(Ks, IdenticalSamples) {
  const std::vector<double> a{3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5};
  const auto r = ks_two_sample(a, a);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(Ks, DisjointSupports) {
  std::vector<double> a, b;
  for (int i = 0; i < 20; ++i) {
    a.push_back(i);
    b.push_back(100 + i);
  }
  const auto r = ks_two_sample(a, b);
  EXPECT_EQ(r.statistic, 1.0);
  EXPECT_LT(r.p_value, 1e-6);
}

TEST(Ks, SmallExampleAgainstBruteForce) {
  const std::vector<double> a{1, 2, 3}, b{1.5, 2.5, 3.5};
  EXPECT_DOUBLE_EQ(ks_statistic(a, b), brute_force_ks(a, b));
  EXPECT_DOUBLE_EQ(ks_statistic(a, b), 1.0 / 3.0);
  EXPECT_THROW(ks_two_sample(a, b), std::invalid_argument);
}

TEST(Ks, TiesAndRandomSamplesAgainstBruteForce) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> d(0, 12);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> a(15 + rep % 7), b(11 + rep % 5);
    for (auto& x : a) x = d(rng);
    for (auto& x : b) x = d(rng) + 1;
    EXPECT_DOUBLE_EQ(ks_statistic(a, b), brute_force_ks(a, b));
  }
}

TEST(Ks, SymmetricAndMonotoneInvariant) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  std::vector<double> a(300), b(250);
  for (auto& x : a) x = n(rng);
  for (auto& x : b) x = 0.2 + n(rng);
  const auto ab = ks_two_sample(a, b), ba = ks_two_sample(b, a);
  EXPECT_EQ(ab.statistic, ba.statistic);
  EXPECT_EQ(ab.p_value, ba.p_value);
  auto cube = [](std::vector<double> v) {
    for (auto& x : v) x = x * x * x;
    return v;
  };
  EXPECT_EQ(ks_two_sample(cube(a), cube(b)).statistic, ab.statistic);
}

TEST(Ks, KolmogorovDistributionValues) {
  // Reference values of Q_KS(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
  EXPECT_NEAR(kolmogorov_sf(1.3580986393225507), 0.05, 1e-9);
  EXPECT_NEAR(kolmogorov_sf(1.6276236115189503), 0.01, 1e-9);
  EXPECT_NEAR(kolmogorov_sf(1.9494746035043753), 0.001, 1e-9);
  EXPECT_EQ(kolmogorov_sf(0.0), 1.0);
  EXPECT_NEAR(kolmogorov_sf(0.2), 1.0, 1e-12);
}

TEST(Ks, NullPValuesRoughlyUniform) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n;
  int below_five_percent = 0;
  for (int rep = 0; rep < 400; ++rep) {
    std::vector<double> a(500), b(400);
    for (auto& x : a) x = n(rng);
    for (auto& x : b) x = n(rng);
    below_five_percent += ks_two_sample(a, b).rejects(0.05);
  }
  EXPECT_GT(below_five_percent, 5);
  EXPECT_LT(below_five_percent, 40);
}

TEST(ChiSquare, ExactProportionsGiveZero) {
  Histogram1D h = histogram1d(std::vector<double>{}, 0, 1, 4);
  h.counts = {10, 20, 30, 40};
  h.total = 100;
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  const auto r = chi_square_gof(h, p);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_EQ(r.degrees_of_freedom, 3u);
}

TEST(ChiSquare, HandComputedCase) {
  // Counts {11, 10, 9} against thirds: statistic (1 + 0 + 1) / 10, two degrees
  // of freedom, so p = exp(-statistic / 2).
  Histogram1D h = histogram1d(std::vector<double>{}, 0, 1, 3);
  h.counts = {11, 10, 9};
  h.total = 30;
  const std::vector<double> p{1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto r = chi_square_gof(h, p);
  EXPECT_NEAR(r.statistic, 0.2, 1e-12);
  EXPECT_NEAR(r.p_value, std::exp(-0.1), 1e-12);
}

TEST(ChiSquare, SparseBinsMerged) {
  Histogram1D h = histogram1d(std::vector<double>{}, 0, 1, 5);
  h.counts = {1, 1, 48, 49, 1};
  h.total = 100;
  const std::vector<double> p{0.01, 0.02, 0.47, 0.48, 0.02};
  const auto r = chi_square_gof(h, p);
  EXPECT_EQ(r.groups, 2u);
  EXPECT_EQ(r.degrees_of_freedom, 1u);
}

TEST(ChiSquare, SelfConsistentPValuesStayInBand) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n;
  std::vector<double> probs;
  const double lo = -3, hi = 3;
  const std::size_t bins = 30;
  auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
  for (std::size_t i = 0; i < bins; ++i) {
    const double a = lo + (hi - lo) * i / bins, b = lo + (hi - lo) * (i + 1) / bins;
    probs.push_back(cdf(b) - cdf(a));
  }
  int inside = 0;
  const int reps = 1000;
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<double> v(2000);
    for (auto& x : v) x = n(rng);
    const double p = chi_square_gof(histogram1d(v, lo, hi, bins), probs).p_value;
    inside += p > 0.001 && p < 0.999;
  }
  EXPECT_GE(inside, 990);
}

TEST(Marginals, ExtractAndCompare) {
  std::vector<DetectionRecord> a, b;
  for (int i = 0; i < 50; ++i) {
    a.push_back(record(Side::left, 1e-5 * i, -1e-5 * i));
    b.push_back(record(Side::right, 1e-5 * i, -1e-5 * i));
  }
  auto censored = record(Side::left, 1, 1);
  censored.status = RecordStatus::censored;
  a.push_back(censored);
  const auto yr = extract(a, Side::right, Observable::y);
  ASSERT_EQ(yr.size(), 50u);
  EXPECT_EQ(yr[3], -1e-5 * 3);
  EXPECT_EQ(extract(a, Side::left, Observable::t)[0], 0.1);
  EXPECT_EQ(marginal_compare(a, a, Side::right, Observable::y).ks.statistic, 0.0);
  // b's right-side values mirror a's.
  const auto c = marginal_compare(a, b, Side::right, Observable::y);
  EXPECT_EQ(c.ks.n_a, 50u);
  EXPECT_GT(c.ks.statistic, 0.9);
}

TEST(Visibility, FlatIsZero) {
  Histogram1D h = histogram1d(std::vector<double>{}, 0, 1, 12);
  std::fill(h.counts.begin(), h.counts.end(), 500);
  EXPECT_EQ(visibility(h), 0.0);
}

TEST(Visibility, PerfectFringesNearOne) {
  // cos^2 = (1 + cos 2theta) / 2 with 24 bins per period. A 3-bin average scales the
  // oscillation by (1 + 2 cos phi) / 3 and bin centres sit phi / 2 off the extrema.
  const std::size_t bins = 96;
  Histogram1D h = histogram1d(std::vector<double>{}, 0, 1, bins);
  for (std::size_t i = 0; i < bins; ++i) {
    const double c = std::cos(std::numbers::pi * (i + 0.5) / 24.0);
    h.counts[i] = static_cast<std::uint64_t>(std::llround(1e6 * c * c));
  }
  const double phi = std::numbers::pi / 12.0;
  EXPECT_NEAR(visibility(h), (1 + 2 * std::cos(phi)) / 3 * std::cos(phi / 2), 1e-5);
}

TEST(Visibility, ConditioningSelectsBand) {
  std::vector<DetectionRecord> rs;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.01, 0.01);
  for (int i = 0; i < 4000; ++i) {
    const double yl = u(rng);
    // Right pattern only fringes when the left hit is near zero.
    const double yr = std::abs(yl) < 1e-3 ? (i % 2 ? 0.004 : -0.004) : u(rng);
    rs.push_back(record(Side::left, yl, yr));
  }
  const Binning bin{-0.01, 0.01, 10};
  const auto conditioned = fringe_visibility(rs, Band{}, bin, Side::right, 100);
  const auto all = fringe_visibility(rs, std::nullopt, bin, Side::right, 100);
  EXPECT_LT(conditioned.conditioned, 1000u);
  EXPECT_EQ(all.conditioned, 4000u);
  EXPECT_GT(conditioned.visibility, 0.9);
  EXPECT_LT(all.visibility, conditioned.visibility);
  EXPECT_THROW(fringe_visibility(rs, Band{}, bin), std::invalid_argument);  // below the default minimum
}

#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <span>

namespace ddslit {

/// Complex number stored as exp(log_magnitude + i*phase).
///
/// Gaussian tails at the experiment's parameters reach millions of e-folds,
/// far below the smallest double, so amplitudes are carried in log form and
/// only ever exponentiated relative to the largest term of a sum.
/// Zero is represented by log_magnitude == -infinity.
struct ComplexLog {
  double log_magnitude = -std::numeric_limits<double>::infinity();
  double phase = 0.0;

  static ComplexLog zero() { return {}; }
  static ComplexLog one() { return {0.0, 0.0}; }

  static ComplexLog from_complex(std::complex<double> z) {
    if (z == std::complex<double>{}) return zero();
    return {std::log(std::abs(z)), std::arg(z)};
  }

  bool is_zero() const { return std::isinf(log_magnitude) && log_magnitude < 0; }

  /// Plain complex value; underflows to 0 for deep tails.
  std::complex<double> to_complex() const {
    if (is_zero()) return {};
    return std::polar(std::exp(log_magnitude), phase);
  }

  ComplexLog conj() const { return {log_magnitude, -phase}; }

  friend ComplexLog operator*(ComplexLog a, ComplexLog b) {
    if (a.is_zero() || b.is_zero()) return zero();
    return {a.log_magnitude + b.log_magnitude, a.phase + b.phase};
  }
  friend ComplexLog operator/(ComplexLog a, ComplexLog b) {
    if (a.is_zero()) return zero();
    return {a.log_magnitude - b.log_magnitude, a.phase - b.phase};
  }
  ComplexLog& operator*=(ComplexLog b) { return *this = *this * b; }
};

/// Result of a log-domain sum: the total plus the scale that was factored out.
struct LogSum {
  ComplexLog value;
  /// Largest log-magnitude among the summands (-inf when all are zero).
  double max_log_magnitude = -std::numeric_limits<double>::infinity();
};

/// Stable sum of terms differing by arbitrarily many e-folds.
inline LogSum log_sum(std::span<const ComplexLog> terms) {
  LogSum out;
  for (const auto& t : terms) out.max_log_magnitude = std::max(out.max_log_magnitude, t.log_magnitude);
  if (std::isinf(out.max_log_magnitude)) return out;
  // Phases are referenced to the dominant term so that the returned phase
  // stays close to the summands' own (unreduced) phases.
  const ComplexLog* ref = nullptr;
  for (const auto& t : terms)
    if (t.log_magnitude == out.max_log_magnitude) { ref = &t; break; }
  std::complex<double> acc{};
  for (const auto& t : terms) {
    if (t.is_zero()) continue;
    acc += std::polar(std::exp(t.log_magnitude - out.max_log_magnitude), t.phase - ref->phase);
  }
  if (acc == std::complex<double>{}) return out;
  out.value = {out.max_log_magnitude + std::log(std::abs(acc)), ref->phase + std::arg(acc)};
  return out;
}

/// log(sum(exp(x_i))) for real log-weights.
inline double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (std::isinf(m)) return m;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

}  // namespace ddslit

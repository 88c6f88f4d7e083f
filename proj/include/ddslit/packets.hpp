#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include "ddslit/complex_log.hpp"

namespace ddslit {

/// Reduced Planck constant, CODATA 2018 (J s).
inline constexpr double kHbar = 1.054571817e-34;

/// Freely evolving one-dimensional Gaussian wave packet:
/// width sigma, initial center, group velocity and particle mass (SI units).
struct Packet1D {
  double sigma = 1.0;
  double center = 0.0;
  double velocity = 0.0;
  double mass = 1.0;

  bool valid() const {
    return std::isfinite(sigma) && std::isfinite(center) && std::isfinite(velocity) &&
           std::isfinite(mass) && sigma > 0 && mass > 0;
  }
};

/// Complex width s_t = sigma * (1 + i t hbar / (2 m sigma^2)).
inline std::complex<double> packet_spread(const Packet1D& p, double t, double hbar = kHbar) {
  return {p.sigma, p.sigma * t * hbar / (2.0 * p.mass * p.sigma * p.sigma)};
}

/// Real width of |G_t|^2, i.e. |s_t|.
inline double packet_width(const Packet1D& p, double t, double hbar = kHbar) {
  return std::abs(packet_spread(p, t, hbar));
}

/// G_t(x) = (2 pi s_t^2)^(-1/4) exp[-(x-l-ut)^2 / (4 sigma s_t)] exp[i (m u / hbar)(x - l - u t / 2)]
/// evaluated in the log domain.
inline ComplexLog packet_value(const Packet1D& p, double x, double t, double hbar = kHbar) {
  const double tau = t * hbar / (2.0 * p.mass * p.sigma * p.sigma);
  const double xi = x - p.center - p.velocity * t;
  const double denom = 4.0 * p.sigma * p.sigma * (1.0 + tau * tau);
  // -xi^2 / (4 sigma s_t) = -xi^2 (1 - i tau) / (4 sigma^2 (1 + tau^2))
  const double gauss_re = -xi * xi / denom;
  const double gauss_im = xi * xi * tau / denom;
  // (2 pi s_t^2)^(-1/4) = exp(-log(2 pi)/4 - log(s_t)/2)
  const double log_abs_s = std::log(p.sigma) + 0.5 * std::log1p(tau * tau);
  const double arg_s = std::atan(tau);
  const double norm_re = -0.25 * std::log(2.0 * std::numbers::pi) - 0.5 * log_abs_s;
  const double norm_im = -0.5 * arg_s;
  const double wave = p.mass * p.velocity / hbar * (x - p.center - 0.5 * p.velocity * t);
  return {norm_re + gauss_re, norm_im + gauss_im + wave};
}

/// d/dx ln G_t(x) = -(x - l - u t) / (2 sigma s_t) + i m u / hbar.
inline std::complex<double> packet_log_derivative(const Packet1D& p, double x, double t,
                                                  double hbar = kHbar) {
  const std::complex<double> s = packet_spread(p, t, hbar);
  const double xi = x - p.center - p.velocity * t;
  return -xi / (2.0 * p.sigma * s) + std::complex<double>{0.0, p.mass * p.velocity / hbar};
}

}  // namespace ddslit

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "ddslit/errors.hpp"
#include "ddslit/packets.hpp"

namespace ddslit {

enum class Side { left, right, none };
enum class TrajectoryMode { collapse, free };
enum class RunMode { collapse, free, both };
enum class SamplerMode { equilibrium, narrowed };

inline std::string_view to_string(Side s) {
  switch (s) {
    case Side::left: return "L";
    case Side::right: return "R";
    default: return "-";
  }
}
inline std::string_view to_string(TrajectoryMode m) { return m == TrajectoryMode::collapse ? "collapse" : "free"; }
inline std::string_view to_string(RunMode m) {
  switch (m) {
    case RunMode::collapse: return "collapse";
    case RunMode::free: return "free";
    default: return "both";
  }
}
inline std::string_view to_string(SamplerMode m) { return m == SamplerMode::equilibrium ? "equilibrium" : "narrowed"; }

/// Detector planes; screens are infinite in y.
struct Screens {
  double x_left = -0.015;
  double x_right = 0.5;

  void validate() const {
    if (!(std::isfinite(x_left) && std::isfinite(x_right) && x_left < 0 && x_right > 0))
      throw ConfigError("screens must satisfy x_left < 0 < x_right");
  }
};

/// Tolerances are tight because dispersion magnifies an early position error
/// by |s_t| / sigma (about 4e4 at t = 5 s for sigma_x = 1 um).
struct IntegratorConfig {
  double rel_tol = 1e-11;
  double abs_tol = 1e-15;     // m
  double dt_init = 1e-7;      // s
  double dt_min = 1e-14;      // s
  double t_max = 20.0;        // s
  double crossing_time_tol = 1e-9;  // s
  double node_floor = 60.0;   // natural-log units

  void validate() const {
    const bool ok = rel_tol > 0 && abs_tol > 0 && dt_init > 0 && dt_min > 0 && t_max > 0 &&
                    crossing_time_tol > 0 && node_floor > 0 && dt_min < dt_init;
    if (!ok) throw ConfigError("integrator settings must be positive with dt_min < dt_init");
  }
};

struct SamplerSpec {
  SamplerMode mode = SamplerMode::equilibrium;
  double sigma_scale = 1.0;
  std::uint64_t seed = 0;

  static SamplerSpec equilibrium(std::uint64_t seed) { return {SamplerMode::equilibrium, 1.0, seed}; }
  /// Initial widths multiplied by `scale` (0.5 reproduces the sigma -> sigma/2 run).
  static SamplerSpec narrowed(std::uint64_t seed, double scale = 0.5) { return {SamplerMode::narrowed, scale, seed}; }

  void validate() const {
    if (!(sigma_scale > 0 && sigma_scale <= 1)) throw ConfigError("sigma_scale must lie in (0, 1]");
    if (mode == SamplerMode::equilibrium && sigma_scale != 1.0)
      throw ConfigError("equilibrium sampling requires sigma_scale = 1");
  }
};

/// Everything needed for a reproducible run. Defaults are the metastable
/// helium-4 setup: sigma_x = 1 um, sigma_y = 10 um, u_x = 0.1 m/s,
/// l_x = 5 mm, l_y = 50 um.
struct ExperimentParams {
  double sigma_x = 1e-6;
  double sigma_y = 1e-5;
  double u_x = 0.1;
  double u_y = 0.0;
  double l_x = 5e-3;
  double l_y = 5e-5;
  double mass1 = 6.646e-27;
  double mass2 = 6.646e-27;
  double hbar = kHbar;
  Screens screens;
  std::uint64_t n_trajectories = 1000;
  RunMode mode = RunMode::collapse;
  SamplerSpec sampler;
  IntegratorConfig integrator;
  std::uint64_t path_record_stride = 0;

  /// Physical parameters only; used wherever a state is built.
  void validate_physics() const {
    const bool ok = sigma_x > 0 && sigma_y > 0 && l_x > 0 && l_y > 0 && mass1 > 0 && mass2 > 0 &&
                    hbar > 0 && std::isfinite(u_x) && std::isfinite(u_y) && std::isfinite(sigma_x) &&
                    std::isfinite(sigma_y) && std::isfinite(l_x) && std::isfinite(l_y);
    if (!ok) throw ConfigError("widths, slit offsets, masses and hbar must be positive and finite");
  }

  void validate() const {
    validate_physics();
    if (n_trajectories < 1) throw ConfigError("n_trajectories must be >= 1");
    screens.validate();
    sampler.validate();
    integrator.validate();
  }
};

}  // namespace ddslit

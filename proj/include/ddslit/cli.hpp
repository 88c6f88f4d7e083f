#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddslit/ensemble.hpp"
#include "ddslit/io.hpp"
#include "ddslit/params.hpp"
#include "ddslit/sampling.hpp"
#include "ddslit/stats.hpp"

namespace ddslit::cli {

enum ExitCode : int { kSuccess = 0, kConfigError = 1, kRuntimeError = 2 };

/// Failure during a command after the configuration was accepted.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Options shared by every subcommand; the physics fields mirror ExperimentParams.
struct CliConfig {
  ExperimentParams params;
  std::filesystem::path out = "out";
  std::string config_file;
  unsigned workers = 1;
  std::size_t bins = 80;
  double x_left_distance = 0.015;
  std::vector<double> x_left_sweep{0.001, 0.007, 0.011, 0.015, 0.5};
  bool reseed = false;
  std::uint64_t paths = 10;
  std::uint64_t stride = 1;
  double max_censored_fraction = 0.05;
};

namespace detail {

inline void write_text(const std::filesystem::path& path, auto&& writer) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw RuntimeFailure("cannot open " + path.string() + " for writing");
  writer(os);
  if (!os) throw RuntimeFailure("write failed: " + path.string());
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("cannot create output directory " + dir.string() + ": " + ec.message());
}

inline std::string distance_label(double d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", d);
  return buf;
}

/// Records of the mode that carries the true (collapse-aware) statistics.
inline std::vector<DetectionRecord> primary_records(const std::vector<DetectionRecord>& records, RunMode mode) {
  return select_mode(records, mode == RunMode::free ? TrajectoryMode::free : TrajectoryMode::collapse);
}

inline void write_default_histograms(const std::filesystem::path& dir, const std::string& prefix,
                                     const std::vector<DetectionRecord>& records, const CliConfig& cfg) {
  const double y_lo = -0.05, y_hi = 0.05, t_hi = cfg.params.integrator.t_max;
  auto write1 = [&](const std::string& name, Side side, Observable obs, double lo, double hi) {
    const auto v = extract(records, side, obs);
    const auto h = histogram1d(v, lo, hi, cfg.bins);
    write_text(dir / ("hist_" + prefix + name + ".csv"), [&](std::ostream& os) { write_histogram(os, h, name); });
  };
  write1("yL", Side::left, Observable::y, y_lo, y_hi);
  write1("yR", Side::right, Observable::y, y_lo, y_hi);
  write1("tL", Side::left, Observable::t, 0.0, t_hi);
  write1("tR", Side::right, Observable::t, 0.0, t_hi);
  std::vector<double> yl, yr;
  for (const auto& r : records) {
    if (!r.complete()) continue;
    yl.push_back(*r.y_on(Side::left));
    yr.push_back(*r.y_on(Side::right));
  }
  const auto joint = histogram2d(yl, yr, y_lo, y_hi, cfg.bins, y_lo, y_hi, cfg.bins);
  write_text(dir / ("hist_" + prefix + "joint_y.csv"),
             [&](std::ostream& os) { write_histogram(os, joint, "yL x yR"); });
}

inline EnsembleResult run_checked(const ExperimentParams& params, unsigned workers) {
  try {
    return run_ensemble(params, workers);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw RuntimeFailure(e.what());
  }
}

}  // namespace detail

/// Full pipeline: records, run report and default histograms in cfg.out.
inline int cmd_simulate(const CliConfig& cfg) {
  cfg.params.validate();
  detail::ensure_dir(cfg.out);
  const auto result = detail::run_checked(cfg.params, cfg.workers);
  detail::write_text(cfg.out / "records.txt", [&](std::ostream& os) { write_records(os, result.records); });
  detail::write_text(cfg.out / "report.txt", [&](std::ostream& os) { write_report(os, result.report); });
  if (cfg.params.mode == RunMode::both) {
    detail::write_default_histograms(cfg.out, "collapse_", select_mode(result.records, TrajectoryMode::collapse), cfg);
    detail::write_default_histograms(cfg.out, "free_", select_mode(result.records, TrajectoryMode::free), cfg);
  } else {
    detail::write_default_histograms(cfg.out, "", result.records, cfg);
  }
  std::cout << result.report.n_records << " records written to " << (cfg.out / "records.txt").string() << '\n';
  if (result.report.censored_fraction() > cfg.max_censored_fraction) {
    std::cerr << "censored fraction " << result.report.censored_fraction() << " exceeds "
              << cfg.max_censored_fraction << '\n';
    return kRuntimeError;
  }
  return kSuccess;
}

/// One run per left-screen distance plus pairwise right-marginal comparisons.
inline int cmd_sweep(const CliConfig& cfg) {
  if (cfg.x_left_sweep.empty()) throw ConfigError("sweep needs at least one --x-left distance");
  for (double d : cfg.x_left_sweep)
    if (!(d > 0)) throw ConfigError("left-screen distances must be nonzero");
  cfg.params.validate();
  detail::ensure_dir(cfg.out);

  std::vector<std::vector<DetectionRecord>> per_run;
  bool censor_storm = false;
  for (std::size_t k = 0; k < cfg.x_left_sweep.size(); ++k) {
    ExperimentParams p = cfg.params;
    p.screens.x_left = -cfg.x_left_sweep[k];
    if (cfg.reseed) p.sampler.seed = substream_key(cfg.params.sampler.seed, k);
    const auto result = detail::run_checked(p, cfg.workers);
    const std::string label = detail::distance_label(cfg.x_left_sweep[k]);
    detail::write_text(cfg.out / ("records_xl_" + label + ".txt"),
                       [&](std::ostream& os) { write_records(os, result.records); });
    detail::write_text(cfg.out / ("report_xl_" + label + ".txt"),
                       [&](std::ostream& os) { write_report(os, result.report); });
    per_run.push_back(detail::primary_records(result.records, p.mode));
    const auto yr = extract(per_run.back(), Side::right, Observable::y);
    const auto h = histogram1d(yr, -0.05, 0.05, cfg.bins);
    detail::write_text(cfg.out / ("hist_yR_xl_" + label + ".csv"),
                       [&](std::ostream& os) { write_histogram(os, h, "yR"); });
    censor_storm = censor_storm || result.report.censored_fraction() > cfg.max_censored_fraction;
    std::cout << "x-left " << label << ": " << result.report.complete << " complete\n";
  }

  bool any01 = false, any001 = false;
  detail::write_text(cfg.out / "locality_report.txt", [&](std::ostream& os) {
    os << "# right-screen y marginal, pairwise across left-screen distances\n"
       << "sampler = \"" << to_string(cfg.params.sampler.mode) << "\"\n"
       << "reseed = " << (cfg.reseed ? "true" : "false") << "\n";
    std::ostringstream body;
    for (std::size_t i = 0; i < per_run.size(); ++i)
      for (std::size_t j = i + 1; j < per_run.size(); ++j) {
        const auto c = marginal_compare(per_run[i], per_run[j], Side::right, Observable::y,
                                        {-0.05, 0.05, cfg.bins});
        any01 = any01 || c.ks.rejects(0.01);
        any001 = any001 || c.ks.rejects(0.001);
        body << "\n[[comparison]]\n";
        write_comparison(body, "x-left " + detail::distance_label(cfg.x_left_sweep[i]),
                         "x-left " + detail::distance_label(cfg.x_left_sweep[j]), c);
      }
    os << "any_reject_at_0.01 = " << (any01 ? "true" : "false") << '\n'
       << "any_reject_at_0.001 = " << (any001 ? "true" : "false") << '\n'
       << body.str();
  });
  std::cout << "locality report: " << (any01 ? "some pair rejects at 0.01" : "no pair rejects at 0.01") << '\n';
  return censor_storm ? kRuntimeError : kSuccess;
}

/// Paired collapse/free path files from identical initial points.
inline int cmd_trajectories(const CliConfig& cfg) {
  if (cfg.stride == 0) throw ConfigError("--stride must be >= 1");
  if (cfg.paths == 0) throw ConfigError("--paths must be >= 1");
  cfg.params.validate();
  detail::ensure_dir(cfg.out);
  ExperimentParams p = cfg.params;
  p.n_trajectories = cfg.paths;
  p.mode = RunMode::both;
  p.path_record_stride = cfg.stride;
  const auto result = detail::run_checked(p, cfg.workers);
  for (std::size_t k = 0; k < result.records.size(); ++k) {
    const auto& r = result.records[k];
    const std::string name = "path_" + std::to_string(r.trajectory_index) + "_" + std::string(to_string(r.mode)) + ".csv";
    detail::write_text(cfg.out / name, [&](std::ostream& os) { write_path(os, result.paths[k]); });
  }
  detail::write_text(cfg.out / "records.txt", [&](std::ostream& os) { write_records(os, result.records); });
  std::cout << result.records.size() << " path files written to " << cfg.out.string() << '\n';
  return kSuccess;
}

/// Per-axis chi-square of sampled initial points against the analytic mixture marginals.
inline int cmd_sample_check(const CliConfig& cfg) {
  cfg.params.validate();
  detail::ensure_dir(cfg.out);
  const TwoParticleState s = build_initial_state(cfg.params);
  const auto& spec = cfg.params.sampler;
  const std::size_t n = cfg.params.n_trajectories;
  const SampleBatch batch = spec.mode == SamplerMode::equilibrium ? sample_initial(s, spec, n)
                                                                  : sample_nonequilibrium(cfg.params, spec, n);
  const char* names[] = {"x1", "y1", "x2", "y2"};
  bool fail = false;
  detail::write_text(cfg.out / "sample_check.txt", [&](std::ostream& os) {
    os << "# per-axis chi-square against the analytic initial marginals\n"
       << "sampler = \"" << to_string(spec.mode) << "\"\n"
       << "n = " << n << '\n'
       << "acceptance_rate = " << format_double(batch.stats.acceptance_rate()) << '\n';
    for (std::size_t a = 0; a < 4; ++a) {
      std::vector<double> v;
      for (const auto& q : batch.points) v.push_back(q.as_array()[a]);
      auto edges = mixture_quantile_edges(s, a, cfg.bins, spec.sigma_scale);
      std::vector<double> probs;
      for (std::size_t k = 0; k + 1 < edges.size(); ++k)
        probs.push_back(mixture_marginal_cdf(s, a, edges[k + 1], spec.sigma_scale) -
                        mixture_marginal_cdf(s, a, edges[k], spec.sigma_scale));
      const auto h = histogram_with_edges(v, std::move(edges));
      const auto chi = chi_square_gof(h, probs);
      fail = fail || chi.p_value < 1e-4;
      os << "\n[" << names[a] << "]\n"
         << "chi_square = " << format_double(chi.statistic) << '\n'
         << "degrees_of_freedom = " << chi.degrees_of_freedom << '\n'
         << "p_value = " << format_double(chi.p_value) << '\n';
      detail::write_text(cfg.out / ("sample_hist_" + std::string(names[a]) + ".csv"),
                         [&](std::ostream& hs) { write_histogram(hs, h, names[a]); });
    }
  });
  std::cout << (fail ? "sample check FAILED" : "sample check passed") << '\n';
  return fail ? kRuntimeError : kSuccess;
}

namespace detail {

struct RawOptions {
  std::string mode = "collapse";
  std::string sampler = "equilibrium";
  std::uint64_t seed = 0;
  std::uint64_t n = 1000;
  double x_right = 0.5;
  double sigma_scale = 0.5;
};

inline void add_common(CLI::App* sub, CliConfig& cfg, RawOptions& raw, bool sweep) {
  auto& p = cfg.params;
  sub->add_option("--config", cfg.config_file, "Configuration file (key = value; keys are flag names)");
  sub->add_option("--out", cfg.out, "Output directory");
  sub->add_option("--seed", raw.seed, "Base seed");
  sub->add_option("--n", raw.n, "Number of trajectories or samples");
  sub->add_option("--workers", cfg.workers, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--mode", raw.mode, "collapse | free | both")
      ->check(CLI::IsMember({"collapse", "free", "both"}));
  if (sweep)
    sub->add_option("--x-left", cfg.x_left_sweep, "Left-screen distances (m), one run each");
  else
    sub->add_option("--x-left", cfg.x_left_distance, "Left-screen distance from the origin (m)");
  sub->add_option("--x-right", raw.x_right, "Right-screen position (m)");
  sub->add_option("--sampler", raw.sampler, "equilibrium | narrowed")
      ->check(CLI::IsMember({"equilibrium", "narrowed"}));
  sub->add_option("--sigma-scale", raw.sigma_scale, "Width factor of the narrowed sampler");
  sub->add_option("--bins", cfg.bins, "Histogram bins")->check(CLI::PositiveNumber);
  sub->add_option("--sigma-x", p.sigma_x, "Packet width along x (m)");
  sub->add_option("--sigma-y", p.sigma_y, "Packet width along y (m)");
  sub->add_option("--u-x", p.u_x, "Packet speed along x (m/s)");
  sub->add_option("--u-y", p.u_y, "Packet speed along y (m/s)");
  sub->add_option("--l-x", p.l_x, "Slit offset along x (m)");
  sub->add_option("--l-y", p.l_y, "Slit offset along y (m)");
  sub->add_option("--mass1", p.mass1, "Mass of particle 1 (kg)");
  sub->add_option("--mass2", p.mass2, "Mass of particle 2 (kg)");
  sub->add_option("--hbar", p.hbar, "Reduced Planck constant (J s)");
  sub->add_option("--rel-tol", p.integrator.rel_tol, "Integrator relative tolerance");
  sub->add_option("--abs-tol", p.integrator.abs_tol, "Integrator absolute tolerance (m)");
  sub->add_option("--dt-init", p.integrator.dt_init, "Initial step (s)");
  sub->add_option("--dt-min", p.integrator.dt_min, "Minimum step (s)");
  sub->add_option("--t-max", p.integrator.t_max, "Time horizon (s)");
  sub->add_option("--crossing-tol", p.integrator.crossing_time_tol, "Crossing time tolerance (s)");
  sub->add_option("--node-floor", p.integrator.node_floor, "Node floor (natural-log units)");
  sub->add_option("--max-censored", cfg.max_censored_fraction, "Censored fraction that fails the run");
}

inline void finalize(CliConfig& cfg, const RawOptions& raw) {
  auto& p = cfg.params;
  p.n_trajectories = raw.n;
  p.mode = raw.mode == "free" ? RunMode::free : raw.mode == "both" ? RunMode::both : RunMode::collapse;
  p.sampler = raw.sampler == "narrowed" ? SamplerSpec::narrowed(raw.seed, raw.sigma_scale)
                                        : SamplerSpec::equilibrium(raw.seed);
  // Distances are positive; a negative value is read as the plane coordinate itself.
  cfg.x_left_distance = std::fabs(cfg.x_left_distance);
  for (double& d : cfg.x_left_sweep) d = std::fabs(d);
  if (!(cfg.x_left_distance > 0)) throw ConfigError("--x-left must be nonzero");
  p.screens.x_left = -cfg.x_left_distance;
  p.screens.x_right = raw.x_right;
}

/// Splices `key = value` lines from the file named by --config into the argument
/// list of the subcommand. Flags given on the command line take precedence.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  auto it = std::find_if(args.begin(), args.end(),
                         [](const std::string& a) { return a == "--config" || a.starts_with("--config="); });
  if (it == args.end() || args.empty()) return args;
  std::string path;
  if (*it == "--config") {
    if (std::next(it) == args.end()) throw ConfigError("--config needs a file name");
    path = *std::next(it);
    args.erase(it, it + 2);
  } else {
    path = it->substr(9);
    args.erase(it);
  }
  if (!std::filesystem::is_regular_file(path)) throw ConfigError("cannot read configuration file " + path);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path);
  } catch (const CLI::Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  const std::string& sub = args.front();
  auto given = [&](const std::string& flag) {
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.starts_with(flag + "="); });
  };
  std::vector<std::string> spliced;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    if (!item.parents.empty() && item.parents != std::vector<std::string>{sub}) continue;
    const std::string flag = "--" + item.name;
    if (given(flag)) continue;
    if (item.inputs.size() == 1) {
      spliced.push_back(flag + "=" + item.inputs.front());
    } else {
      spliced.push_back(flag);
      spliced.insert(spliced.end(), item.inputs.begin(), item.inputs.end());
    }
  }
  args.insert(args.begin() + 1, spliced.begin(), spliced.end());
  return args;
}

}  // namespace detail

/// Entry point of the `ddslit` executable. Exit codes: 0 success,
/// 1 usage or configuration error, 2 runtime failure.
inline int run(int argc, const char* const* argv) {
  CLI::App app{"Bohmian double-double-slit detection statistics", "ddslit"};
  app.require_subcommand(1);
  CliConfig cfg;
  detail::RawOptions raw;

  auto* simulate = app.add_subcommand("simulate", "Run one ensemble and write records, report and histograms");
  detail::add_common(simulate, cfg, raw, false);
  auto* sweep = app.add_subcommand("sweep", "One ensemble per left-screen distance plus a locality report");
  detail::add_common(sweep, cfg, raw, true);
  sweep->add_flag("--reseed", cfg.reseed, "Independent seed per placement");
  auto* traj = app.add_subcommand("trajectories", "Paired collapse/free path files");
  detail::add_common(traj, cfg, raw, false);
  traj->add_option("--paths", cfg.paths, "Number of initial points");
  traj->add_option("--stride", cfg.stride, "Record every stride-th accepted step");
  auto* check = app.add_subcommand("sample-check", "Chi-square check of the initial-point sampler");
  detail::add_common(check, cfg, raw, false);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (!args.empty()) args = detail::expand_config(std::move(args));
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    detail::finalize(cfg, raw);
    if (*simulate) return cmd_simulate(cfg);
    if (*sweep) return cmd_sweep(cfg);
    if (*traj) return cmd_trajectories(cfg);
    return cmd_sample_check(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace ddslit::cli

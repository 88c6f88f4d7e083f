#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>
#include <vector>

#include "ddslit/dynamics.hpp"
#include "ddslit/io.hpp"
#include "ddslit/params.hpp"
#include "ddslit/sampling.hpp"
#include "ddslit/state.hpp"

namespace ddslit {

struct RunReport {
  std::uint64_t n_trajectories = 0;
  std::uint64_t n_records = 0;
  std::uint64_t complete = 0;
  std::uint64_t censored = 0;
  std::uint64_t anomalous_same_side = 0;
  std::uint64_t stiff = 0;  // censored because the step size underflowed
  SamplerStats sampler;
  double wall_seconds = 0;
  ExperimentParams config;

  double censored_fraction() const { return n_records ? double(censored) / double(n_records) : 0.0; }
};

struct EnsembleResult {
  /// Sorted by trajectory index; in mode both the collapse record precedes the free one.
  std::vector<DetectionRecord> records;
  /// Parallel to `records`; empty unless path_record_stride > 0.
  std::vector<std::vector<PathSample>> paths;
  RunReport report;
};

/// Initial point of trajectory `index`: all of its randomness comes from
/// substream (seed, index).
inline ConfigPoint4 initial_point(const TwoParticleState& s, const SamplerSpec& spec, std::uint64_t index,
                                  SamplerStats& stats) {
  Substream rng(spec.seed, index);
  if (spec.mode == SamplerMode::equilibrium) return draw_equilibrium(s, rng, stats);
  ++stats.proposals;
  ++stats.accepted;
  return draw_nonequilibrium(s, spec.sigma_scale, rng);
}

/// Runs params.n_trajectories trajectories on `workers` threads. Output is
/// ordered by trajectory index and independent of the worker count.
inline EnsembleResult run_ensemble(const ExperimentParams& params, unsigned workers = 1) {
  params.validate();
  if (workers < 1) throw ConfigError("worker count must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  const TwoParticleState state = build_initial_state(params);
  if (params.sampler.mode == SamplerMode::equilibrium) detail::require_unit_coefficients(state);

  std::vector<TrajectoryMode> modes;
  if (params.mode != RunMode::free) modes.push_back(TrajectoryMode::collapse);
  if (params.mode != RunMode::collapse) modes.push_back(TrajectoryMode::free);
  const std::size_t per = modes.size();
  const std::uint64_t n = params.n_trajectories;

  std::vector<TrajectoryResult> slots(n * per);
  std::vector<SamplerStats> sampler_stats(n);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  constexpr std::uint64_t chunk = 16;

  auto work = [&] {
    try {
      for (;;) {
        const std::uint64_t begin = next.fetch_add(chunk);
        if (begin >= n) return;
        const std::uint64_t end = std::min(n, begin + chunk);
        for (std::uint64_t i = begin; i < end; ++i) {
          const ConfigPoint4 q0 = initial_point(state, params.sampler, i, sampler_stats[i]);
          for (std::size_t m = 0; m < per; ++m) {
            auto& slot = slots[i * per + m];
            slot = run_trajectory(state, q0, params.screens, modes[m], params.integrator, params.path_record_stride);
            slot.record.trajectory_index = i;
          }
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(n);
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  EnsembleResult out;
  out.records.reserve(slots.size());
  RunReport& rep = out.report;
  rep.config = params;
  rep.n_trajectories = n;
  for (auto& slot : slots) {
    switch (slot.record.status) {
      case RecordStatus::complete: ++rep.complete; break;
      case RecordStatus::censored: ++rep.censored; break;
      case RecordStatus::anomalous_same_side: ++rep.anomalous_same_side; break;
    }
    if (slot.stiff) ++rep.stiff;
    out.records.push_back(slot.record);
    if (params.path_record_stride > 0) out.paths.push_back(std::move(slot.path));
  }
  rep.n_records = out.records.size();
  for (const auto& st : sampler_stats) rep.sampler += st;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// Run report in the same "key = value" notation as config files.
inline void write_report(std::ostream& os, const RunReport& r) {
  const auto& c = r.config;
  os << "# ddslit run report\n"
     << "n_trajectories = " << r.n_trajectories << '\n'
     << "n_records = " << r.n_records << '\n'
     << "complete = " << r.complete << '\n'
     << "censored = " << r.censored << '\n'
     << "anomalous_same_side = " << r.anomalous_same_side << '\n'
     << "stiff = " << r.stiff << '\n'
     << "censored_fraction = " << format_double(r.censored_fraction()) << '\n'
     << "sampler_proposals = " << r.sampler.proposals << '\n'
     << "sampler_accepted = " << r.sampler.accepted << '\n'
     << "acceptance_rate = " << format_double(r.sampler.acceptance_rate()) << '\n'
     << "wall_seconds = " << format_double(r.wall_seconds) << '\n'
     << "seed = " << c.sampler.seed << '\n'
     << "\n# configuration\n"
     << "sigma-x = " << format_double(c.sigma_x) << '\n'
     << "sigma-y = " << format_double(c.sigma_y) << '\n'
     << "u-x = " << format_double(c.u_x) << '\n'
     << "u-y = " << format_double(c.u_y) << '\n'
     << "l-x = " << format_double(c.l_x) << '\n'
     << "l-y = " << format_double(c.l_y) << '\n'
     << "mass1 = " << format_double(c.mass1) << '\n'
     << "mass2 = " << format_double(c.mass2) << '\n'
     << "hbar = " << format_double(c.hbar) << '\n'
     << "x-left = " << format_double(-c.screens.x_left) << '\n'
     << "x-right = " << format_double(c.screens.x_right) << '\n'
     << "mode = \"" << to_string(c.mode) << "\"\n"
     << "sampler = \"" << to_string(c.sampler.mode) << "\"\n"
     << "sigma-scale = " << format_double(c.sampler.sigma_scale) << '\n'
     << "rel-tol = " << format_double(c.integrator.rel_tol) << '\n'
     << "abs-tol = " << format_double(c.integrator.abs_tol) << '\n'
     << "dt-init = " << format_double(c.integrator.dt_init) << '\n'
     << "dt-min = " << format_double(c.integrator.dt_min) << '\n'
     << "t-max = " << format_double(c.integrator.t_max) << '\n'
     << "crossing-tol = " << format_double(c.integrator.crossing_time_tol) << '\n'
     << "node-floor = " << format_double(c.integrator.node_floor) << '\n';
}

}  // namespace ddslit

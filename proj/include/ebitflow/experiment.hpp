#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ebitflow/channels.hpp"
#include "ebitflow/io.hpp"
#include "ebitflow/protocol.hpp"
#include "ebitflow/rng.hpp"
#include "ebitflow/version.hpp"

namespace ebitflow {

enum class OutputFormat { json, csv };

// Harness budget for the variational calls inside protocol runs. Smaller than
// the library default because a noisy four-qubit run can reach rank 16, where
// a rank-squared ensemble makes sweeps needlessly slow for margin checking.
inline OptConfig harness_opt_defaults() {
  OptConfig o;
  o.max_ensemble = 16;
  o.restarts = 2;
  return o;
}

struct ExperimentConfig {
  int theorem = 1;
  int trials = 100;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  double eps_var = 1e-3;
  std::optional<std::string> channel_spec;
  std::optional<int> ensemble_size;
  OptConfig opt = harness_opt_defaults();
  OutputFormat format = OutputFormat::json;
  std::string output_path;  // empty writes the report to stdout
  int jobs = 1;
  // replaces every random unitary draw with the identity, for smoke checks
  bool identity_ops = false;
};

inline void validate_config(const ExperimentConfig& cfg) {
  if (cfg.theorem < 1 || cfg.theorem > 4) {
    throw ConfigError("theorem must be 1, 2, 3 or 4");
  }
  if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
  if (cfg.tol <= 0.0) throw ConfigError("tol must be positive");
  if (cfg.eps_var <= 0.0) throw ConfigError("eps-var must be positive");
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
  const bool needs_channel = cfg.theorem == 3 || cfg.theorem == 4;
  if (needs_channel && !cfg.channel_spec) {
    throw ConfigError("theorems 3 and 4 need a channel spec");
  }
  if (!needs_channel && cfg.channel_spec) {
    throw ConfigError("channel spec only applies to theorems 3 and 4");
  }
  if (cfg.channel_spec) {
    ChannelSpec::parse(*cfg.channel_spec);  // fail early on malformed text
  }
  if (cfg.ensemble_size) {
    if (cfg.theorem != 2) throw ConfigError("ensemble size only applies to theorem 2");
    if (*cfg.ensemble_size < 1) throw ConfigError("ensemble size must be >= 1");
  }
  if (cfg.opt.restarts < 1) throw ConfigError("optimizer restarts must be >= 1");
  if (cfg.opt.max_iters < 1) throw ConfigError("optimizer max-iters must be >= 1");
  if (cfg.opt.tol <= 0.0) throw ConfigError("optimizer tol must be positive");
  if (cfg.opt.max_ensemble < 0) throw ConfigError("max-ensemble must be >= 0");
}

struct TrialRecord {
  int index = 0;
  std::uint64_t seed = 0;
  double e2 = 0.0;
  double e3 = 0.0;
  double e4 = 0.0;
  double s_c4 = 0.0;
  std::vector<BoundCheck> bounds;
  int violation_count = 0;
};

namespace detail {

inline StateVector haar_state(const SubsystemLayout& layout, std::mt19937_64& rng) {
  Vector v = complex_ginibre(layout.total_dim(), 1, rng).col(0);
  v /= v.norm();
  return StateVector(layout, std::move(v));
}

inline std::vector<double> random_probs(Index n, std::mt19937_64& rng) {
  // bounded below so every member carries real weight
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> p(static_cast<std::size_t>(n));
  double total = 0.0;
  for (auto& x : p) {
    x = u(rng);
    total += x;
  }
  for (auto& x : p) x /= total;
  return p;
}

// Draw order per trial is fixed so that reruns and alternate implementations
// reproduce the stream: protocol unitaries first (prep, then ABC, then D),
// then ensemble or mixture data, then channels.
inline ProtocolTrace run_one_trial(const ExperimentConfig& cfg, std::uint64_t trial_seed) {
  auto rng = make_rng(trial_seed);
  OptConfig opt = cfg.opt;
  opt.seed = trial_seed;
  SubsystemLayout layout = protocol_layout();

  auto draw_prep = [&]() {
    return cfg.identity_ops ? UnitaryOp::identity(16) : haar_unitary(16, rng);
  };
  auto draw_abc = [&]() {
    return cfg.identity_ops ? UnitaryOp::identity(8, {"A", "B", "C"})
                            : haar_unitary(8, rng, {"A", "B", "C"});
  };
  auto draw_d = [&]() {
    return cfg.identity_ops ? UnitaryOp::identity(2, {"D"})
                            : haar_unitary(2, rng, {"D"});
  };

  switch (cfg.theorem) {
    case 1: {
      UnitaryOp prep = draw_prep();
      UnitaryOp abc = draw_abc();
      UnitaryOp d = draw_d();
      return run_pure_protocol(prep, abc, d, cfg.tol);
    }
    case 2: {
      UnitaryOp prep = draw_prep();
      UnitaryOp abc = draw_abc();
      UnitaryOp d = draw_d();
      const Index m = cfg.ensemble_size
                          ? static_cast<Index>(*cfg.ensemble_size)
                          : static_cast<Index>(3 + rng() % 3);
      std::vector<double> probs = random_probs(m, rng);
      std::vector<PureEnsemble::Member> members;
      for (Index i = 0; i < m; ++i) {
        members.push_back({probs[static_cast<std::size_t>(i)], haar_state(layout, rng)});
      }
      return run_mixed_protocol(PureEnsemble(std::move(members)), prep, abc, d,
                                cfg.tol, cfg.eps_var, opt)
          .trace;
    }
    case 3: {
      UnitaryOp prep = draw_prep();
      UnitaryOp abc = draw_abc();
      UnitaryOp d = draw_d();
      ChannelSpec spec = ChannelSpec::parse(*cfg.channel_spec);
      QuantumChannel ch_d = spec.build(rng);
      QuantumChannel ch_c = spec.build(rng);
      DensityMatrix rho0 = pure_to_density(StateVector::basis(layout, 0));
      return run_noisy_protocol(rho0, prep, abc, d, ch_d, ch_c, cfg.tol,
                                cfg.eps_var, opt);
    }
    case 4: {
      UnitaryOp prep = draw_prep();
      std::vector<double> probs = random_probs(3, rng);
      std::vector<LoccTerm> terms;
      for (int i = 0; i < 3; ++i) {
        UnitaryOp a = cfg.identity_ops ? UnitaryOp::identity(8, {"A", "B", "C"})
                                       : haar_unitary(8, rng, {"A", "B", "C"});
        UnitaryOp b = cfg.identity_ops ? UnitaryOp::identity(2, {"D"})
                                       : haar_unitary(2, rng, {"D"});
        terms.push_back({probs[static_cast<std::size_t>(i)], std::move(a), std::move(b)});
      }
      ChannelSpec spec = ChannelSpec::parse(*cfg.channel_spec);
      QuantumChannel ch_d = spec.build(rng);
      QuantumChannel ch_c = spec.build(rng);
      DensityMatrix rho0 = pure_to_density(StateVector::basis(layout, 0));
      return run_locc_protocol(rho0, prep, LoccMixture(std::move(terms)), ch_d,
                               ch_c, cfg.tol, cfg.eps_var, opt);
    }
    default:
      throw ConfigError("theorem must be 1, 2, 3 or 4");
  }
}

inline TrialRecord record_trial(const ExperimentConfig& cfg, int index) {
  const std::uint64_t trial_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(index));
  ProtocolTrace trace = run_one_trial(cfg, trial_seed);
  TrialRecord r;
  r.index = index;
  r.seed = trial_seed;
  r.e2 = trace.e(2);
  r.e3 = trace.e(3);
  r.e4 = trace.e(4);
  r.s_c4 = trace.s_c4;
  r.bounds = std::move(trace.bounds);
  for (const auto& b : r.bounds) {
    if (b.margin < -b.tol) ++r.violation_count;
  }
  return r;
}

}  // namespace detail

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<TrialRecord> trials;
  double min_margin = 0.0;
  double max_e2 = 0.0;
  double max_e4 = 0.0;
  int violation_count = 0;  // trials with at least one violated bound
  double wall_seconds = 0.0;
  std::string version = kVersion;
};

// Runs cfg.trials independent protocol executions. Trial i's randomness comes
// only from derive_seed(cfg.seed, i), so the report's numbers do not depend
// on the job count or on scheduling; wall_seconds is the only nondeterministic
// field.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<std::optional<TrialRecord>> slots(static_cast<std::size_t>(cfg.trials));
  std::atomic<int> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (!stop.load(std::memory_order_relaxed)) {
      const int i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= cfg.trials) return;
      try {
        slots[static_cast<std::size_t>(i)] = detail::record_trial(cfg, i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        stop.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  const int n_threads = std::min(cfg.jobs, cfg.trials);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  ExperimentReport rep;
  rep.config = cfg;
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (auto& slot : slots) {
    TrialRecord& r = *slot;
    rep.max_e2 = std::max(rep.max_e2, r.e2);
    rep.max_e4 = std::max(rep.max_e4, r.e4);
    for (const auto& b : r.bounds) rep.min_margin = std::min(rep.min_margin, b.margin);
    if (r.violation_count > 0) ++rep.violation_count;
    rep.trials.push_back(std::move(r));
  }
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline Json to_json(const OptConfig& o) {
  Json j;
  j["max_ensemble"] = o.max_ensemble;
  j["restarts"] = o.restarts;
  j["tol"] = o.tol;
  j["max_iters"] = o.max_iters;
  return j;
}

inline Json to_json(const ExperimentConfig& cfg) {
  Json j;
  j["theorem"] = cfg.theorem;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["tol"] = cfg.tol;
  j["eps_var"] = cfg.eps_var;
  j["channel"] = cfg.channel_spec ? Json(*cfg.channel_spec) : Json(nullptr);
  j["ensemble_size"] = cfg.ensemble_size ? Json(*cfg.ensemble_size) : Json(nullptr);
  j["opt"] = to_json(cfg.opt);
  j["format"] = cfg.format == OutputFormat::json ? "json" : "csv";
  j["jobs"] = cfg.jobs;
  j["identity_ops"] = cfg.identity_ops;
  return j;
}

inline Json to_json(const TrialRecord& r) {
  Json j;
  j["index"] = r.index;
  j["seed"] = r.seed;
  j["e2"] = r.e2;
  j["e3"] = r.e3;
  j["e4"] = r.e4;
  j["s_c4"] = r.s_c4;
  Json margins = Json::array();
  for (const auto& b : r.bounds) margins.push_back(to_json(b));
  j["margins"] = std::move(margins);
  j["violation_count"] = r.violation_count;
  return j;
}

inline Json to_json(const ExperimentReport& rep) {
  Json j;
  j["version"] = rep.version;
  j["config"] = to_json(rep.config);
  Json agg;
  agg["min_margin"] = rep.min_margin;
  agg["max_e2"] = rep.max_e2;
  agg["max_e4"] = rep.max_e4;
  agg["violation_count"] = rep.violation_count;
  agg["wall_seconds"] = rep.wall_seconds;
  j["aggregate"] = std::move(agg);
  Json trials = Json::array();
  for (const auto& r : rep.trials) trials.push_back(to_json(r));
  j["trials"] = std::move(trials);
  return j;
}

// One row per trial. Numbers use the same shortest round-trip formatting as
// the JSON writer so both formats carry identical values.
inline std::string report_to_csv(const ExperimentReport& rep) {
  auto num = [](double x) { return Json(x).dump(); };
  std::string out = "index,seed,e2,e3,e4,s_c4,violations";
  if (!rep.trials.empty()) {
    for (const auto& b : rep.trials.front().bounds) {
      out += ",margin:" + b.name;
    }
  }
  out += "\n";
  for (const auto& r : rep.trials) {
    out += std::to_string(r.index) + "," + std::to_string(r.seed) + "," +
           num(r.e2) + "," + num(r.e3) + "," + num(r.e4) + "," + num(r.s_c4) +
           "," + std::to_string(r.violation_count);
    for (const auto& b : r.bounds) out += "," + num(b.margin);
    out += "\n";
  }
  return out;
}

}  // namespace ebitflow

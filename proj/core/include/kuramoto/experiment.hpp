#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kuramoto/fluctuations.hpp"
#include "kuramoto/model.hpp"
#include "kuramoto/particle.hpp"

// Experiment orchestration: a single JSON config selects an experiment,
// model/disorder/initial sections, numerics and replication, and the runner
// composes the other modules into CSV outputs plus an NDJSON manifest.
// Replica seed pairs derive deterministically from the base seed:
//   disorder_seed(d)  = derive(base, disorder, d)
//   noise_seed(d, n)  = derive(base, noise, d * 2^20 + n)

namespace kuramoto {

enum class Experiment {
  Figure1,
  Figure2,
  CouplingRate,
  CltInit,
  OuNull,
  Bifurcation,
  ScalingStudy,
  Custom,
};

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);

struct NumericsConfig {
  double dt = 1e-2;        // particle step
  double T = 6.0;
  double mv_dt = 1e-3;     // mean-field RK4 step
  int M = 64;              // mean-field spectral truncation
  int M_probe = 8;         // probe/OU truncation
  double ou_dt = 5e-3;
  int record_stride = 10;
  Scheme scheme = Scheme::EulerMaruyama;
  double ou_max_leak = 1e-3;
  friend bool operator==(const NumericsConfig&, const NumericsConfig&) = default;
};

struct ReplicationConfig {
  int N = 600;
  std::vector<int> N_list;     // sweeps (coupling rate, scaling)
  int n_disorder = 1;
  int n_noise = 1;
  std::uint64_t base_seed = 42;
  friend bool operator==(const ReplicationConfig&, const ReplicationConfig&) = default;
};

struct WindowConfig {
  double t0 = 0.0;
  double t1 = 0.0;
  friend bool operator==(const WindowConfig&, const WindowConfig&) = default;
};

struct KGridConfig {
  double k_min = 0.0;
  double k_max = 8.0;
  int count = 33;
  friend bool operator==(const KGridConfig&, const KGridConfig&) = default;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::Custom;
  InteractionModel model = SineInteraction{1.0};
  DisorderLaw disorder = DisorderLaw::single(0.0);
  InitialLaw initial = InitialLaw::uniform();
  /// Initial law for the mean-field reference when it must differ from the
  /// particle one (e.g. seeding the PDE off the unstable uniform state).
  std::optional<InitialLaw> mv_initial;
  NumericsConfig numerics;
  ReplicationConfig replication;
  WindowConfig window;
  KGridConfig k_grid;
  std::string output_dir = "out";

  std::string to_json_string(int indent = 2) const;
  static ExperimentConfig from_json_string(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  void save(const std::string& path) const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Built-in preset for each experiment (figure parameter sets and the
/// acceptance studies).
ExperimentConfig preset(Experiment e);

/// Deterministic replica seed derivation (see header comment).
std::uint64_t replica_disorder_seed(const ExperimentConfig& cfg, int d_index);
std::uint64_t replica_noise_seed(const ExperimentConfig& cfg, int d_index, int n_index);

/// Empty list iff run() would start. Each violation names the config field.
std::vector<std::string> validate(const ExperimentConfig& cfg);

struct RunManifest {
  std::string id;  // config hash
  std::string path;
  std::vector<std::string> outputs;
  double wall_time_s = 0.0;
};

/// 64-bit FNV-1a of the canonical config serialization, in hex.
std::string config_hash(const ExperimentConfig& cfg);

/// Executes the configured experiment; all outputs land in out_dir. The
/// manifest record is written before the results; a completion record
/// (wall time) is appended afterwards.
RunManifest run(const ExperimentConfig& cfg, const std::string& out_dir, int workers);

/// Solve only the mean-field system of the config and emit mv_solution.csv.
RunManifest run_mv_solve(const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace kuramoto

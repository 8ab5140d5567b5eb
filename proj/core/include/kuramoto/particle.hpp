#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "kuramoto/mean_field.hpp"
#include "kuramoto/model.hpp"

// Quenched N-oscillator simulation. The disorder array is drawn once from its
// own seed and frozen; the Brownian increments come from an independent
// stream keyed by (noise_seed, particle, step), so changing one seed never
// perturbs the other stream.

namespace kuramoto {

enum class Scheme { EulerMaruyama, StochasticHeun };

struct SimConfig {
  int N = 1;
  double T = 1.0;
  double dt = 1e-2;
  Scheme scheme = Scheme::EulerMaruyama;
  std::uint64_t noise_seed = 0;
  std::uint64_t disorder_seed = 0;
  int record_stride = 10;

  int step_count() const;  // T/dt, which must be integral within 1e-9 relative
  void validate() const;
};

/// Quenched ensemble state: N canonical angles plus their frozen frequencies.
struct OscillatorEnsemble {
  std::vector<Angle> angles;
  std::vector<double> disorder;
  double time = 0.0;

  std::size_t size() const { return angles.size(); }
};

/// Empirical measure nu^N_t: uniform weight 1/N on the pairs (angle, omega).
struct EmpiricalSnapshot {
  double time = 0.0;
  std::vector<Angle> angles;
  std::vector<double> disorder;

  std::size_t size() const { return angles.size(); }
  WeightedMeasure measure() const;
};

std::vector<double> sample_disorder(const DisorderLaw& mu, int N, std::uint64_t disorder_seed);
std::vector<Angle> sample_initial(const InitialLaw& lambda, int N, std::uint64_t noise_seed);

/// One Euler-Maruyama step:
///   x_i <- wrap(x_i + [b[x_i, nu^N] + c(x_i, omega_i)] dt + sqrt(dt) g_i).
/// Sine interactions use the O(N) order-parameter route.
OscillatorEnsemble step(const OscillatorEnsemble& state, const InteractionModel& model,
                        double dt, std::span<const double> gaussians);

/// Drift vector b[x_i, nu^N] + c(x_i, omega_i); throws on non-finite values.
std::vector<double> ensemble_drift(const OscillatorEnsemble& state, const InteractionModel& model);

OrderParams finite_order_params(const EmpiricalSnapshot& snap);
OrderParams finite_order_params(const OscillatorEnsemble& state);

/// Called before each step with the pre-step state and that step's gaussians.
using StepObserver =
    std::function<void(const OscillatorEnsemble&, std::span<const double>, double)>;

/// Full run from explicitly given initial state (angles + disorder at t=0).
/// Snapshots at steps {0, stride, 2*stride, ...} plus the final step.
std::vector<EmpiricalSnapshot> simulate_from(OscillatorEnsemble state, const SimConfig& cfg,
                                             const InteractionModel& model,
                                             const StepObserver* observer = nullptr);

/// Draws disorder and initial angles from the config seeds, then runs.
std::vector<EmpiricalSnapshot> simulate(const SimConfig& cfg, const InteractionModel& model,
                                        const DisorderLaw& mu, const InitialLaw& lambda,
                                        const StepObserver* observer = nullptr);

/// Interacting system coupled to N independent copies of the nonlinear
/// process (drift b[x, P_t] + c(x, omega_i)), driven by identical Brownian
/// increments per (particle, step) and identical initial values.
struct CouplingResult {
  std::vector<double> sup_sq_gap;    // per particle: sup over recorded t of d(x,y)^2
  double mean_sup_sq_gap = 0.0;      // average over particles
  std::vector<double> times;         // recorded times
  std::vector<double> mean_sq_gap;   // per recorded time: mean_i d(x_i,y_i)^2
};

CouplingResult simulate_coupled(const SimConfig& cfg, const InteractionModel& model,
                                const DisorderLaw& mu, const InitialLaw& lambda,
                                const MeanFieldSolution& P);

}  // namespace kuramoto

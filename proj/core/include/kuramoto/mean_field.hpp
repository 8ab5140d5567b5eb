#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kuramoto/model.hpp"

// Fourier-Galerkin solver for the coupled McKean-Vlasov system: one density
// q_t^omega per disorder atom, all coupled through the mu-averaged
// interaction. In coefficient space the generator reads
//   d/dt c_k(a) = -k^2/2 c_k(a) - ik sum_p v_p(a) c_{k-p}(a),
// where v(x, omega_a) = b[x, P_t] + c(x, omega_a) has modes v_p(a). For the
// sine model b[x,P] = K Im(e^{-ix} A_t) with A_t = <P_t, e^{ix}>, so v has
// modes -1, 0, +1 only. The mass mode c_0 = 1/(2pi) is pinned exactly.

namespace kuramoto {

/// Per-atom Fourier coefficients c_k, k = 0..M.
using AtomCoeffs = std::vector<Complex>;
using CoeffBlock = std::vector<AtomCoeffs>;

struct OrderParams {
  double r = 0.0;
  Angle psi{};
  bool degenerate = false;  // r below 1e-12: psi reported as 0
};

/// Solution of the mean-field system on a time grid.
struct MeanFieldSolution {
  DisorderLaw mu;
  int M = 0;
  std::vector<double> times;
  std::vector<CoeffBlock> coeffs;  // per time index
  std::vector<std::string> warnings;

  double horizon() const { return times.back(); }
  double grid_step() const;

  /// c_k(atom, t_index) for k in [-M, M] (negative modes by conjugation).
  Complex mode(std::size_t t_index, int atom, int k) const;
  /// Same, linearly interpolated in time.
  Complex mode_at(double t, int atom, int k) const;

  /// <P_t, e^{ix}> = sum_a w_a 2pi c_{-1}(a,t).
  Complex order_complex(double t) const;
  /// int e^{imx} q_t^a(x) dx = 2pi c_{-m}(a,t).
  Complex atom_exp_moment(double t, int atom, int m) const;

  /// Density of atom a at time index, reconstructed on n points of [0,2pi).
  std::vector<double> density_grid(std::size_t t_index, int atom, int n) const;

  std::size_t time_index(double t) const;  // nearest grid index, throws outside
};

/// P_0 = lambda (x) mu as a single-time solution (every atom starts at lambda).
MeanFieldSolution initial_solution(const InitialLaw& lambda, const DisorderLaw& mu, int M);

/// Time derivative of a coefficient block under the mean-field generator.
CoeffBlock mv_rhs(const CoeffBlock& state, const InteractionModel& model, const DisorderLaw& mu);

struct MvOptions {
  double dt = 1e-3;
  int M = 64;
  /// Store every stride-th step; 0 = choose so the stored grid step is <= 1e-2.
  int store_stride = 0;
};

/// RK4 in coefficient space. Throws if dt*M^2/2 >= 2.5 (explicit-scheme
/// stability) or if any |c_k| exceeds 10 (blow-up detector).
MeanFieldSolution solve_mv(const InteractionModel& model, const DisorderLaw& mu,
                           const InitialLaw& lambda, double T, const MvOptions& opt = {});

/// r_t, psi_t of the limit measure at time t (interpolated).
OrderParams limit_order_params(const MeanFieldSolution& P, double t);

/// Stationary single-oscillator density with frozen mean field (sine model):
/// the 2pi-periodic, positive, mass-one solution of
///   (1/2) q'' - [(K r sin(psi - x) + omega) q]' = 0
/// with constant probability flux.
struct StationaryProfile {
  std::vector<double> grid;     // n points of [0, 2pi)
  std::vector<double> density;  // values at grid
  double flux = 0.0;            // probability current of the normalized density
  double periodicity_residual = 0.0;  // |q(0) - q(2pi)| from the construction
};

StationaryProfile stationary_profile(double omega, double r, Angle psi,
                                     const InteractionModel& model, int n_grid = 512);

/// Psi_{K,mu}(r) = sum_a w_a int cos(x) q_{omega_a, r, psi=0}(x) dx.
/// Requires symmetric mu (psi frozen at 0 by rotation invariance).
double psi_map(double K, const DisorderLaw& mu, double r);

enum class Stability { stable, unstable, marginal };

struct FixedPointReport {
  double K = 0.0;
  struct Root {
    double r = 0.0;
    Stability stability = Stability::marginal;
  };
  std::vector<Root> roots;                          // r = 0 always present
  std::vector<std::pair<double, double>> map_samples;  // (r, Psi(r)) scan table
};

/// Roots of Psi(r) = r on (0,1] located by a 200-point scan plus bisection
/// to 1e-10; stability from the sign of Psi'(r*) - 1 (finite differences).
FixedPointReport find_fixed_points(double K, const DisorderLaw& mu);

/// Leading eigenvalue real part of the k = +-1 mode block of the mean-field
/// generator linearized at the uniform state:
///   d c_1(a) = (-1/2 - i omega_a) c_1(a) + (K/2) sum_b w_b c_1(b).
double linearize_uniform(double K, const DisorderLaw& mu);

/// Smallest K at which linearize_uniform crosses zero (bisection, 1e-8).
double critical_coupling(const DisorderLaw& mu, double k_max = 64.0);

}  // namespace kuramoto

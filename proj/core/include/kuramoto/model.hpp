#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include "kuramoto/angle.hpp"

// Model ingredients shared by every other component: the disorder law mu on
// natural frequencies (finitely many atoms), the pair interaction b(x,y,omega)
// with quenched drift c(x,omega), and the initial law lambda on the circle.
//
// Fourier conventions used throughout the project:
//   density q(x) = sum_k  c_k e^{ikx},   c_k = (1/2pi) int q(x) e^{-ikx} dx,
// so mass one means c_0 = 1/(2pi) and <q, e^{ix}> = 2pi c_{-1}.

namespace kuramoto {

using Complex = std::complex<double>;

/// Finite-atom probability law of the natural frequencies.
struct DisorderLaw {
  struct Atom {
    double omega = 0.0;
    double weight = 1.0;
    friend bool operator==(const Atom&, const Atom&) = default;
  };
  std::vector<Atom> atoms;

  static DisorderLaw single(double omega) { return DisorderLaw{{{omega, 1.0}}}; }
  /// (1/2)(delta_{-omega0} + delta_{+omega0})
  static DisorderLaw symmetric_pair(double omega0) {
    return DisorderLaw{{{-omega0, 0.5}, {omega0, 0.5}}};
  }

  std::size_t size() const { return atoms.size(); }

  /// Weights positive, summing to one within 1e-12; frequencies pairwise distinct.
  void validate() const;

  /// Atoms closed under omega -> -omega with equal weights.
  bool symmetric(double tol = 1e-12) const;

  /// Index of the atom with this frequency; throws on unknown frequency.
  int atom_index(double omega) const;

  friend bool operator==(const DisorderLaw&, const DisorderLaw&) = default;
};

/// Kuramoto sine interaction: b(x,y,omega) = K sin(y-x), c(x,omega) = omega.
struct SineInteraction {
  double coupling = 0.0;  // K >= 0
  friend bool operator==(const SineInteraction&, const SineInteraction&) = default;
};

/// General smooth periodic interaction as truncated double-Fourier tables,
/// one table per disorder atom:
///   b(x,y,omega_a) = sum_{|p|,|q| <= modes} B_a(p,q) e^{i(px+qy)}
///   c(x,omega_a)   = sum_{|p| <= modes}     C_a(p)   e^{ipx}
/// Hermitian symmetry (real-valued b, c) is enforced at construction.
struct FourierInteraction {
  int modes = 0;
  std::vector<double> atom_omega;
  std::vector<std::vector<Complex>> b_table;  // per atom, (2m+1)^2, row-major (p,q)
  std::vector<std::vector<Complex>> c_table;  // per atom, 2m+1

  int table_side() const { return 2 * modes + 1; }
  Complex b_coeff(int atom, int p, int q) const {
    return b_table[atom][(p + modes) * table_side() + (q + modes)];
  }
  Complex c_coeff(int atom, int p) const { return c_table[atom][p + modes]; }

  int atom_index(double omega) const;
  void validate() const;

  /// Exact encoding of the sine model with coupling K over the given atoms.
  static FourierInteraction sine(double coupling, const DisorderLaw& mu);
  /// Tables from callables, sampled by DFT on a 4*(modes+1)-point grid.
  static FourierInteraction from_functions(
      const std::function<double(double, double, double)>& b,
      const std::function<double(double, double)>& c, int modes,
      const DisorderLaw& mu);

  friend bool operator==(const FourierInteraction&, const FourierInteraction&) = default;
};

using InteractionModel = std::variant<SineInteraction, FourierInteraction>;

inline bool is_sine(const InteractionModel& m) {
  return std::holds_alternative<SineInteraction>(m);
}
/// Coupling K of the sine model; throws for general interactions.
double sine_coupling(const InteractionModel& m);

double eval_b(const InteractionModel& m, Angle x, Angle y, double omega);
double eval_c(const InteractionModel& m, Angle x, double omega);

/// Finite weighted point measure on S^1 x R (angles with attached disorder).
struct WeightedMeasure {
  std::vector<double> angle;
  std::vector<double> omega;
  std::vector<double> weight;

  std::size_t size() const { return angle.size(); }
  /// Non-empty, weights >= 0 summing to one within 1e-9.
  void validate() const;
};

/// b[x, m] = int b(x,y,pi) m(dy,dpi). For the sine model this is
/// K r_m sin(psi_m - x), evaluated through the order parameter in O(|m|).
double b_bracket(const InteractionModel& m, Angle x, const WeightedMeasure& measure);

/// Same integral as the direct sum of eval_b over the support; O(|m|) calls.
/// Kept as the independent reference path for the fast order-parameter route.
double b_bracket_direct(const InteractionModel& m, Angle x, const WeightedMeasure& measure);

/// Initial law lambda of the oscillator angles.
struct InitialLaw {
  enum class Kind { UniformCircle, VonMisesLike, AtomAt };

  Kind kind = Kind::UniformCircle;
  double concentration = 0.0;  // VonMisesLike only
  Angle center{};              // VonMisesLike / AtomAt

  static InitialLaw uniform() { return {}; }
  static InitialLaw von_mises(double concentration, Angle center) {
    return {Kind::VonMisesLike, concentration, center};
  }
  static InitialLaw atom(Angle a) { return {Kind::AtomAt, 0.0, a}; }

  /// Fourier coefficients lambda_k, k = 0..M (lambda_{-k} by conjugation).
  std::vector<Complex> density_modes(int M) const;

  /// int e^{imx} dlambda for any integer m.
  Complex exp_moment(int m) const;

  /// Nonnegative on a 1024-point grid and mass one within 1e-10
  /// (grid check skipped for the point-mass kind).
  void validate() const;

  bool has_density() const { return kind != Kind::AtomAt; }
  /// Density value at x; throws for the point-mass kind.
  double density(double x) const;

  friend bool operator==(const InitialLaw&, const InitialLaw&) = default;
};

}  // namespace kuramoto

#include "kuramoto/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kuramoto {

namespace {

constexpr double kWeightTol = 1e-12;

/// Hermitian pairing check/fix tolerance for Fourier tables.
constexpr double kHermitianTol = 1e-12;

}  // namespace

void DisorderLaw::validate() const {
  if (atoms.empty()) throw std::invalid_argument("DisorderLaw: no atoms");
  double sum = 0.0;
  for (const auto& a : atoms) {
    if (!(a.weight > 0.0)) throw std::invalid_argument("DisorderLaw: weight not positive");
    if (!std::isfinite(a.omega)) throw std::invalid_argument("DisorderLaw: non-finite frequency");
    sum += a.weight;
  }
  if (std::fabs(sum - 1.0) > kWeightTol)
    throw std::invalid_argument("DisorderLaw: weights do not sum to 1");
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t j = i + 1; j < atoms.size(); ++j)
      if (atoms[i].omega == atoms[j].omega)
        throw std::invalid_argument("DisorderLaw: duplicate atom frequency");
}

bool DisorderLaw::symmetric(double tol) const {
  for (const auto& a : atoms) {
    bool found = false;
    for (const auto& b : atoms) {
      if (std::fabs(a.omega + b.omega) <= tol && std::fabs(a.weight - b.weight) <= tol) {
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

int DisorderLaw::atom_index(double omega) const {
  for (std::size_t i = 0; i < atoms.size(); ++i)
    if (atoms[i].omega == omega) return static_cast<int>(i);
  // tolerate representation noise from round-tripped configs
  for (std::size_t i = 0; i < atoms.size(); ++i)
    if (std::fabs(atoms[i].omega - omega) <= 1e-12 * std::max(1.0, std::fabs(omega)))
      return static_cast<int>(i);
  throw std::invalid_argument("DisorderLaw: unknown atom frequency");
}

int FourierInteraction::atom_index(double omega) const {
  for (std::size_t i = 0; i < atom_omega.size(); ++i)
    if (atom_omega[i] == omega) return static_cast<int>(i);
  for (std::size_t i = 0; i < atom_omega.size(); ++i)
    if (std::fabs(atom_omega[i] - omega) <= 1e-12 * std::max(1.0, std::fabs(omega)))
      return static_cast<int>(i);
  throw std::invalid_argument("FourierInteraction: unknown atom frequency");
}

void FourierInteraction::validate() const {
  if (modes < 0) throw std::invalid_argument("FourierInteraction: negative mode count");
  const std::size_t side = static_cast<std::size_t>(table_side());
  if (b_table.size() != atom_omega.size() || c_table.size() != atom_omega.size())
    throw std::invalid_argument("FourierInteraction: table count != atom count");
  for (std::size_t a = 0; a < atom_omega.size(); ++a) {
    if (b_table[a].size() != side * side || c_table[a].size() != side)
      throw std::invalid_argument("FourierInteraction: table size mismatch");
    for (int p = -modes; p <= modes; ++p) {
      if (std::abs(c_coeff(a, p) - std::conj(c_coeff(a, -p))) > kHermitianTol)
        throw std::invalid_argument("FourierInteraction: c table not hermitian");
      for (int q = -modes; q <= modes; ++q)
        if (std::abs(b_coeff(a, p, q) - std::conj(b_coeff(a, -p, -q))) > kHermitianTol)
          throw std::invalid_argument("FourierInteraction: b table not hermitian");
    }
  }
}

FourierInteraction FourierInteraction::sine(double coupling, const DisorderLaw& mu) {
  mu.validate();
  FourierInteraction f;
  f.modes = 1;
  const int side = f.table_side();
  for (const auto& atom : mu.atoms) {
    f.atom_omega.push_back(atom.omega);
    std::vector<Complex> b(static_cast<std::size_t>(side) * side, Complex{0.0, 0.0});
    // K sin(y-x) = (K/2i) e^{i(y-x)} - (K/2i) e^{-i(y-x)}
    b[(-1 + 1) * side + (1 + 1)] = Complex{0.0, -coupling / 2.0};  // (p,q)=(-1, 1)
    b[(1 + 1) * side + (-1 + 1)] = Complex{0.0, coupling / 2.0};   // (p,q)=( 1,-1)
    f.b_table.push_back(std::move(b));
    std::vector<Complex> c(side, Complex{0.0, 0.0});
    c[0 + 1] = Complex{atom.omega, 0.0};
    f.c_table.push_back(std::move(c));
  }
  return f;
}

FourierInteraction FourierInteraction::from_functions(
    const std::function<double(double, double, double)>& b,
    const std::function<double(double, double)>& c, int modes, const DisorderLaw& mu) {
  mu.validate();
  FourierInteraction f;
  f.modes = modes;
  const int side = f.table_side();
  const int n = 4 * (modes + 1);  // DFT grid, alias-free for band-limited inputs
  const double h = kTwoPi / n;
  for (const auto& atom : mu.atoms) {
    f.atom_omega.push_back(atom.omega);

    std::vector<Complex> bt(static_cast<std::size_t>(side) * side, Complex{0.0, 0.0});
    for (int p = -modes; p <= modes; ++p)
      for (int q = -modes; q <= modes; ++q) {
        Complex acc{0.0, 0.0};
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            const double x = i * h, y = j * h;
            acc += b(x, y, atom.omega) * std::polar(1.0, -(p * x + q * y));
          }
        bt[(p + modes) * side + (q + modes)] = acc / static_cast<double>(n * n);
      }
    f.b_table.push_back(std::move(bt));

    std::vector<Complex> ct(side, Complex{0.0, 0.0});
    for (int p = -modes; p <= modes; ++p) {
      Complex acc{0.0, 0.0};
      for (int i = 0; i < n; ++i) {
        const double x = i * h;
        acc += c(x, atom.omega) * std::polar(1.0, -p * x);
      }
      ct[p + modes] = acc / static_cast<double>(n);
    }
    f.c_table.push_back(std::move(ct));
  }
  return f;
}

double sine_coupling(const InteractionModel& m) {
  if (const auto* s = std::get_if<SineInteraction>(&m)) return s->coupling;
  throw std::invalid_argument("interaction model is not the sine kind");
}

double eval_b(const InteractionModel& m, Angle x, Angle y, double omega) {
  if (const auto* s = std::get_if<SineInteraction>(&m))
    return s->coupling * std::sin(y.value - x.value);
  const auto& f = std::get<FourierInteraction>(m);
  const int a = f.atom_index(omega);
  Complex acc{0.0, 0.0};
  for (int p = -f.modes; p <= f.modes; ++p)
    for (int q = -f.modes; q <= f.modes; ++q)
      acc += f.b_coeff(a, p, q) * std::polar(1.0, p * x.value + q * y.value);
  return acc.real();
}

double eval_c(const InteractionModel& m, Angle x, double omega) {
  if (std::holds_alternative<SineInteraction>(m)) return omega;
  const auto& f = std::get<FourierInteraction>(m);
  const int a = f.atom_index(omega);
  Complex acc{0.0, 0.0};
  for (int p = -f.modes; p <= f.modes; ++p)
    acc += f.c_coeff(a, p) * std::polar(1.0, p * x.value);
  return acc.real();
}

void WeightedMeasure::validate() const {
  if (angle.empty()) throw std::invalid_argument("WeightedMeasure: empty measure");
  if (angle.size() != omega.size() || angle.size() != weight.size())
    throw std::invalid_argument("WeightedMeasure: ragged arrays");
  double sum = 0.0;
  for (double w : weight) {
    if (w < 0.0) throw std::invalid_argument("WeightedMeasure: negative weight");
    sum += w;
  }
  if (std::fabs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("WeightedMeasure: weights do not sum to 1");
}

double b_bracket(const InteractionModel& m, Angle x, const WeightedMeasure& measure) {
  measure.validate();
  if (const auto* s = std::get_if<SineInteraction>(&m)) {
    // K Im(e^{-ix} <m, e^{iy}>) = K r_m sin(psi_m - x)
    double re = 0.0, im = 0.0;
    for (std::size_t j = 0; j < measure.size(); ++j) {
      re += measure.weight[j] * std::cos(measure.angle[j]);
      im += measure.weight[j] * std::sin(measure.angle[j]);
    }
    return s->coupling * (im * std::cos(x.value) - re * std::sin(x.value));
  }
  const auto& f = std::get<FourierInteraction>(m);
  // g_p = sum_j w_j sum_q B_{p,q}(atom_j) e^{i q x_j}; result Re sum_p g_p e^{ipx}
  const int side = f.table_side();
  std::vector<Complex> g(side, Complex{0.0, 0.0});
  for (std::size_t j = 0; j < measure.size(); ++j) {
    const int a = f.atom_index(measure.omega[j]);
    const Complex rot = std::polar(1.0, measure.angle[j]);
    Complex e_q = std::polar(1.0, -f.modes * measure.angle[j]);
    for (int q = -f.modes; q <= f.modes; ++q) {
      for (int p = -f.modes; p <= f.modes; ++p)
        g[p + f.modes] += measure.weight[j] * f.b_coeff(a, p, q) * e_q;
      e_q *= rot;
    }
  }
  Complex acc{0.0, 0.0};
  for (int p = -f.modes; p <= f.modes; ++p)
    acc += g[p + f.modes] * std::polar(1.0, p * x.value);
  return acc.real();
}

double b_bracket_direct(const InteractionModel& m, Angle x, const WeightedMeasure& measure) {
  measure.validate();
  double acc = 0.0;
  for (std::size_t j = 0; j < measure.size(); ++j)
    acc += measure.weight[j] * eval_b(m, x, Angle(measure.angle[j]), measure.omega[j]);
  return acc;
}

std::vector<Complex> InitialLaw::density_modes(int M) const {
  std::vector<Complex> out(static_cast<std::size_t>(M) + 1, Complex{0.0, 0.0});
  for (int k = 0; k <= M; ++k) out[k] = std::conj(exp_moment(k)) / kTwoPi;
  return out;
}

Complex InitialLaw::exp_moment(int m) const {
  switch (kind) {
    case Kind::UniformCircle:
      return m == 0 ? Complex{1.0, 0.0} : Complex{0.0, 0.0};
    case Kind::AtomAt:
      return std::polar(1.0, m * center.value);
    case Kind::VonMisesLike: {
      if (m == 0) return Complex{1.0, 0.0};
      // int e^{imx} e^{kappa cos(x - c)} dx / (2pi I_0) = e^{imc} I_|m|(kappa)/I_0(kappa)
      const int n = 2048;
      const double h = kTwoPi / n;
      double num = 0.0, den = 0.0;
      for (int i = 0; i < n; ++i) {
        const double u = i * h;
        const double w = std::exp(concentration * (std::cos(u) - 1.0));
        num += w * std::cos(m * u);
        den += w;
      }
      return (num / den) * std::polar(1.0, m * center.value);
    }
  }
  throw std::logic_error("InitialLaw: bad kind");
}

void InitialLaw::validate() const {
  if (kind == Kind::VonMisesLike && !(concentration >= 0.0))
    throw std::invalid_argument("InitialLaw: concentration must be >= 0");
  if (kind == Kind::AtomAt) return;  // point mass: nonnegative as a measure
  const int n = 1024;
  double mass = 0.0;
  for (int i = 0; i < n; ++i) {
    const double q = density(i * kTwoPi / n);
    if (q < 0.0) throw std::invalid_argument("InitialLaw: density negative on grid");
    mass += q;
  }
  mass *= kTwoPi / n;
  if (std::fabs(mass - 1.0) > 1e-10)
    throw std::invalid_argument("InitialLaw: density does not integrate to 1");
}

double InitialLaw::density(double x) const {
  switch (kind) {
    case Kind::UniformCircle:
      return 1.0 / kTwoPi;
    case Kind::VonMisesLike: {
      const int n = 2048;
      double den = 0.0;
      for (int i = 0; i < n; ++i)
        den += std::exp(concentration * (std::cos(i * kTwoPi / n) - 1.0));
      den *= kTwoPi / n;
      return std::exp(concentration * (std::cos(x - center.value) - 1.0)) / den;
    }
    case Kind::AtomAt:
      throw std::invalid_argument("InitialLaw: point mass has no density");
  }
  throw std::logic_error("InitialLaw: bad kind");
}

}  // namespace kuramoto

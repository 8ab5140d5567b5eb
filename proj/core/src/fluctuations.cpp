#include "kuramoto/fluctuations.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "kuramoto/parallel.hpp"
#include "kuramoto/rng.hpp"

namespace kuramoto {

namespace {

/// Sparse Fourier representation of a trig polynomial: (mode, coefficient).
using ModeMap = std::vector<std::pair<int, Complex>>;

ModeMap probe_modes(const Probe& p) {
  switch (p.trig) {
    case Trig::one:
      return {{0, Complex{1.0, 0.0}}};
    case Trig::cos:
      return {{p.mode, Complex{0.5, 0.0}}, {-p.mode, Complex{0.5, 0.0}}};
    case Trig::sin:
      return {{p.mode, Complex{0.0, -0.5}}, {-p.mode, Complex{0.0, 0.5}}};
  }
  throw std::logic_error("probe_modes: bad trig");
}

ModeMap derivative(const ModeMap& f) {
  ModeMap out;
  out.reserve(f.size());
  for (const auto& [m, c] : f)
    if (m != 0) out.emplace_back(m, Complex{0.0, static_cast<double>(m)} * c);
  return out;
}

ModeMap product(const ModeMap& f, const ModeMap& g) {
  ModeMap out;
  for (const auto& [m1, c1] : f)
    for (const auto& [m2, c2] : g) {
      const int m = m1 + m2;
      bool merged = false;
      for (auto& [mm, cc] : out)
        if (mm == m) {
          cc += c1 * c2;
          merged = true;
          break;
        }
      if (!merged) out.emplace_back(m, c1 * c2);
    }
  return out;
}

/// int f dlambda for a trig polynomial f.
double lambda_moment(const ModeMap& f, const InitialLaw& lambda) {
  Complex acc{0.0, 0.0};
  for (const auto& [m, c] : f) acc += c * lambda.exp_moment(m);
  return acc.real();
}

/// int f q_t^a dx against a mean-field solution.
double atom_moment(const ModeMap& f, const MeanFieldSolution& P, double t, int atom) {
  Complex acc{0.0, 0.0};
  for (const auto& [m, c] : f) acc += c * P.atom_exp_moment(t, atom, m);
  return acc.real();
}

/// sum_b w_b 1[b in set1] 1[b in set2]; atom = -1 denotes the full space.
double indicator_overlap(int a1, int a2, const DisorderLaw& mu) {
  if (a1 == -1 && a2 == -1) return 1.0;
  if (a1 == -1) return mu.atoms[a2].weight;
  if (a2 == -1) return mu.atoms[a1].weight;
  return a1 == a2 ? mu.atoms[a1].weight : 0.0;
}

double indicator_mass(int a, const DisorderLaw& mu) {
  return a == -1 ? 1.0 : mu.atoms[a].weight;
}

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) out(i, j) = m(i, j);
  return out;
}

/// Lower Cholesky factor of a PSD matrix, with 1e-12 diagonal jitter.
Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd jittered = a;
  for (Eigen::Index i = 0; i < jittered.rows(); ++i) jittered(i, i) += 1e-12;
  const Eigen::LLT<Eigen::MatrixXd> llt(jittered);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("cholesky failed: covariance not positive semidefinite");
  return llt.matrixL();
}

std::vector<int> snapshot_atoms(const EmpiricalSnapshot& snap, const DisorderLaw& mu) {
  std::vector<int> out(snap.size());
  for (std::size_t i = 0; i < snap.size(); ++i) out[i] = mu.atom_index(snap.disorder[i]);
  return out;
}

}  // namespace

std::string Probe::id() const {
  std::ostringstream os;
  switch (trig) {
    case Trig::one:
      os << "one";
      break;
    case Trig::cos:
      os << "cos" << mode;
      break;
    case Trig::sin:
      os << "sin" << mode;
      break;
  }
  if (atom >= 0)
    os << "_a" << atom;
  else
    os << "_all";
  return os.str();
}

double Probe::eval_x(double x) const {
  switch (trig) {
    case Trig::one:
      return 1.0;
    case Trig::cos:
      return std::cos(mode * x);
    case Trig::sin:
      return std::sin(mode * x);
  }
  throw std::logic_error("Probe: bad trig");
}

double Probe::eval_dx(double x) const {
  switch (trig) {
    case Trig::one:
      return 0.0;
    case Trig::cos:
      return -mode * std::sin(mode * x);
    case Trig::sin:
      return mode * std::cos(mode * x);
  }
  throw std::logic_error("Probe: bad trig");
}

ProbeBasis ProbeBasis::full(int m_probe, int n_atoms) {
  if (m_probe < 1) throw std::invalid_argument("ProbeBasis: m_probe must be >= 1");
  if (n_atoms < 1) throw std::invalid_argument("ProbeBasis: need at least one atom");
  ProbeBasis b;
  for (int a = 0; a < n_atoms; ++a) {
    b.probes.push_back({Trig::one, 0, a});
    for (int k = 1; k <= m_probe; ++k) {
      b.probes.push_back({Trig::cos, k, a});
      b.probes.push_back({Trig::sin, k, a});
    }
  }
  return b;
}

int ProbeBasis::m_probe() const {
  int m = 0;
  for (const auto& p : probes) m = std::max(m, p.mode);
  return m;
}

int ProbeBasis::index_of(Trig trig, int mode, int atom) const {
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& p = probes[i];
    if (p.trig == trig && p.atom == atom && (trig == Trig::one || p.mode == mode))
      return static_cast<int>(i);
  }
  return -1;
}

double empirical_mean(const EmpiricalSnapshot& snap, const DisorderLaw& mu, const Probe& phi) {
  if (snap.size() == 0) throw std::invalid_argument("empirical_mean: empty snapshot");
  const auto atoms = snapshot_atoms(snap, mu);
  double acc = 0.0;
  for (std::size_t i = 0; i < snap.size(); ++i)
    if (phi.atom == -1 || atoms[i] == phi.atom) acc += phi.eval_x(snap.angles[i].value);
  return acc / static_cast<double>(snap.size());
}

double probe_mean(const MeanFieldSolution& P, double t, const Probe& phi) {
  const ModeMap f = probe_modes(phi);
  double acc = 0.0;
  for (std::size_t a = 0; a < P.mu.size(); ++a) {
    if (phi.atom != -1 && static_cast<int>(a) != phi.atom) continue;
    acc += P.mu.atoms[a].weight * atom_moment(f, P, t, static_cast<int>(a));
  }
  return acc;
}

double eval_fluct(const EmpiricalSnapshot& snap, const MeanFieldSolution& P, const Probe& phi) {
  const double n = static_cast<double>(snap.size());
  return std::sqrt(n) * (empirical_mean(snap, P.mu, phi) - probe_mean(P, snap.time, phi));
}

double gamma1(const Probe& phi1, const Probe& phi2, const InitialLaw& lambda,
              const DisorderLaw& mu) {
  const ModeMap f1 = probe_modes(phi1);
  const ModeMap f2 = probe_modes(phi2);
  const double cov = lambda_moment(product(f1, f2), lambda) -
                     lambda_moment(f1, lambda) * lambda_moment(f2, lambda);
  return cov * indicator_overlap(phi1.atom, phi2.atom, mu);
}

double gamma2(const Probe& phi1, const Probe& phi2, const InitialLaw& lambda,
              const DisorderLaw& mu) {
  const double m1 = lambda_moment(probe_modes(phi1), lambda);
  const double m2 = lambda_moment(probe_modes(phi2), lambda);
  const double overlap = indicator_overlap(phi1.atom, phi2.atom, mu);
  return m1 * m2 * (overlap - indicator_mass(phi1.atom, mu) * indicator_mass(phi2.atom, mu));
}

Matrix gamma1_matrix(const ProbeBasis& basis, const InitialLaw& lambda, const DisorderLaw& mu) {
  const std::size_t n = basis.size();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      out(i, j) = out(j, i) = gamma1(basis.probes[i], basis.probes[j], lambda, mu);
  return out;
}

Matrix gamma2_matrix(const ProbeBasis& basis, const InitialLaw& lambda, const DisorderLaw& mu) {
  const std::size_t n = basis.size();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      out(i, j) = out(j, i) = gamma2(basis.probes[i], basis.probes[j], lambda, mu);
  return out;
}

namespace {

/// <P_u, phi1' phi2'>: the martingale covariance integrand.
double w_integrand(const Probe& phi1, const Probe& phi2, const MeanFieldSolution& P, double u) {
  const ModeMap d1 = derivative(probe_modes(phi1));
  const ModeMap d2 = derivative(probe_modes(phi2));
  if (d1.empty() || d2.empty()) return 0.0;
  const ModeMap prod = product(d1, d2);
  double acc = 0.0;
  for (std::size_t b = 0; b < P.mu.size(); ++b) {
    if (phi1.atom != -1 && phi1.atom != static_cast<int>(b)) continue;
    if (phi2.atom != -1 && phi2.atom != static_cast<int>(b)) continue;
    acc += P.mu.atoms[b].weight * atom_moment(prod, P, u, static_cast<int>(b));
  }
  return acc;
}

}  // namespace

double w_cov(const Probe& phi1, const Probe& phi2, const MeanFieldSolution& P, double s,
             double t) {
  const double upper = std::min(s, t);
  if (upper < 0.0) throw std::invalid_argument("w_cov: negative time");
  if (upper > P.horizon() + 1e-9) throw std::invalid_argument("w_cov: horizon exceeded");
  if (upper == 0.0) return 0.0;

  double acc = 0.0;
  double prev_t = P.times.front();
  double prev_v = w_integrand(phi1, phi2, P, prev_t);
  for (std::size_t i = 1; i < P.times.size() && prev_t < upper; ++i) {
    const double ti = std::min(P.times[i], upper);
    const double vi = w_integrand(phi1, phi2, P, ti);
    acc += 0.5 * (prev_v + vi) * (ti - prev_t);
    prev_t = ti;
    prev_v = vi;
  }
  return acc;
}

X0Sample sample_X0(const DisorderLaw& mu, const InitialLaw& lambda, const ProbeBasis& basis,
                   std::uint64_t disorder_seed, std::uint64_t noise_seed) {
  const std::size_t n = basis.size();
  const Eigen::MatrixXd l2 = psd_cholesky(to_eigen(gamma2_matrix(basis, lambda, mu)));
  const Eigen::MatrixXd l1 = psd_cholesky(to_eigen(gamma1_matrix(basis, lambda, mu)));

  const std::uint64_t key_c = rng::derive(disorder_seed, rng::Stream::ou_mean);
  const std::uint64_t key_y = rng::derive(noise_seed, rng::Stream::ou_noise, 1);

  Eigen::VectorXd xi_c(n), xi_y(n);
  for (std::size_t i = 0; i < n; ++i) {
    xi_c[static_cast<Eigen::Index>(i)] = rng::gaussian(key_c, i);
    xi_y[static_cast<Eigen::Index>(i)] = rng::gaussian(key_y, i);
  }
  const Eigen::VectorXd c = l2 * xi_c;
  const Eigen::VectorXd x = c + l1 * xi_y;

  X0Sample out;
  out.x.assign(x.data(), x.data() + n);
  out.c_component.assign(c.data(), c.data() + n);
  return out;
}

namespace {

/// Modes of the frozen drift b[., P_s] + c(., omega_a), per atom.
struct FieldModes {
  int pmax = 0;
  std::vector<ModeMap> v;  // per atom
};

FieldModes field_modes(const MeanFieldSolution& P, const InteractionModel& model, double s) {
  FieldModes fm;
  if (const auto* sine = std::get_if<SineInteraction>(&model)) {
    fm.pmax = 1;
    const Complex A = P.order_complex(s);
    const Complex half_iK{0.0, 0.5 * sine->coupling};
    for (std::size_t a = 0; a < P.mu.size(); ++a) {
      ModeMap v;
      v.emplace_back(-1, -half_iK * A);
      v.emplace_back(0, Complex{P.mu.atoms[a].omega, 0.0});
      v.emplace_back(1, half_iK * std::conj(A));
      fm.v.push_back(std::move(v));
    }
    return fm;
  }
  const auto& f = std::get<FourierInteraction>(model);
  fm.pmax = f.modes;
  std::vector<Complex> g(f.table_side(), Complex{0.0, 0.0});
  for (std::size_t b = 0; b < P.mu.size(); ++b) {
    const int fb = f.atom_index(P.mu.atoms[b].omega);
    for (int q = -f.modes; q <= f.modes; ++q) {
      const Complex mom = P.mu.atoms[b].weight * P.atom_exp_moment(s, static_cast<int>(b), q);
      for (int p = -f.modes; p <= f.modes; ++p) g[p + f.modes] += f.b_coeff(fb, p, q) * mom;
    }
  }
  for (std::size_t a = 0; a < P.mu.size(); ++a) {
    const int fa = f.atom_index(P.mu.atoms[a].omega);
    ModeMap v;
    for (int p = -f.modes; p <= f.modes; ++p) v.emplace_back(p, g[p + f.modes] + f.c_coeff(fa, p));
    fm.v.push_back(std::move(v));
  }
  return fm;
}

}  // namespace

LsExpansion apply_Ls(const Probe& phi, const MeanFieldSolution& P, double s,
                     const InteractionModel& model, const ProbeBasis& basis) {
  const int m_max = basis.m_probe();
  const std::size_t n_atoms = P.mu.size();
  const FieldModes fm = field_modes(P, model, s);
  const ModeMap f = probe_modes(phi);

  // complex coefficients of L(phi) per target atom, mode index m + offset
  const int out_max = m_max + std::max(fm.pmax, 1);
  const int width = 2 * out_max + 1;
  std::vector<std::vector<Complex>> z(n_atoms, std::vector<Complex>(width, Complex{0.0, 0.0}));
  auto add = [&](std::size_t atom, int m, Complex c) { z[atom][m + out_max] += c; };

  const bool sine = is_sine(model);
  const auto* four = std::get_if<FourierInteraction>(&model);
  const double K = sine ? sine_coupling(model) : 0.0;

  for (std::size_t a = 0; a < n_atoms; ++a) {
    if (phi.atom != -1 && static_cast<int>(a) != phi.atom) continue;

    for (const auto& [m, c] : f) {
      // diffusion: (1/2) phi'' stays in mode m
      add(a, m, -0.5 * static_cast<double>(m) * m * c);
      if (m == 0) continue;
      const Complex dc = Complex{0.0, static_cast<double>(m)} * c;  // phi' coefficient
      // transport: phi' (b[., P_s] + c(., omega_a)) couples m -> m + p
      for (const auto& [p, vp] : fm.v[a]) add(a, m + p, dc * vp);
      // nonlocal term <P_s, phi' b(., y, pi)>: lands on every atom
      if (sine) {
        const Complex mom_minus = P.atom_exp_moment(s, static_cast<int>(a), m - 1);
        const Complex mom_plus = P.atom_exp_moment(s, static_cast<int>(a), m + 1);
        const double w = P.mu.atoms[a].weight;
        const Complex plus_coeff = 0.5 * K * static_cast<double>(m) * c * w * mom_minus;
        const Complex minus_coeff = -0.5 * K * static_cast<double>(m) * c * w * mom_plus;
        for (std::size_t b = 0; b < n_atoms; ++b) {
          add(b, 1, plus_coeff);
          add(b, -1, minus_coeff);
        }
      } else {
        const double w = P.mu.atoms[a].weight;
        for (std::size_t b = 0; b < n_atoms; ++b) {
          const int fb = four->atom_index(P.mu.atoms[b].omega);
          for (int q = -four->modes; q <= four->modes; ++q) {
            Complex acc{0.0, 0.0};
            for (int p = -four->modes; p <= four->modes; ++p)
              acc += four->b_coeff(fb, p, q) *
                     P.atom_exp_moment(s, static_cast<int>(a), m + p);
            add(b, q, dc * w * acc);
          }
        }
      }
    }
  }

  LsExpansion out;
  out.coeffs.assign(basis.size(), 0.0);
  auto deposit = [&](Trig trig, int mode, int atom, double value) {
    if (value == 0.0) return;
    const int idx = basis.index_of(trig, mode, atom);
    if (idx >= 0) {
      out.coeffs[static_cast<std::size_t>(idx)] += value;
      out.kept += std::fabs(value);
    } else {
      out.dropped += std::fabs(value);
    }
  };
  for (std::size_t b = 0; b < n_atoms; ++b) {
    for (int m = 0; m <= out_max; ++m) {
      const Complex zm = z[b][m + out_max];
      if (m == 0) {
        deposit(Trig::one, 0, static_cast<int>(b), zm.real());
        continue;
      }
      // z_m e^{imy} + conj pair -> 2 Re cos - 2 Im sin
      deposit(Trig::cos, m, static_cast<int>(b), 2.0 * zm.real());
      deposit(Trig::sin, m, static_cast<int>(b), -2.0 * zm.imag());
    }
  }
  return out;
}

namespace {

struct StepOperator {
  Eigen::MatrixXd a;     // dm = A m dt + noise
  Eigen::MatrixXd chol;  // lower factor of <P_s, phi_i' phi_j'>
  double dropped = 0.0;
  double kept = 0.0;
};

StepOperator assemble_step(const MeanFieldSolution& P, const InteractionModel& model,
                           const ProbeBasis& basis, double s) {
  const std::size_t n = basis.size();
  StepOperator op;
  op.a.resize(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const LsExpansion e = apply_Ls(basis.probes[i], P, s, model, basis);
    for (std::size_t j = 0; j < n; ++j) op.a(i, j) = e.coeffs[j];
    op.dropped += e.dropped;
    op.kept += e.kept;
  }
  Eigen::MatrixXd q(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      q(i, j) = q(j, i) = w_integrand(basis.probes[i], basis.probes[j], P, s);
  op.chol = psd_cholesky(q);
  return op;
}

}  // namespace

std::vector<OuTrace> simulate_ou_batch(const MeanFieldSolution& P, const InteractionModel& model,
                                       const DisorderLaw& mu, const InitialLaw& lambda,
                                       const ProbeBasis& basis, double T, double dt,
                                       const std::vector<OuSeeds>& seeds, const OuOptions& opt) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_ou: dt must be positive");
  if (T > P.horizon() + 1e-9)
    throw std::invalid_argument("simulate_ou: mean-field horizon shorter than T");
  const long long steps = std::llround(T / dt);
  if (std::fabs(steps * dt - T) > 1e-9 * std::max(1.0, T))
    throw std::invalid_argument("simulate_ou: T/dt is not an integer step count");

  const std::size_t n = basis.size();
  std::vector<int> rec = opt.record_probes;
  if (rec.empty())
    for (std::size_t i = 0; i < n; ++i) rec.push_back(static_cast<int>(i));

  const std::size_t n_rep = seeds.size();
  std::vector<OuTrace> traces(n_rep);
  std::vector<Eigen::VectorXd> m(n_rep), w(n_rep);
  std::vector<std::uint64_t> wkeys(n_rep);
  for (std::size_t r = 0; r < n_rep; ++r) {
    const X0Sample x0 = sample_X0(mu, lambda, basis, seeds[r].disorder_seed, seeds[r].noise_seed);
    m[r] = Eigen::Map<const Eigen::VectorXd>(x0.x.data(), static_cast<Eigen::Index>(n));
    w[r] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    wkeys[r] = rng::derive(seeds[r].noise_seed, rng::Stream::ou_noise, 2);
    traces[r].probe_indices = rec;
    traces[r].x0 = x0.x;
    traces[r].c0 = x0.c_component;
    traces[r].values.resize(rec.size());
    traces[r].w_values.resize(rec.size());
  }

  auto record = [&](double t) {
    for (std::size_t r = 0; r < n_rep; ++r) {
      traces[r].times.push_back(t);
      for (std::size_t p = 0; p < rec.size(); ++p) {
        traces[r].values[p].push_back(m[r][rec[p]]);
        traces[r].w_values[p].push_back(w[r][rec[p]]);
      }
    }
  };
  record(0.0);

  double dropped = 0.0, kept = 0.0;
  const double sdt = std::sqrt(dt);
  Eigen::VectorXd xi(static_cast<Eigen::Index>(n));
  for (long long step = 0; step < steps; ++step) {
    const double s = step * dt;
    const StepOperator op = assemble_step(P, model, basis, s);
    dropped += op.dropped;
    kept += op.kept;
    const double frac = dropped / std::max(1e-300, dropped + kept);
    if (frac > opt.max_leak_fraction) {
      std::ostringstream os;
      os << "simulate_ou: cumulative truncation leakage " << frac << " exceeds "
         << opt.max_leak_fraction << " at t=" << s << "; raise M_probe or max_leak_fraction";
      throw std::runtime_error(os.str());
    }
    for (std::size_t r = 0; r < n_rep; ++r) {
      const std::uint64_t base = static_cast<std::uint64_t>(step) * n;
      for (std::size_t j = 0; j < n; ++j)
        xi[static_cast<Eigen::Index>(j)] = rng::gaussian(wkeys[r], base + j);
      const Eigen::VectorXd dw = sdt * (op.chol * xi);
      m[r] += dt * (op.a * m[r]) + dw;
      w[r] += dw;
    }
    if ((step + 1) % opt.record_stride == 0 || step + 1 == steps) record((step + 1) * dt);
  }

  const double frac = dropped / std::max(1e-300, dropped + kept);
  for (auto& t : traces) t.leak_fraction = frac;
  return traces;
}

OuTrace simulate_ou(const MeanFieldSolution& P, const InteractionModel& model,
                    const DisorderLaw& mu, const InitialLaw& lambda, const ProbeBasis& basis,
                    double T, double dt, OuSeeds seeds, const OuOptions& opt) {
  return simulate_ou_batch(P, model, mu, lambda, basis, T, dt, {seeds}, opt).front();
}

OuCovariance ou_covariance(const MeanFieldSolution& P, const InteractionModel& model,
                           const DisorderLaw& mu, const InitialLaw& lambda,
                           const ProbeBasis& basis, double T, double dt, int record_stride) {
  if (!(dt > 0.0)) throw std::invalid_argument("ou_covariance: dt must be positive");
  const long long steps = std::llround(T / dt);
  if (std::fabs(steps * dt - T) > 1e-9 * std::max(1.0, T))
    throw std::invalid_argument("ou_covariance: T/dt is not an integer step count");
  const std::size_t n = basis.size();

  Eigen::MatrixXd sigma =
      to_eigen(gamma1_matrix(basis, lambda, mu)) + to_eigen(gamma2_matrix(basis, lambda, mu));

  OuCovariance out;
  auto record = [&](double t) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        m(i, j) = sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    out.times.push_back(t);
    out.sigma.push_back(std::move(m));
  };
  record(0.0);

  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  for (long long step = 0; step < steps; ++step) {
    const double s = step * dt;
    const std::size_t nn = basis.size();
    Eigen::MatrixXd a(nn, nn), q(nn, nn);
    for (std::size_t i = 0; i < nn; ++i) {
      const LsExpansion e = apply_Ls(basis.probes[i], P, s, model, basis);
      for (std::size_t j = 0; j < nn; ++j) a(i, j) = e.coeffs[j];
    }
    for (std::size_t i = 0; i < nn; ++i)
      for (std::size_t j = i; j < nn; ++j)
        q(i, j) = q(j, i) = w_integrand(basis.probes[i], basis.probes[j], P, s);
    const Eigen::MatrixXd prop = eye + dt * a;
    sigma = prop * sigma * prop.transpose() + dt * q;
    if ((step + 1) % record_stride == 0 || step + 1 == steps) record((step + 1) * dt);
  }
  return out;
}

OrderFluctSeries order_param_flucts(const std::vector<EmpiricalSnapshot>& snaps,
                                    const MeanFieldSolution& P) {
  if (snaps.empty()) throw std::invalid_argument("order_param_flucts: no snapshots");
  OrderFluctSeries out;
  const double sqrt_n = std::sqrt(static_cast<double>(snaps.front().size()));
  bool started = false;
  for (const auto& snap : snaps) {
    const Complex A = P.order_complex(snap.time);
    const double r_lim = std::abs(A);
    const OrderParams op = finite_order_params(snap);
    if (r_lim <= 1e-8 || op.r <= 1e-12) {
      // (H_r) fails here: clip the window
      out.clipped = true;
      if (!started) out.first_index++;
      continue;
    }
    started = true;

    double uc = 0.0, us = 0.0;
    for (const auto& a : snap.angles) {
      uc += std::cos(a.value);
      us += std::sin(a.value);
    }
    uc /= static_cast<double>(snap.size());
    us /= static_cast<double>(snap.size());
    const double pc = A.real(), ps = A.imag();
    const double eta_c = sqrt_n * (uc - pc);
    const double eta_s = sqrt_n * (us - ps);
    const double r_n = std::hypot(uc, us);

    out.times.push_back(snap.time);
    out.r_particle.push_back(r_n);
    out.r_limit.push_back(r_lim);
    out.R_def.push_back(sqrt_n * (r_n - r_lim));
    out.R_identity.push_back((eta_c * (uc + pc) + eta_s * (us + ps)) / (r_n + r_lim));

    const Complex zeta_n = Complex{uc, us} / r_n;
    const Complex zeta = A / r_lim;
    const Complex eta_e{eta_c, eta_s};
    out.Z_def.push_back(sqrt_n * (zeta_n - zeta));
    out.Z_identity.push_back((r_lim * eta_e - A * out.R_def.back()) / (r_lim * r_n));
  }
  if (out.times.empty())
    throw std::runtime_error("order_param_flucts: limit order parameter vanishes on the window");
  return out;
}

OuOrderFlucts ou_order_param_flucts(const OuTrace& trace, const ProbeBasis& basis,
                                    const DisorderLaw& mu, const MeanFieldSolution& P) {
  // locate the per-atom mode-1 probes in the recorded set
  std::vector<int> cos_pos(mu.size(), -1), sin_pos(mu.size(), -1);
  for (std::size_t p = 0; p < trace.probe_indices.size(); ++p) {
    const Probe& probe = basis.probes[static_cast<std::size_t>(trace.probe_indices[p])];
    if (probe.mode == 1 && probe.atom >= 0) {
      if (probe.trig == Trig::cos) cos_pos[static_cast<std::size_t>(probe.atom)] = static_cast<int>(p);
      if (probe.trig == Trig::sin) sin_pos[static_cast<std::size_t>(probe.atom)] = static_cast<int>(p);
    }
  }
  for (std::size_t a = 0; a < mu.size(); ++a)
    if (cos_pos[a] < 0 || sin_pos[a] < 0)
      throw std::invalid_argument(
          "ou_order_param_flucts: trace must record cos/sin mode-1 probes for every atom");

  OuOrderFlucts out;
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    const double t = trace.times[k];
    const Complex A = P.order_complex(t);
    const double r = std::abs(A);
    if (r <= 1e-8) continue;
    double eta_c = 0.0, eta_s = 0.0;
    for (std::size_t a = 0; a < mu.size(); ++a) {
      eta_c += trace.values[static_cast<std::size_t>(cos_pos[a])][k];
      eta_s += trace.values[static_cast<std::size_t>(sin_pos[a])][k];
    }
    const double R = (A.real() * eta_c + A.imag() * eta_s) / r;
    const Complex Z = (r * Complex{eta_c, eta_s} - A * R) / (r * r);
    out.times.push_back(t);
    out.R.push_back(R);
    out.Z.push_back(Z);
  }
  return out;
}

std::vector<double> particle_martingale(const SimConfig& cfg, const InteractionModel& model,
                                        const DisorderLaw& mu, const InitialLaw& lambda,
                                        const Probe& phi, std::vector<double>* times) {
  cfg.validate();
  const int steps = cfg.step_count();
  std::vector<double> increments(static_cast<std::size_t>(steps), 0.0);
  std::vector<int> atom_of;
  StepObserver obs = [&](const OscillatorEnsemble& s, std::span<const double> g, double dt) {
    if (atom_of.empty()) {
      atom_of.resize(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) atom_of[i] = mu.atom_index(s.disorder[i]);
    }
    const int n = static_cast<int>(std::llround(s.time / dt));
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (phi.atom != -1 && atom_of[i] != phi.atom) continue;
      acc += phi.eval_dx(s.angles[i].value) * g[i];
    }
    increments[static_cast<std::size_t>(n)] =
        std::sqrt(dt) * acc / std::sqrt(static_cast<double>(s.size()));
  };
  const auto snaps = simulate(cfg, model, mu, lambda, &obs);

  std::vector<double> out;
  out.reserve(snaps.size());
  if (times) times->clear();
  double running = 0.0;
  int next_step = 0;
  for (const auto& snap : snaps) {
    const int snap_step = static_cast<int>(std::llround(snap.time / cfg.dt));
    for (; next_step < snap_step; ++next_step) running += increments[static_cast<std::size_t>(next_step)];
    out.push_back(running);
    if (times) times->push_back(snap.time);
  }
  return out;
}

std::vector<double> unwrap_psi(const std::vector<double>& psi, bool strict) {
  std::vector<double> out;
  out.reserve(psi.size());
  if (psi.empty()) return out;
  out.push_back(psi.front());
  for (std::size_t i = 1; i < psi.size(); ++i) {
    double delta = psi[i] - psi[i - 1];
    while (delta > kPi) delta -= kTwoPi;
    while (delta < -kPi) delta += kTwoPi;
    if (strict && std::fabs(delta) >= kPi / 2.0)
      throw std::runtime_error("unwrap_psi: step larger than pi/2; record more densely");
    out.push_back(out.back() + delta);
  }
  return out;
}

namespace {

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

OlsFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("ols: need >= 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  OlsFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double resid = y[i] - fit.intercept - fit.slope * x[i];
      rss += resid * resid;
    }
    fit.slope_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

}  // namespace

ScalingResult scaling_study(const InteractionModel& model, const DisorderLaw& mu,
                            const InitialLaw& lambda, const std::vector<int>& n_list,
                            int n_disorder, int n_noise, double t0, double t1, double T,
                            double dt, int record_stride, std::uint64_t base_seed, int workers) {
  if (n_list.empty()) throw std::invalid_argument("scaling_study: empty N list");
  if (!(t0 < t1 && t1 <= T)) throw std::invalid_argument("scaling_study: bad window");

  ScalingResult result;
  result.per_n.resize(n_list.size());
  const std::size_t replicas = static_cast<std::size_t>(n_disorder) * n_noise;

  for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
    auto& per = result.per_n[ni];
    per.N = n_list[ni];
    per.slopes.assign(n_disorder, std::vector<double>(n_noise, 0.0));

    parallel_for(replicas, workers, [&](std::size_t idx) {
      const int d = static_cast<int>(idx) / n_noise;
      const int nn = static_cast<int>(idx) % n_noise;
      SimConfig cfg;
      cfg.N = per.N;
      cfg.T = T;
      cfg.dt = dt;
      cfg.record_stride = record_stride;
      cfg.disorder_seed = rng::derive(base_seed, rng::Stream::disorder, static_cast<std::uint64_t>(d));
      cfg.noise_seed = rng::derive(base_seed, rng::Stream::noise,
                                   (static_cast<std::uint64_t>(d) << 20) + static_cast<std::uint64_t>(nn));
      const auto snaps = simulate(cfg, model, mu, lambda);

      // psi is meaningful only in the synchronized window; the lift is
      // therefore taken over [t0, t1] alone
      std::vector<double> t_window, psi_raw;
      for (const auto& snap : snaps) {
        if (snap.time < t0 - 1e-12 || snap.time > t1 + 1e-12) continue;
        const OrderParams op = finite_order_params(snap);
        if (op.degenerate)
          throw std::runtime_error("scaling_study: degenerate psi inside the window");
        t_window.push_back(snap.time);
        psi_raw.push_back(op.psi.value);
      }
      const auto psi_window = unwrap_psi(psi_raw);
      per.slopes[static_cast<std::size_t>(d)][static_cast<std::size_t>(nn)] =
          ols(t_window, psi_window).slope;
    });

    per.disorder_mean_drift.resize(n_disorder);
    std::vector<double> abs_speed(n_disorder, 0.0);
    for (int d = 0; d < n_disorder; ++d) {
      double signed_acc = 0.0, abs_acc = 0.0;
      for (int nn = 0; nn < n_noise; ++nn) {
        signed_acc += per.slopes[d][nn];
        abs_acc += std::fabs(per.slopes[d][nn]);
      }
      per.disorder_mean_drift[d] = signed_acc / n_noise;
      abs_speed[d] = abs_acc / n_noise;
    }
    double mean = 0.0;
    for (double v : abs_speed) mean += v;
    mean /= n_disorder;
    double var = 0.0;
    for (double v : abs_speed) var += (v - mean) * (v - mean);
    var = n_disorder > 1 ? var / (n_disorder - 1) : 0.0;
    per.mean_abs_speed = mean;
    per.stderr_abs_speed = std::sqrt(var / n_disorder);
  }

  std::vector<double> lx, ly;
  for (const auto& per : result.per_n) {
    lx.push_back(std::log(static_cast<double>(per.N)));
    ly.push_back(std::log(per.mean_abs_speed));
  }
  const OlsFit fit = ols(lx, ly);
  result.slope = fit.slope;
  result.slope_stderr = fit.slope_stderr;
  return result;
}

}  // namespace kuramoto

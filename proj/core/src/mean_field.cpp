#include "kuramoto/mean_field.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kuramoto {

namespace {

constexpr double kDegenerateR = 1e-12;
constexpr double kBlowUp = 10.0;

/// Drift modes v_p(a) of b[x, P] + c(x, omega_a) for the current block.
/// Returns per-atom vectors indexed p = -pmax..pmax.
struct DriftModes {
  int pmax = 0;
  std::vector<std::vector<Complex>> v;  // [atom][p + pmax]
  Complex at(int atom, int p) const { return v[atom][p + pmax]; }
};

Complex block_order_complex(const CoeffBlock& state, const DisorderLaw& mu) {
  // <P, e^{ix}> = sum_a w_a 2pi c_{-1}(a) with c_{-1} = conj(c_1)
  Complex acc{0.0, 0.0};
  for (std::size_t a = 0; a < mu.size(); ++a)
    acc += mu.atoms[a].weight * kTwoPi * std::conj(state[a][1]);
  return acc;
}

Complex block_exp_moment(const CoeffBlock& state, int atom, int m, int M) {
  // int e^{imx} q^a dx = 2pi c_{-m}(a)
  const int k = -m;
  if (std::abs(k) > M) return {0.0, 0.0};
  const Complex c = k >= 0 ? state[atom][k] : std::conj(state[atom][-k]);
  return kTwoPi * c;
}

DriftModes drift_modes(const CoeffBlock& state, const InteractionModel& model,
                       const DisorderLaw& mu, int M) {
  DriftModes dm;
  if (const auto* s = std::get_if<SineInteraction>(&model)) {
    dm.pmax = 1;
    const Complex A = block_order_complex(state, mu);
    const Complex half_iK{0.0, 0.5 * s->coupling};
    for (std::size_t a = 0; a < mu.size(); ++a) {
      std::vector<Complex> v(3, Complex{0.0, 0.0});
      v[0] = -half_iK * A;                       // p = -1
      v[1] = Complex{mu.atoms[a].omega, 0.0};    // p =  0
      v[2] = half_iK * std::conj(A);             // p = +1
      dm.v.push_back(std::move(v));
    }
    return dm;
  }
  const auto& f = std::get<FourierInteraction>(model);
  dm.pmax = f.modes;
  const int side = f.table_side();
  // g_p = sum_b w_b sum_q B_{p,q}(b) <q^b, e^{iqy}>, shared by all atoms
  std::vector<Complex> g(side, Complex{0.0, 0.0});
  for (std::size_t b = 0; b < mu.size(); ++b) {
    const int fb = f.atom_index(mu.atoms[b].omega);
    for (int q = -f.modes; q <= f.modes; ++q) {
      const Complex mom = mu.atoms[b].weight * block_exp_moment(state, b, q, M);
      if (mom == Complex{0.0, 0.0}) continue;
      for (int p = -f.modes; p <= f.modes; ++p) g[p + f.modes] += f.b_coeff(fb, p, q) * mom;
    }
  }
  for (std::size_t a = 0; a < mu.size(); ++a) {
    const int fa = f.atom_index(mu.atoms[a].omega);
    std::vector<Complex> v(side);
    for (int p = -f.modes; p <= f.modes; ++p) v[p + f.modes] = g[p + f.modes] + f.c_coeff(fa, p);
    dm.v.push_back(std::move(v));
  }
  return dm;
}

}  // namespace

double MeanFieldSolution::grid_step() const {
  if (times.size() < 2) return 0.0;
  return times[1] - times[0];
}

Complex MeanFieldSolution::mode(std::size_t t_index, int atom, int k) const {
  if (std::abs(k) > M) return {0.0, 0.0};
  const auto& c = coeffs[t_index][atom];
  return k >= 0 ? c[k] : std::conj(c[-k]);
}

std::size_t MeanFieldSolution::time_index(double t) const {
  const double tol = 1e-9 * std::max(1.0, std::fabs(horizon()));
  if (t < times.front() - tol || t > times.back() + tol)
    throw std::invalid_argument("MeanFieldSolution: time outside grid");
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  std::size_t i = static_cast<std::size_t>(it - times.begin());
  if (i == times.size()) --i;
  if (i > 0 && std::fabs(times[i - 1] - t) < std::fabs(times[i] - t)) --i;
  return i;
}

Complex MeanFieldSolution::mode_at(double t, int atom, int k) const {
  const double tol = 1e-9 * std::max(1.0, std::fabs(horizon()));
  if (t < times.front() - tol || t > times.back() + tol)
    throw std::invalid_argument("MeanFieldSolution: time outside grid");
  if (times.size() == 1) return mode(0, atom, k);
  auto hi = std::upper_bound(times.begin(), times.end(), t);
  if (hi == times.begin()) ++hi;
  if (hi == times.end()) --hi;
  const std::size_t i1 = static_cast<std::size_t>(hi - times.begin());
  const std::size_t i0 = i1 - 1;
  const double h = times[i1] - times[i0];
  double alpha = h > 0.0 ? (t - times[i0]) / h : 0.0;
  alpha = std::clamp(alpha, 0.0, 1.0);
  return (1.0 - alpha) * mode(i0, atom, k) + alpha * mode(i1, atom, k);
}

Complex MeanFieldSolution::order_complex(double t) const {
  Complex acc{0.0, 0.0};
  for (std::size_t a = 0; a < mu.size(); ++a)
    acc += mu.atoms[a].weight * kTwoPi * mode_at(t, static_cast<int>(a), -1);
  return acc;
}

Complex MeanFieldSolution::atom_exp_moment(double t, int atom, int m) const {
  return kTwoPi * mode_at(t, atom, -m);
}

std::vector<double> MeanFieldSolution::density_grid(std::size_t t_index, int atom, int n) const {
  std::vector<double> q(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double x = i * kTwoPi / n;
    double acc = mode(t_index, atom, 0).real();
    for (int k = 1; k <= M; ++k) {
      const Complex c = mode(t_index, atom, k);
      acc += 2.0 * (c.real() * std::cos(k * x) - c.imag() * std::sin(k * x));
    }
    q[i] = acc;
  }
  return q;
}

MeanFieldSolution initial_solution(const InitialLaw& lambda, const DisorderLaw& mu, int M) {
  mu.validate();
  MeanFieldSolution sol;
  sol.mu = mu;
  sol.M = M;
  sol.times = {0.0};
  const auto modes = lambda.density_modes(M);
  CoeffBlock block;
  for (std::size_t a = 0; a < mu.size(); ++a) block.push_back(modes);
  sol.coeffs.push_back(std::move(block));
  if (lambda.kind == InitialLaw::Kind::VonMisesLike && M >= 1) {
    const double tail = std::abs(modes[M]) * kTwoPi;
    if (tail > 1e-12) {
      std::ostringstream os;
      os << "initial law truncated at M=" << M << " (tail coefficient " << tail << ")";
      sol.warnings.push_back(os.str());
    }
  }
  return sol;
}

CoeffBlock mv_rhs(const CoeffBlock& state, const InteractionModel& model, const DisorderLaw& mu) {
  const int M = static_cast<int>(state.at(0).size()) - 1;
  if (M < 2) throw std::invalid_argument("mv_rhs: truncation must be >= 2");
  const DriftModes vm = drift_modes(state, model, mu, M);

  auto coeff = [&](std::size_t a, int k) -> Complex {
    if (std::abs(k) > M) return {0.0, 0.0};
    return k >= 0 ? state[a][k] : std::conj(state[a][-k]);
  };

  CoeffBlock out(state.size());
  for (std::size_t a = 0; a < state.size(); ++a) {
    out[a].assign(static_cast<std::size_t>(M) + 1, Complex{0.0, 0.0});
    for (int k = 1; k <= M; ++k) {
      Complex conv{0.0, 0.0};
      for (int p = -vm.pmax; p <= vm.pmax; ++p) conv += vm.at(static_cast<int>(a), p) * coeff(a, k - p);
      out[a][k] = -0.5 * static_cast<double>(k) * static_cast<double>(k) * state[a][k] -
                  Complex{0.0, static_cast<double>(k)} * conv;
    }
    // k = 0 pinned: mass is conserved exactly
  }
  return out;
}

MeanFieldSolution solve_mv(const InteractionModel& model, const DisorderLaw& mu,
                           const InitialLaw& lambda, double T, const MvOptions& opt) {
  mu.validate();
  if (opt.M < 2) throw std::invalid_argument("solve_mv: M must be >= 2");
  if (!(opt.dt > 0.0)) throw std::invalid_argument("solve_mv: dt must be positive");
  if (opt.dt * opt.M * opt.M / 2.0 >= 2.5)
    throw std::invalid_argument("solve_mv: dt*M^2/2 >= 2.5 (explicit scheme unstable)");
  if (T < 0.0) throw std::invalid_argument("solve_mv: negative horizon");

  const long long steps = std::llround(T / opt.dt);
  if (std::fabs(steps * opt.dt - T) > 1e-9 * std::max(1.0, T))
    throw std::invalid_argument("solve_mv: T/dt is not an integer step count");
  int stride = opt.store_stride;
  if (stride <= 0) stride = std::max(1, static_cast<int>(std::floor(1e-2 / opt.dt + 1e-12)));

  MeanFieldSolution sol = initial_solution(lambda, mu, opt.M);

  CoeffBlock y = sol.coeffs[0];
  auto check = [&](const CoeffBlock& block, double t) {
    for (std::size_t a = 0; a < block.size(); ++a)
      for (int k = 0; k <= opt.M; ++k)
        if (!(std::abs(block[a][k]) <= kBlowUp)) {
          std::ostringstream os;
          os << "solve_mv: |c_" << k << "| blow-up at t=" << t << " atom=" << a;
          throw std::runtime_error(os.str());
        }
  };

  auto axpy = [&](const CoeffBlock& base, const CoeffBlock& d, double s) {
    CoeffBlock r = base;
    for (std::size_t a = 0; a < r.size(); ++a)
      for (std::size_t k = 0; k < r[a].size(); ++k) r[a][k] += s * d[a][k];
    return r;
  };

  for (long long n = 0; n < steps; ++n) {
    const CoeffBlock k1 = mv_rhs(y, model, mu);
    const CoeffBlock k2 = mv_rhs(axpy(y, k1, 0.5 * opt.dt), model, mu);
    const CoeffBlock k3 = mv_rhs(axpy(y, k2, 0.5 * opt.dt), model, mu);
    const CoeffBlock k4 = mv_rhs(axpy(y, k3, opt.dt), model, mu);
    for (std::size_t a = 0; a < y.size(); ++a)
      for (std::size_t k = 1; k < y[a].size(); ++k)
        y[a][k] += opt.dt / 6.0 *
                   (k1[a][k] + 2.0 * k2[a][k] + 2.0 * k3[a][k] + k4[a][k]);
    const double t = (n + 1) * opt.dt;
    if ((n + 1) % stride == 0 || n + 1 == steps) {
      check(y, t);
      sol.times.push_back(t);
      sol.coeffs.push_back(y);
    }
  }
  return sol;
}

OrderParams limit_order_params(const MeanFieldSolution& P, double t) {
  const Complex A = P.order_complex(t);
  OrderParams op;
  op.r = std::abs(A);
  if (op.r < kDegenerateR) {
    op.degenerate = true;
    op.psi = Angle(0.0);
    op.r = std::abs(A);
  } else {
    op.psi = Angle(std::arg(A));
  }
  return op;
}

namespace {

/// Fourier coefficients h_m, m = 0..mmax, of H(u) = e^{-a cos u} (real, even).
std::vector<double> kernel_modes(double a, int mmax) {
  const int n = 2048;
  std::vector<double> h(static_cast<std::size_t>(mmax) + 1, 0.0);
  for (int l = 0; l < n; ++l) {
    const double u = l * kTwoPi / n;
    const double H = std::exp(-a * std::cos(u));
    // cos(m u) by Chebyshev recurrence
    double cm1 = 1.0, cm = std::cos(u);
    h[0] += H;
    if (mmax >= 1) h[1] += H * cm;
    const double c1 = std::cos(u);
    for (int m = 2; m <= mmax; ++m) {
      const double c = 2.0 * c1 * cm - cm1;
      cm1 = cm;
      cm = c;
      h[m] += H * c;
    }
  }
  for (auto& v : h) v /= n;
  return h;
}

}  // namespace

StationaryProfile stationary_profile(double omega, double r, Angle psi,
                                     const InteractionModel& model, int n_grid) {
  const double K = sine_coupling(model);
  if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("stationary_profile: r outside [0,1]");
  if (!std::isfinite(omega)) throw std::invalid_argument("stationary_profile: non-finite omega");
  if (std::fabs(omega) > 50.0)
    throw std::invalid_argument("stationary_profile: |omega| too large for this solver");
  if (n_grid < 8) throw std::invalid_argument("stationary_profile: grid too small");

  // Integrating factor U(x) = a(cos(psi-x) - cos psi) + 2 omega x, a = 2Kr.
  // The unique periodic positive solution is q(x) ~ e^{U(x)} S(psi - x) with
  //   S(theta) = sum_m h_m e^{im theta} / (2 omega + i m),
  // h_m the Fourier modes of e^{-a cos}; the overall flux-fixing constant
  // cancels after normalization. omega = 0 degenerates to q ~ e^{a cos}.
  const double a = 2.0 * K * r;
  const int mmax = std::max(48, static_cast<int>(std::ceil(3.0 * a)) + 16);
  StationaryProfile out;
  out.grid.resize(n_grid);
  out.density.resize(n_grid);
  for (int i = 0; i < n_grid; ++i) out.grid[i] = i * kTwoPi / n_grid;

  auto unnormalized = [&](double x) -> double {
    const double theta = psi.value - x;
    if (std::fabs(omega) < 1e-14) return std::exp(a * std::cos(theta));
    static thread_local struct {
      double a = -1.0;
      int mmax = -1;
      std::vector<double> h;
    } cache;
    if (cache.a != a || cache.mmax != mmax) {
      cache.h = kernel_modes(a, mmax);
      cache.a = a;
      cache.mmax = mmax;
    }
    const auto& h = cache.h;
    double s = h[0] / (2.0 * omega);
    for (int m = 1; m <= mmax; ++m) {
      // h_m [ e^{im theta}/(2w+im) + e^{-im theta}/(2w-im) ]
      const double den = 4.0 * omega * omega + static_cast<double>(m) * m;
      s += 2.0 * h[m] *
           (2.0 * omega * std::cos(m * theta) + m * std::sin(m * theta)) / den;
    }
    return std::exp(a * std::cos(theta)) * s;
  };

  double mass = 0.0;
  for (int i = 0; i < n_grid; ++i) {
    out.density[i] = unnormalized(out.grid[i]);
    mass += out.density[i];
  }
  mass *= kTwoPi / n_grid;  // trapezoid on a periodic grid
  if (!(std::fabs(mass) > 0.0))
    throw std::runtime_error("stationary_profile: degenerate normalization");
  for (auto& v : out.density) v /= mass;

  out.periodicity_residual = std::fabs(unnormalized(0.0) - unnormalized(kTwoPi)) / std::fabs(mass);
  // Normalized probability current: J = J_unnormalized / Z with the common
  // flux factor cancelled, leaving 1/(2Z).
  out.flux = std::fabs(omega) < 1e-14 ? 0.0 : 1.0 / (2.0 * mass);

  for (double v : out.density)
    if (v < -1e-12) throw std::runtime_error("stationary_profile: negative density");
  return out;
}

double psi_map(double K, const DisorderLaw& mu, double r) {
  mu.validate();
  if (!mu.symmetric(1e-9))
    throw std::invalid_argument("psi_map: disorder law must be symmetric");
  if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("psi_map: r outside [0,1]");
  const InteractionModel model = SineInteraction{K};
  const int n = 512;
  double acc = 0.0;
  for (const auto& atom : mu.atoms) {
    const auto prof = stationary_profile(atom.omega, r, Angle(0.0), model, n);
    double m = 0.0;
    for (int i = 0; i < n; ++i) m += std::cos(prof.grid[i]) * prof.density[i];
    acc += atom.weight * m * kTwoPi / n;
  }
  return acc;
}

FixedPointReport find_fixed_points(double K, const DisorderLaw& mu) {
  FixedPointReport report;
  report.K = K;

  auto g = [&](double r) { return psi_map(K, mu, r) - r; };

  const int n_scan = 200;
  report.map_samples.reserve(n_scan + 1);
  std::vector<double> rs(n_scan + 1), gs(n_scan + 1);
  for (int i = 0; i <= n_scan; ++i) {
    rs[i] = static_cast<double>(i) / n_scan;
    const double psi_r = psi_map(K, mu, rs[i]);
    gs[i] = psi_r - rs[i];
    report.map_samples.emplace_back(rs[i], psi_r);
  }

  const double fd_h = 1e-5;
  auto classify = [&](double r) {
    double slope;
    if (r < fd_h)
      slope = (psi_map(K, mu, r + fd_h) - psi_map(K, mu, r)) / fd_h;
    else if (r > 1.0 - fd_h)
      slope = (psi_map(K, mu, r) - psi_map(K, mu, r - fd_h)) / fd_h;
    else
      slope = (psi_map(K, mu, r + fd_h) - psi_map(K, mu, r - fd_h)) / (2.0 * fd_h);
    const double gap = slope - 1.0;
    if (std::fabs(gap) < 1e-5) return Stability::marginal;
    return gap < 0.0 ? Stability::stable : Stability::unstable;
  };

  report.roots.push_back({0.0, classify(0.0)});  // Psi(0) = 0 always

  for (int i = 0; i < n_scan; ++i) {
    if (rs[i] == 0.0 && std::fabs(gs[i]) < 1e-14) continue;  // the trivial root
    if (gs[i] == 0.0) {
      report.roots.push_back({rs[i], classify(rs[i])});
      continue;
    }
    if (gs[i] * gs[i + 1] < 0.0) {
      double lo = rs[i], hi = rs[i + 1];
      double glo = gs[i];
      while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (gm == 0.0) {
          lo = hi = mid;
          break;
        }
        if (glo * gm < 0.0) {
          hi = mid;
        } else {
          lo = mid;
          glo = gm;
        }
      }
      const double root = 0.5 * (lo + hi);
      if (root > 1e-8) report.roots.push_back({root, classify(root)});
    }
  }
  return report;
}

double linearize_uniform(double K, const DisorderLaw& mu) {
  mu.validate();
  const std::size_t n = mu.size();
  Eigen::MatrixXcd m(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      Complex v = 0.5 * K * mu.atoms[b].weight;
      if (a == b) v += Complex{-0.5, -mu.atoms[a].omega};
      m(a, b) = v;
    }
  const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(m, /*computeEigenvectors=*/false);
  double lead = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
    lead = std::max(lead, solver.eigenvalues()[i].real());
  return lead;
}

double critical_coupling(const DisorderLaw& mu, double k_max) {
  double lo = 0.0, hi = k_max;
  if (linearize_uniform(lo, mu) >= 0.0)
    throw std::invalid_argument("critical_coupling: uniform state already unstable at K=0");
  if (linearize_uniform(hi, mu) < 0.0)
    throw std::invalid_argument("critical_coupling: no instability up to k_max");
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    (linearize_uniform(mid, mu) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace kuramoto

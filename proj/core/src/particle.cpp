#include "kuramoto/particle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kuramoto/rng.hpp"

namespace kuramoto {

namespace {

/// Shared scratch for the stepping loop; avoids per-step allocation.
struct Scratch {
  std::vector<double> drift;
  std::vector<double> predictor_drift;
  std::vector<Angle> predictor;
};

void drift_into(const OscillatorEnsemble& s, const InteractionModel& model,
                std::vector<double>& out) {
  const std::size_t n = s.size();
  out.resize(n);
  if (const auto* sine = std::get_if<SineInteraction>(&model)) {
    // b[x_i, nu^N] = K Im(e^{-ix_i} A), A = (1/N) sum_j e^{ix_j}: O(N) total.
    double re = 0.0, im = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      re += std::cos(s.angles[j].value);
      im += std::sin(s.angles[j].value);
    }
    re /= static_cast<double>(n);
    im /= static_cast<double>(n);
    const double K = sine->coupling;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = s.angles[i].value;
      out[i] = K * (im * std::cos(x) - re * std::sin(x)) + s.disorder[i];
    }
  } else {
    const auto& f = std::get<FourierInteraction>(model);
    const int side = f.table_side();
    // per-atom empirical phase moments, then g_p = sum B_{p,q} moments
    std::vector<Complex> g(side, Complex{0.0, 0.0});
    {
      std::vector<int> atom_of(n);
      for (std::size_t j = 0; j < n; ++j) atom_of[j] = f.atom_index(s.disorder[j]);
      std::vector<std::vector<Complex>> moments(
          f.atom_omega.size(), std::vector<Complex>(side, Complex{0.0, 0.0}));
      for (std::size_t j = 0; j < n; ++j) {
        const Complex rot = std::polar(1.0, s.angles[j].value);
        Complex e = std::polar(1.0, -f.modes * s.angles[j].value);
        for (int q = -f.modes; q <= f.modes; ++q) {
          moments[atom_of[j]][q + f.modes] += e;
          e *= rot;
        }
      }
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t a = 0; a < f.atom_omega.size(); ++a)
        for (int q = -f.modes; q <= f.modes; ++q) {
          const Complex m = moments[a][q + f.modes] * inv_n;
          for (int p = -f.modes; p <= f.modes; ++p) g[p + f.modes] += f.b_coeff(a, p, q) * m;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double x = s.angles[i].value;
      Complex acc{0.0, 0.0};
      for (int p = -f.modes; p <= f.modes; ++p) acc += g[p + f.modes] * std::polar(1.0, p * x);
      out[i] = acc.real() + eval_c(model, s.angles[i], s.disorder[i]);
    }
  }
  for (double d : out)
    if (!std::isfinite(d)) throw std::runtime_error("ensemble drift is non-finite");
}

void em_step_in_place(OscillatorEnsemble& s, const InteractionModel& model, double dt,
                      std::span<const double> g, Scratch& scratch) {
  drift_into(s, model, scratch.drift);
  const double sdt = std::sqrt(dt);
  for (std::size_t i = 0; i < s.size(); ++i)
    s.angles[i] = Angle(s.angles[i].value + scratch.drift[i] * dt + sdt * g[i]);
  s.time += dt;
}

void heun_step_in_place(OscillatorEnsemble& s, const InteractionModel& model, double dt,
                        std::span<const double> g, Scratch& scratch) {
  // predictor-corrector on the drift; the (additive) noise enters once
  drift_into(s, model, scratch.drift);
  const double sdt = std::sqrt(dt);
  scratch.predictor.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    scratch.predictor[i] = Angle(s.angles[i].value + scratch.drift[i] * dt + sdt * g[i]);
  OscillatorEnsemble pred{std::move(scratch.predictor), s.disorder, s.time + dt};
  drift_into(pred, model, scratch.predictor_drift);
  scratch.predictor = std::move(pred.angles);
  for (std::size_t i = 0; i < s.size(); ++i)
    s.angles[i] = Angle(s.angles[i].value +
                        0.5 * (scratch.drift[i] + scratch.predictor_drift[i]) * dt + sdt * g[i]);
  s.time += dt;
}

}  // namespace

int SimConfig::step_count() const {
  const long long steps = std::llround(T / dt);
  return static_cast<int>(steps);
}

void SimConfig::validate() const {
  if (N < 1) throw std::invalid_argument("SimConfig: N must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("SimConfig: dt must be positive");
  if (T < 0.0) throw std::invalid_argument("SimConfig: negative horizon");
  if (dt > T && T > 0.0) throw std::invalid_argument("SimConfig: dt exceeds horizon");
  if (record_stride < 1) throw std::invalid_argument("SimConfig: record_stride must be >= 1");
  const long long steps = std::llround(T / dt);
  if (std::fabs(steps * dt - T) > 1e-9 * std::max(1.0, T))
    throw std::invalid_argument("SimConfig: T/dt is not an integer step count");
}

WeightedMeasure EmpiricalSnapshot::measure() const {
  WeightedMeasure m;
  const double w = 1.0 / static_cast<double>(size());
  m.angle.reserve(size());
  m.omega.reserve(size());
  m.weight.assign(size(), w);
  for (std::size_t i = 0; i < size(); ++i) {
    m.angle.push_back(angles[i].value);
    m.omega.push_back(disorder[i]);
  }
  return m;
}

std::vector<double> sample_disorder(const DisorderLaw& mu, int N, std::uint64_t disorder_seed) {
  mu.validate();
  if (N < 1) throw std::invalid_argument("sample_disorder: N must be >= 1");
  const std::uint64_t key = rng::derive(disorder_seed, rng::Stream::disorder);
  std::vector<double> out(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    const double u = rng::uniform(key, static_cast<std::uint64_t>(i));
    double acc = 0.0;
    double value = mu.atoms.back().omega;
    for (const auto& atom : mu.atoms) {
      acc += atom.weight;
      if (u <= acc) {
        value = atom.omega;
        break;
      }
    }
    out[static_cast<std::size_t>(i)] = value;
  }
  return out;
}

std::vector<Angle> sample_initial(const InitialLaw& lambda, int N, std::uint64_t noise_seed) {
  if (N < 1) throw std::invalid_argument("sample_initial: N must be >= 1");
  const std::uint64_t key = rng::derive(noise_seed, rng::Stream::init);
  std::vector<Angle> out(static_cast<std::size_t>(N));
  switch (lambda.kind) {
    case InitialLaw::Kind::UniformCircle:
      for (int i = 0; i < N; ++i)
        out[i] = Angle(kTwoPi * rng::uniform(key, static_cast<std::uint64_t>(i)));
      break;
    case InitialLaw::Kind::AtomAt:
      std::fill(out.begin(), out.end(), lambda.center);
      break;
    case InitialLaw::Kind::VonMisesLike: {
      // inverse-CDF on a fine grid (deterministic, no rejection)
      const int n = 4096;
      std::vector<double> cdf(n + 1, 0.0);
      std::vector<double> dens(n);
      double mass = 0.0;
      for (int i = 0; i < n; ++i) {
        dens[i] = std::exp(lambda.concentration *
                           (std::cos(i * kTwoPi / n - lambda.center.value) - 1.0));
        mass += dens[i];
      }
      for (int i = 0; i < n; ++i) cdf[i + 1] = cdf[i] + dens[i] / mass;
      cdf[n] = 1.0;
      for (int i = 0; i < N; ++i) {
        const double u = rng::uniform(key, static_cast<std::uint64_t>(i));
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const std::size_t hi = std::min<std::size_t>(it - cdf.begin(), n);
        const std::size_t lo = hi - 1;
        const double span = cdf[hi] - cdf[lo];
        const double frac = span > 0.0 ? (u - cdf[lo]) / span : 0.0;
        out[i] = Angle((static_cast<double>(lo) + frac) * kTwoPi / n);
      }
      break;
    }
  }
  return out;
}

std::vector<double> ensemble_drift(const OscillatorEnsemble& state,
                                   const InteractionModel& model) {
  std::vector<double> out;
  drift_into(state, model, out);
  return out;
}

OscillatorEnsemble step(const OscillatorEnsemble& state, const InteractionModel& model,
                        double dt, std::span<const double> gaussians) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  if (gaussians.size() != state.size())
    throw std::invalid_argument("step: gaussian count != particle count");
  OscillatorEnsemble next = state;
  Scratch scratch;
  em_step_in_place(next, model, dt, gaussians, scratch);
  return next;
}

OrderParams finite_order_params(const EmpiricalSnapshot& snap) {
  OscillatorEnsemble tmp{snap.angles, snap.disorder, snap.time};
  return finite_order_params(tmp);
}

OrderParams finite_order_params(const OscillatorEnsemble& state) {
  if (state.size() == 0) throw std::invalid_argument("finite_order_params: empty ensemble");
  double re = 0.0, im = 0.0;
  for (const Angle& a : state.angles) {
    re += std::cos(a.value);
    im += std::sin(a.value);
  }
  re /= static_cast<double>(state.size());
  im /= static_cast<double>(state.size());
  OrderParams op;
  op.r = std::hypot(re, im);
  if (op.r < 1e-12) {
    op.degenerate = true;
    op.psi = Angle(0.0);
  } else {
    op.psi = Angle(std::atan2(im, re));
  }
  return op;
}

std::vector<EmpiricalSnapshot> simulate_from(OscillatorEnsemble state, const SimConfig& cfg,
                                             const InteractionModel& model,
                                             const StepObserver* observer) {
  cfg.validate();
  if (state.size() != static_cast<std::size_t>(cfg.N))
    throw std::invalid_argument("simulate_from: state size != cfg.N");
  const int steps = cfg.step_count();
  std::vector<EmpiricalSnapshot> out;
  out.reserve(static_cast<std::size_t>(steps / cfg.record_stride) + 2);
  auto record = [&] { out.push_back({state.time, state.angles, state.disorder}); };
  record();

  const std::uint64_t dyn = rng::derive(cfg.noise_seed, rng::Stream::dynamics);
  std::vector<std::uint64_t> keys(state.size());
  for (std::size_t i = 0; i < state.size(); ++i)
    keys[i] = rng::derive(dyn, rng::Stream::dynamics, i);

  Scratch scratch;
  std::vector<double> g(state.size());
  const double t0 = state.time;
  for (int n = 0; n < steps; ++n) {
    for (std::size_t i = 0; i < state.size(); ++i)
      g[i] = rng::gaussian(keys[i], static_cast<std::uint64_t>(n));
    if (observer) (*observer)(state, g, cfg.dt);
    if (cfg.scheme == Scheme::EulerMaruyama)
      em_step_in_place(state, model, cfg.dt, g, scratch);
    else
      heun_step_in_place(state, model, cfg.dt, g, scratch);
    state.time = t0 + (n + 1) * cfg.dt;  // keep grid times drift-free
    if ((n + 1) % cfg.record_stride == 0 || n + 1 == steps) record();
  }
  return out;
}

std::vector<EmpiricalSnapshot> simulate(const SimConfig& cfg, const InteractionModel& model,
                                        const DisorderLaw& mu, const InitialLaw& lambda,
                                        const StepObserver* observer) {
  cfg.validate();
  OscillatorEnsemble state;
  state.disorder = sample_disorder(mu, cfg.N, cfg.disorder_seed);
  state.angles = sample_initial(lambda, cfg.N, cfg.noise_seed);
  state.time = 0.0;
  return simulate_from(std::move(state), cfg, model, observer);
}

CouplingResult simulate_coupled(const SimConfig& cfg, const InteractionModel& model,
                                const DisorderLaw& mu, const InitialLaw& lambda,
                                const MeanFieldSolution& P) {
  cfg.validate();
  if (P.horizon() < cfg.T - 1e-9)
    throw std::invalid_argument("simulate_coupled: mean-field horizon shorter than T");
  if (P.times.size() > 1 && P.grid_step() > cfg.dt + 1e-12)
    throw std::invalid_argument("simulate_coupled: mean-field grid coarser than dt");

  OscillatorEnsemble particle;
  particle.disorder = sample_disorder(mu, cfg.N, cfg.disorder_seed);
  particle.angles = sample_initial(lambda, cfg.N, cfg.noise_seed);
  particle.time = 0.0;
  OscillatorEnsemble nonlinear = particle;  // same initial values, same disorder

  const std::uint64_t dyn = rng::derive(cfg.noise_seed, rng::Stream::dynamics);
  std::vector<std::uint64_t> keys(particle.size());
  for (std::size_t i = 0; i < particle.size(); ++i)
    keys[i] = rng::derive(dyn, rng::Stream::dynamics, i);

  const bool sine = is_sine(model);
  const double K = sine ? sine_coupling(model) : 0.0;

  CouplingResult res;
  res.sup_sq_gap.assign(particle.size(), 0.0);
  auto record = [&] {
    double acc = 0.0;
    for (std::size_t i = 0; i < particle.size(); ++i) {
      const double d = circle_distance(particle.angles[i], nonlinear.angles[i]);
      res.sup_sq_gap[i] = std::max(res.sup_sq_gap[i], d * d);
      acc += d * d;
    }
    res.times.push_back(particle.time);
    res.mean_sq_gap.push_back(acc / static_cast<double>(particle.size()));
  };
  record();

  Scratch scratch;
  std::vector<double> g(particle.size());
  std::vector<double> nl_drift(particle.size());
  const int steps = cfg.step_count();
  for (int n = 0; n < steps; ++n) {
    for (std::size_t i = 0; i < particle.size(); ++i)
      g[i] = rng::gaussian(keys[i], static_cast<std::uint64_t>(n));

    // nonlinear drift b[x, P_t] + c(x, omega): frozen law, O(N) for sine
    const double t = particle.time;
    if (sine) {
      const Complex A = P.order_complex(t);
      for (std::size_t i = 0; i < nonlinear.size(); ++i) {
        const double x = nonlinear.angles[i].value;
        nl_drift[i] = K * (A.imag() * std::cos(x) - A.real() * std::sin(x)) +
                      nonlinear.disorder[i];
      }
    } else {
      const auto& f = std::get<FourierInteraction>(model);
      const int side = f.table_side();
      std::vector<Complex> gp(side, Complex{0.0, 0.0});
      for (std::size_t b = 0; b < P.mu.size(); ++b) {
        const int fb = f.atom_index(P.mu.atoms[b].omega);
        for (int q = -f.modes; q <= f.modes; ++q) {
          const Complex mom =
              P.mu.atoms[b].weight * P.atom_exp_moment(t, static_cast<int>(b), q);
          for (int p = -f.modes; p <= f.modes; ++p)
            gp[p + f.modes] += f.b_coeff(fb, p, q) * mom;
        }
      }
      for (std::size_t i = 0; i < nonlinear.size(); ++i) {
        const double x = nonlinear.angles[i].value;
        Complex acc{0.0, 0.0};
        for (int p = -f.modes; p <= f.modes; ++p) acc += gp[p + f.modes] * std::polar(1.0, p * x);
        nl_drift[i] = acc.real() + eval_c(model, nonlinear.angles[i], nonlinear.disorder[i]);
      }
    }

    em_step_in_place(particle, model, cfg.dt, g, scratch);
    const double sdt = std::sqrt(cfg.dt);
    for (std::size_t i = 0; i < nonlinear.size(); ++i)
      nonlinear.angles[i] = Angle(nonlinear.angles[i].value + nl_drift[i] * cfg.dt + sdt * g[i]);
    particle.time = (n + 1) * cfg.dt;
    nonlinear.time = particle.time;

    if ((n + 1) % cfg.record_stride == 0 || n + 1 == steps) record();
  }

  double acc = 0.0;
  for (double v : res.sup_sq_gap) acc += v;
  res.mean_sup_sq_gap = acc / static_cast<double>(particle.size());
  return res;
}

}  // namespace kuramoto

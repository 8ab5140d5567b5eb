// Acceptance suite: one check per shipped guarantee, each printing a
// PASS/FAIL line with the measured quantity and its target. Exit status is
// the number of failures.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "kuramoto/experiment.hpp"
#include "kuramoto/fluctuations.hpp"
#include "kuramoto/mean_field.hpp"
#include "kuramoto/parallel.hpp"
#include "kuramoto/particle.hpp"
#include "kuramoto/rng.hpp"

using namespace kuramoto;

namespace {

int g_workers = default_workers();

struct Result {
  bool pass = false;
  std::string detail;
};

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / static_cast<double>(v.size() - 1);
}

double variance_stderr_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d2 = (x - m) * (x - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(v.size());
  m4 /= static_cast<double>(v.size());
  return std::sqrt(std::max(0.0, m4 - m2 * m2) / static_cast<double>(v.size()));
}

struct Fit {
  double slope = 0.0;
  double stderr_slope = 0.0;
};

Fit loglog_fit(const std::vector<double>& n, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < n.size(); ++i) {
    lx.push_back(std::log(n[i]));
    ly.push_back(std::log(y[i]));
  }
  const std::size_t m = lx.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  Fit fit;
  fit.slope = sxy / sxx;
  double rss = 0.0;
  const double intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = ly[i] - intercept - fit.slope * lx[i];
    rss += r * r;
  }
  if (m > 2) fit.stderr_slope = std::sqrt(rss / static_cast<double>(m - 2) / sxx);
  return fit;
}

// ---------------------------------------------------------------------------
// 1. Quenched law of large numbers: sup_t |r^N_t - r_t| decays like N^{-1/2}.
Result criterion_lln() {
  const DisorderLaw mu = DisorderLaw::symmetric_pair(1.0);
  const InteractionModel model = SineInteraction{6.0};
  const InitialLaw lambda = InitialLaw::von_mises(0.5, Angle(0.0));
  MvOptions mv;
  mv.dt = 1e-3;
  mv.M = 64;
  const double T = 6.0;
  const auto P = solve_mv(model, mu, lambda, T, mv);

  const std::vector<int> n_list{100, 200, 400, 800, 1600, 3200};
  const int nd = 25, nn = 4;
  std::vector<double> ns, errs;
  for (int N : n_list) {
    std::vector<double> sup_err(static_cast<std::size_t>(nd) * nn, 0.0);
    parallel_for(sup_err.size(), g_workers, [&](std::size_t idx) {
      SimConfig cfg;
      cfg.N = N;
      cfg.T = T;
      cfg.dt = 0.01;
      cfg.record_stride = 10;
      cfg.disorder_seed = rng::derive(1001, rng::Stream::disorder, idx / nn);
      cfg.noise_seed = rng::derive(1001, rng::Stream::noise, idx);
      const auto snaps = simulate(cfg, model, mu, lambda);
      double worst = 0.0;
      for (const auto& snap : snaps) {
        const double r_n = finite_order_params(snap).r;
        const double r_lim = limit_order_params(P, snap.time).r;
        worst = std::max(worst, std::fabs(r_n - r_lim));
      }
      sup_err[idx] = worst;
    });
    ns.push_back(static_cast<double>(N));
    errs.push_back(mean_of(sup_err));
  }
  const Fit fit = loglog_fit(ns, errs);
  std::ostringstream os;
  os << "slope=" << fit.slope << " (target -0.5 +/- 0.15), mean err N=3200: " << errs.back();
  return {std::fabs(fit.slope + 0.5) <= 0.15, os.str()};
}

// ---------------------------------------------------------------------------
// 2. Coupling to the nonlinear process: mean sup_t gap^2 decays like 1/N.
Result criterion_coupling() {
  const DisorderLaw mu = DisorderLaw::symmetric_pair(0.5);
  const InteractionModel model = SineInteraction{4.0};
  const InitialLaw lambda = InitialLaw::von_mises(0.5, Angle(0.0));
  // horizon chosen inside the clean Gronwall regime: over longer windows the
  // strongly synchronized dynamics occasionally phase-slips in one copy of a
  // coupled pair only, polluting the mean with a slower-decaying component
  const double T = 1.0;
  MvOptions mv;
  mv.dt = 1e-3;
  mv.M = 64;
  const auto P = solve_mv(model, mu, lambda, T, mv);

  const std::vector<int> n_list{50, 100, 200, 400, 800};
  const int nd = 50, nn = 4;
  std::vector<double> ns, gaps;
  for (int N : n_list) {
    std::vector<double> g(static_cast<std::size_t>(nd) * nn, 0.0);
    parallel_for(g.size(), g_workers, [&](std::size_t idx) {
      SimConfig cfg;
      cfg.N = N;
      cfg.T = T;
      cfg.dt = 0.01;
      cfg.record_stride = 1;
      cfg.disorder_seed = rng::derive(2002, rng::Stream::disorder, idx / nn);
      cfg.noise_seed = rng::derive(2002, rng::Stream::noise, idx);
      g[idx] = simulate_coupled(cfg, model, mu, lambda, P).mean_sup_sq_gap;
    });
    ns.push_back(static_cast<double>(N));
    gaps.push_back(mean_of(g));
  }
  const Fit fit = loglog_fit(ns, gaps);
  std::ostringstream os;
  os << "slope=" << fit.slope << " (target -1 +/- 0.15)";
  return {std::fabs(fit.slope + 1.0) <= 0.15, os.str()};
}

// ---------------------------------------------------------------------------
// 3. Initial-time CLT: Var <eta_0, phi> = Gamma1 + Gamma2, plus the quenched
//    decomposition of the variance across disorder samples.
Result criterion_clt_init() {
  const DisorderLaw mu = DisorderLaw::symmetric_pair(1.0);
  const int N = 10000, nd = 100, nn = 10;
  std::ostringstream os;
  bool pass = true;

  const std::vector<Probe> probes{
      {Trig::cos, 1, -1}, {Trig::sin, 1, -1}, {Trig::cos, 1, 0}, {Trig::sin, 1, 0},
      {Trig::cos, 2, 1},  {Trig::one, 0, 0},  {Trig::one, 0, 1},
  };

  for (const InitialLaw& lambda :
       {InitialLaw::uniform(), InitialLaw::von_mises(1.0, Angle(0.5))}) {
    const bool is_uniform = lambda.kind == InitialLaw::Kind::UniformCircle;
    const auto P0 = initial_solution(lambda, mu, 32);
    std::vector<std::vector<double>> vals(probes.size(),
                                          std::vector<double>(static_cast<std::size_t>(nd) * nn));
    parallel_for(static_cast<std::size_t>(nd) * nn, g_workers, [&](std::size_t idx) {
      EmpiricalSnapshot snap;
      snap.time = 0.0;
      snap.disorder = sample_disorder(mu, N, rng::derive(3003, rng::Stream::disorder, idx / nn));
      snap.angles = sample_initial(lambda, N, rng::derive(3003, rng::Stream::noise, idx));
      for (std::size_t p = 0; p < probes.size(); ++p)
        vals[p][idx] = eval_fluct(snap, P0, probes[p]);
    });

    if (is_uniform) {
      // closed-form anchor: Gamma1(cos, cos) = 1/2 with Gamma2 = 0
      const double g1 = gamma1(probes[0], probes[0], lambda, mu);
      const double g2 = gamma2(probes[0], probes[0], lambda, mu);
      if (std::fabs(g1 - 0.5) > 1e-12 || std::fabs(g2) > 1e-12) {
        pass = false;
        os << " [closed-form Gamma broken]";
      }
    }

    int var_ok = 0;
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const double predicted =
          gamma1(probes[p], probes[p], lambda, mu) + gamma2(probes[p], probes[p], lambda, mu);
      const double var = variance_of(vals[p]);
      const double se = variance_stderr_of(vals[p]);
      if (std::fabs(var - predicted) <= 3.0 * std::max(se, 1e-12)) ++var_ok;
    }
    if (var_ok != static_cast<int>(probes.size())) pass = false;
    os << (is_uniform ? "uniform" : " von-mises") << ": " << var_ok << "/" << probes.size()
       << " probes within 3se";

    // quenched decomposition: variance of init-averaged values vs Gamma2
    int dec_ok = 0, dec_tested = 0;
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const double g2 = gamma2(probes[p], probes[p], lambda, mu);
      if (g2 < 1e-9) continue;
      ++dec_tested;
      std::vector<double> means(nd, 0.0);
      for (int d = 0; d < nd; ++d) {
        double acc = 0.0;
        for (int k = 0; k < nn; ++k) acc += vals[p][static_cast<std::size_t>(d) * nn + k];
        means[d] = acc / nn;
      }
      const double g1 = gamma1(probes[p], probes[p], lambda, mu);
      const double excess = variance_of(means) - g1 / nn;
      const double se = variance_stderr_of(means);
      if (std::fabs(excess - g2) <= 3.0 * std::max(se, 1e-12)) ++dec_ok;
    }
    if (dec_tested == 0 || dec_ok != dec_tested) pass = false;
    os << ", decomposition " << dec_ok << "/" << dec_tested << ";";
  }
  return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// 4. Martingale covariance: Var M_t(sin) = t/2 in the null model.
Result criterion_martingale() {
  const DisorderLaw mu = DisorderLaw::single(0.0);
  const InteractionModel model = SineInteraction{0.0};
  const Probe phi{Trig::sin, 1, -1};
  const int reps = 2000;
  std::vector<std::vector<double>> m_at(3, std::vector<double>(reps, 0.0));
  parallel_for(reps, g_workers, [&](std::size_t r) {
    SimConfig cfg;
    cfg.N = 200;
    cfg.T = 2.0;
    cfg.dt = 0.01;
    cfg.record_stride = 50;  // recorded at 0, 0.5, 1.0, 1.5, 2.0
    cfg.noise_seed = rng::derive(4004, rng::Stream::noise, r);
    cfg.disorder_seed = rng::derive(4004, rng::Stream::disorder, r);
    std::vector<double> times;
    const auto m = particle_martingale(cfg, model, mu, InitialLaw::uniform(), phi, &times);
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (std::fabs(times[k] - 0.5) < 1e-9) m_at[0][r] = m[k];
      if (std::fabs(times[k] - 1.0) < 1e-9) m_at[1][r] = m[k];
      if (std::fabs(times[k] - 2.0) < 1e-9) m_at[2][r] = m[k];
    }
  });
  bool pass = true;
  std::ostringstream os;
  const double ts[3] = {0.5, 1.0, 2.0};
  for (int i = 0; i < 3; ++i) {
    const double var = variance_of(m_at[i]);
    const double se = variance_stderr_of(m_at[i]);
    const bool ok = std::fabs(var - ts[i] / 2.0) <= 3.0 * se;
    pass = pass && ok;
    os << "t=" << ts[i] << ": var=" << var << " vs " << ts[i] / 2.0 << "; ";
  }
  return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// 5. OU limit self-consistency: closed-form variance 1/2, basis doubling,
//    W independent of X.
Result criterion_ou() {
  const DisorderLaw mu = DisorderLaw::single(0.0);
  const InteractionModel model = SineInteraction{0.0};
  const InitialLaw lambda = InitialLaw::uniform();
  MvOptions mv;
  mv.dt = 1e-2;
  mv.M = 8;
  const double T = 1.0, dt = 5e-3;
  const auto P = solve_mv(model, mu, lambda, T, mv);
  const ProbeBasis basis = ProbeBasis::full(4, 1);

  const int reps = 10000;
  std::vector<OuSeeds> seeds(reps);
  for (int r = 0; r < reps; ++r)
    seeds[r] = {rng::derive(5005, rng::Stream::disorder, r), rng::derive(5005, rng::Stream::noise, r)};
  OuOptions opt;
  opt.record_stride = 50;
  const auto traces = simulate_ou_batch(P, model, mu, lambda, basis, T, dt, seeds, opt);

  bool pass = true;
  std::ostringstream os;
  const int pcos = basis.index_of(Trig::cos, 1, 0);
  for (std::size_t k = 1; k < traces.front().times.size(); ++k) {
    std::vector<double> vals(reps);
    for (int r = 0; r < reps; ++r) vals[r] = traces[r].values[pcos][k];
    const double var = variance_of(vals);
    const double se = variance_stderr_of(vals);
    if (std::fabs(var - 0.5) > 3.0 * se) pass = false;
    if (k == traces.front().times.size() - 1) os << "var(T)=" << var << " vs 0.5";
  }

  // W independent of X
  std::vector<double> x0(reps), wT(reps);
  for (int r = 0; r < reps; ++r) {
    x0[r] = traces[r].x0[pcos];
    wT[r] = traces[r].w_values[pcos].back();
  }
  const double mx = mean_of(x0), mw = mean_of(wT);
  double cov = 0.0;
  for (int r = 0; r < reps; ++r) cov += (x0[r] - mx) * (wT[r] - mw);
  cov /= reps - 1;
  const double corr = cov / std::sqrt(variance_of(x0) * variance_of(wT));
  os << ", corr(X,W)=" << corr;
  if (std::fabs(corr) > 3.0 / std::sqrt(static_cast<double>(reps))) pass = false;

  // basis doubling, null model (absolute) and figure regime (relative)
  {
    const auto c4 = ou_covariance(P, model, mu, lambda, ProbeBasis::full(4, 1), T, dt, 200);
    const auto c8 = ou_covariance(P, model, mu, lambda, ProbeBasis::full(8, 1), T, dt, 200);
    const int i4 = ProbeBasis::full(4, 1).index_of(Trig::cos, 1, 0);
    const int i8 = ProbeBasis::full(8, 1).index_of(Trig::cos, 1, 0);
    const double d = std::fabs(c4.sigma.back()(i4, i4) - c8.sigma.back()(i8, i8));
    os << ", null doubling diff=" << d;
    if (d >= 1e-3) pass = false;
  }
  {
    const DisorderLaw mu1 = DisorderLaw::symmetric_pair(1.0);
    const InteractionModel model1 = SineInteraction{6.0};
    const InitialLaw lambda1 = InitialLaw::von_mises(0.5, Angle(0.0));
    MvOptions mv1;
    mv1.dt = 1e-3;
    mv1.M = 64;
    const double T1 = 3.0, dt1 = 2e-3;
    const auto P1 = solve_mv(model1, mu1, lambda1, T1, mv1);
    const ProbeBasis b16 = ProbeBasis::full(16, 2);
    const ProbeBasis b32 = ProbeBasis::full(32, 2);
    const auto c16 = ou_covariance(P1, model1, mu1, lambda1, b16, T1, dt1, 1500);
    const auto c32 = ou_covariance(P1, model1, mu1, lambda1, b32, T1, dt1, 1500);
    double worst = 0.0;
    for (int a = 0; a < 2; ++a)
      for (Trig trig : {Trig::cos, Trig::sin}) {
        const int j16 = b16.index_of(trig, 1, a);
        const int j32 = b32.index_of(trig, 1, a);
        const double v16 = c16.sigma.back()(j16, j16);
        const double v32 = c32.sigma.back()(j32, j32);
        worst = std::max(worst, std::fabs(v16 - v32) / std::max(1.0, std::fabs(v32)));
      }
    os << ", figure doubling rel diff=" << worst;
    if (worst >= 1e-3) pass = false;
  }
  return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// 6. Order-parameter fluctuation identities and (H_r) positivity.
Result criterion_identities() {
  const DisorderLaw mu = DisorderLaw::symmetric_pair(1.0);
  const InteractionModel model = SineInteraction{6.0};
  const InitialLaw lambda = InitialLaw::von_mises(0.5, Angle(0.0));
  MvOptions mv;
  mv.dt = 1e-3;
  mv.M = 64;
  const auto P6 = solve_mv(model, mu, lambda, 6.0, mv);

  double worst_rel = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    SimConfig cfg;
    cfg.N = 600;
    cfg.T = 6.0;
    cfg.dt = 0.01;
    cfg.record_stride = 10;
    cfg.disorder_seed = rng::derive(6006, rng::Stream::disorder, s);
    cfg.noise_seed = rng::derive(6006, rng::Stream::noise, s);
    const auto snaps = simulate(cfg, model, mu, lambda);
    const auto series = order_param_flucts(snaps, P6);
    for (std::size_t k = 0; k < series.times.size(); ++k) {
      const double scale = std::max(1.0, std::fabs(series.R_def[k]));
      worst_rel = std::max(worst_rel, std::fabs(series.R_def[k] - series.R_identity[k]) / scale);
    }
  }

  const auto P20 = solve_mv(model, mu, lambda, 20.0, mv);
  double r0 = limit_order_params(P20, 0.0).r;
  double min_r = 1.0;
  for (double t : P20.times) min_r = std::min(min_r, limit_order_params(P20, t).r);

  std::ostringstream os;
  os << "max identity residual=" << worst_rel << " (<=1e-9), r0=" << r0
     << ", min_t r_t=" << min_r << " (>0)";
  return {worst_rel <= 1e-9 && r0 > 0.0 && min_r > 0.0, os.str()};
}

// ---------------------------------------------------------------------------
// 7. Scaling of the synchronization-center drift: speed ~ N^{-1/2},
//    symmetric in sign, not self-averaging.
Result criterion_scaling() {
  const DisorderLaw mu = DisorderLaw::symmetric_pair(0.5);
  const InteractionModel model = SineInteraction{4.0};
  const int nd = 25, nn = 4;
  const auto res = scaling_study(model, mu, InitialLaw::uniform(), {100, 200, 400, 800, 1600},
                                 nd, nn, 5.0, 15.0, 15.0, 0.01, 10, 7007, g_workers);
  bool pass = std::fabs(res.slope + 0.5) <= 0.15;
  std::ostringstream os;
  os << "slope=" << res.slope << " +/- " << res.slope_stderr << " (target -0.5 +/- 0.15)";

  // signed drift has no preferred direction (per system size)
  bool sym_ok = true;
  for (const auto& per : res.per_n) {
    const double m = mean_of(per.disorder_mean_drift);
    const double se = std::sqrt(variance_of(per.disorder_mean_drift) /
                                static_cast<double>(per.disorder_mean_drift.size()));
    if (std::fabs(m) > 3.0 * se) sym_ok = false;
  }
  os << ", signed-mean zero: " << (sym_ok ? "yes" : "NO");
  pass = pass && sym_ok;

  // non-self-averaging: between-disorder dispersion of the mean drift
  // exceeds what noise replicas alone explain (F-test at ~3 sigma)
  bool dispersed = true;
  double worst_f = 1e9;
  for (const auto& per : res.per_n) {
    const double between = variance_of(per.disorder_mean_drift);
    double within = 0.0;
    for (const auto& row : per.slopes) {
      const double rm = mean_of(row);
      for (double x : row) within += (x - rm) * (x - rm);
    }
    within /= static_cast<double>(nd * (nn - 1));
    const double f = between / (within / nn);
    worst_f = std::min(worst_f, f);
    const double f_threshold =
        1.0 + 3.0 * std::sqrt(2.0 / (nd - 1) + 2.0 / (static_cast<double>(nd) * (nn - 1)));
    if (f <= f_threshold) dispersed = false;
  }
  os << ", min F=" << worst_f;
  pass = pass && dispersed;
  return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// 8. Mean-field solver properties.
Result criterion_mv_properties() {
  std::ostringstream os;
  bool pass = true;

  // mass conservation along a synchronized trajectory
  {
    const DisorderLaw mu = DisorderLaw::symmetric_pair(1.0);
    MvOptions mv;
    mv.dt = 1e-3;
    mv.M = 64;
    const auto P =
        solve_mv(SineInteraction{6.0}, mu, InitialLaw::von_mises(0.5, Angle(0.0)), 6.0, mv);
    double worst = 0.0;
    for (std::size_t ti = 0; ti < P.times.size(); ++ti)
      for (int a = 0; a < 2; ++a)
        worst = std::max(worst, std::abs(kTwoPi * P.mode(ti, a, 0) - 1.0));
    os << "mass residual=" << worst;
    if (worst > 1e-9) pass = false;
  }

  // heat decay: <q_t, cos> = eps e^{-t/2} to 1e-6 relative at t=1
  {
    MvOptions mv;
    mv.dt = 1e-3;
    mv.M = 32;
    const auto P = solve_mv(SineInteraction{0.0}, DisorderLaw::single(0.0),
                            InitialLaw::von_mises(0.3, Angle(0.0)), 1.0, mv);
    const double c0 = P.atom_exp_moment(0.0, 0, 1).real();
    const double c1 = P.atom_exp_moment(1.0, 0, 1).real();
    const double rel = std::fabs(c1 - c0 * std::exp(-0.5)) / std::fabs(c0 * std::exp(-0.5));
    os << ", heat rel err=" << rel;
    if (rel > 1e-6) pass = false;
  }

  // rotating frame: c = omega advances the phase at rate omega
  {
    const double omega0 = 1.3;
    MvOptions mv;
    mv.dt = 1e-3;
    mv.M = 32;
    const auto P = solve_mv(SineInteraction{0.0}, DisorderLaw::single(omega0),
                            InitialLaw::von_mises(0.5, Angle(0.0)), 1.0, mv);
    const Complex a0 = P.order_complex(0.0);
    const Complex a1 = P.order_complex(1.0);
    const double dphase = std::arg(a1 * std::conj(a0));
    const double mod_err = std::fabs(std::abs(a1) - std::abs(a0) * std::exp(-0.5));
    os << ", phase rate err=" << std::fabs(dphase - omega0);
    if (std::fabs(dphase - omega0) > 1e-6 || mod_err > 1e-6 * std::abs(a0)) pass = false;
  }

  // spectral doubling on r_t in both figure regimes
  for (const auto& [K, w0] : {std::pair{6.0, 1.0}, std::pair{4.0, 0.5}}) {
    const DisorderLaw mu = DisorderLaw::symmetric_pair(w0);
    const InitialLaw lambda = InitialLaw::von_mises(0.5, Angle(0.0));
    MvOptions a;
    a.dt = 1e-3;
    a.M = 64;
    MvOptions b;
    b.dt = 2.5e-4;
    b.M = 128;
    const auto Pa = solve_mv(SineInteraction{K}, mu, lambda, 6.0, a);
    const auto Pb = solve_mv(SineInteraction{K}, mu, lambda, 6.0, b);
    double worst = 0.0;
    for (double t : {1.0, 2.0, 4.0, 6.0})
      worst = std::max(worst,
                       std::fabs(limit_order_params(Pa, t).r - limit_order_params(Pb, t).r));
    os << ", doubling(K=" << K << ")=" << worst;
    if (worst > 1e-6) pass = false;
  }
  return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// 9. Fixed points and bifurcation consistency.
Result criterion_fixed_points() {
  std::ostringstream os;
  bool pass = true;

  const double psi0 = psi_map(2.0, DisorderLaw::single(0.0), 0.0);
  os << "Psi(0)=" << psi0;
  if (std::fabs(psi0) > 1e-12) pass = false;

  const double kc = critical_coupling(DisorderLaw::single(0.0));
  os << ", Kc=" << kc;
  if (std::fabs(kc - 1.0) > 1e-6) pass = false;

  for (const auto& [K, w0] : {std::pair{6.0, 1.0}, std::pair{4.0, 0.5}}) {
    const DisorderLaw mu = DisorderLaw::symmetric_pair(w0);
    const auto report = find_fixed_points(K, mu);
    double r_star = 0.0;
    for (const auto& root : report.roots)
      if (root.stability == Stability::stable) r_star = std::max(r_star, root.r);
    MvOptions mv;
    mv.dt = 1e-3;
    mv.M = 64;
    const auto P =
        solve_mv(SineInteraction{K}, mu, InitialLaw::von_mises(0.5, Angle(0.0)), 30.0, mv);
    const double r_inf = limit_order_params(P, 30.0).r;
    os << ", K=" << K << ": r*=" << r_star << " r_inf=" << r_inf;
    if (r_star <= 0.0 || std::fabs(r_star - r_inf) > 1e-3) pass = false;
  }
  return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// 10. Determinism: byte-identical outputs, quenched/noise seed separation.
Result criterion_determinism() {
  namespace fs = std::filesystem;
  std::ostringstream os;
  bool pass = true;

  ExperimentConfig cfg = preset(Experiment::Custom);
  cfg.replication.N = 120;
  cfg.numerics.T = 1.0;
  auto read = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const fs::path d1 = fs::temp_directory_path() / "kuramoto_acc_det1";
  const fs::path d2 = fs::temp_directory_path() / "kuramoto_acc_det2";
  fs::remove_all(d1);
  fs::remove_all(d2);
  run(cfg, d1.string(), 2);
  run(cfg, d2.string(), 2);
  const bool bytes_equal =
      read(d1 / "particle_r_psi.csv") == read(d2 / "particle_r_psi.csv");
  os << "byte-identical csv: " << (bytes_equal ? "yes" : "NO");
  pass = pass && bytes_equal;

  // quenched separation
  const DisorderLaw mu = DisorderLaw::symmetric_pair(1.0);
  const auto base = sample_disorder(mu, 500, 42);
  bool disorder_stable = true;
  for (std::uint64_t noise = 0; noise < 4; ++noise) {
    SimConfig sim;
    sim.N = 500;
    sim.T = 0.1;
    sim.dt = 0.01;
    sim.noise_seed = noise;
    sim.disorder_seed = 42;
    const auto snaps = simulate(sim, SineInteraction{1.0}, mu, InitialLaw::uniform());
    if (snaps.front().disorder != base) disorder_stable = false;
  }
  os << ", disorder fixed under noise-seed changes: " << (disorder_stable ? "yes" : "NO");
  pass = pass && disorder_stable;

  bool noise_stable = true;
  {
    SimConfig sim;
    sim.N = 200;
    sim.T = 0.5;
    sim.dt = 0.01;
    sim.noise_seed = 7;
    sim.disorder_seed = 1;
    const InteractionModel null_model = SineInteraction{0.0};
    const auto a = simulate(sim, null_model, DisorderLaw::single(0.0), InitialLaw::uniform());
    sim.disorder_seed = 2;
    const auto b = simulate(sim, null_model, DisorderLaw::single(0.0), InitialLaw::uniform());
    for (std::size_t k = 0; k < a.size(); ++k)
      if (a[k].angles != b[k].angles) noise_stable = false;
  }
  os << ", gaussians fixed under disorder-seed changes: " << (noise_stable ? "yes" : "NO");
  pass = pass && noise_stable;
  return {pass, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--workers") == 0 && i + 1 < argc) g_workers = std::atoi(argv[++i]);
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
  }

  struct Criterion {
    const char* name;
    std::function<Result()> fn;
    double budget_s;
  };
  const std::vector<Criterion> criteria{
      {"quenched-lln", criterion_lln, 600.0},
      {"coupling-rate", criterion_coupling, 300.0},
      {"initial-clt", criterion_clt_init, 300.0},
      {"martingale-covariance", criterion_martingale, 120.0},
      {"ou-self-consistency", criterion_ou, 180.0},
      {"order-param-identities", criterion_identities, 300.0},
      {"psi-drift-scaling", criterion_scaling, 900.0},
      {"mean-field-properties", criterion_mv_properties, 300.0},
      {"fixed-point-consistency", criterion_fixed_points, 300.0},
      {"determinism", criterion_determinism, 120.0},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i + 1) != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Result res;
    try {
      res = criteria[i].fn();
    } catch (const std::exception& e) {
      res = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs <= criteria[i].budget_s;
    const bool pass = res.pass && in_budget;
    if (!pass) ++failures;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << (i + 1) << " " << criteria[i].name << ": "
              << res.detail << " [" << secs << "s" << (in_budget ? "" : " OVER BUDGET") << "]"
              << std::endl;
  }
  return failures;
}

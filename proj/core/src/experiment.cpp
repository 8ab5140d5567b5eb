#include "kuramoto/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

#include "kuramoto/csv.hpp"
#include "kuramoto/parallel.hpp"
#include "kuramoto/rng.hpp"
#include "kuramoto/version.hpp"

namespace kuramoto {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Figure1: return "figure1";
    case Experiment::Figure2: return "figure2";
    case Experiment::CouplingRate: return "coupling_rate";
    case Experiment::CltInit: return "clt_init";
    case Experiment::OuNull: return "ou_null";
    case Experiment::Bifurcation: return "bifurcation";
    case Experiment::ScalingStudy: return "scaling_study";
    case Experiment::Custom: return "custom";
  }
  throw std::logic_error("bad experiment");
}

Experiment experiment_from_string(const std::string& s) {
  if (s == "figure1") return Experiment::Figure1;
  if (s == "figure2") return Experiment::Figure2;
  if (s == "coupling_rate") return Experiment::CouplingRate;
  if (s == "clt_init") return Experiment::CltInit;
  if (s == "ou_null") return Experiment::OuNull;
  if (s == "bifurcation") return Experiment::Bifurcation;
  if (s == "scaling_study") return Experiment::ScalingStudy;
  if (s == "custom") return Experiment::Custom;
  throw std::invalid_argument("unknown experiment: " + s);
}

namespace {

json complex_json(const Complex& c) { return json::array({c.real(), c.imag()}); }
Complex complex_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json model_json(const InteractionModel& m) {
  if (const auto* s = std::get_if<SineInteraction>(&m))
    return json{{"kind", "sine"}, {"coupling", s->coupling}};
  const auto& f = std::get<FourierInteraction>(m);
  json jb = json::array(), jc = json::array();
  for (const auto& tbl : f.b_table) {
    json row = json::array();
    for (const auto& c : tbl) row.push_back(complex_json(c));
    jb.push_back(std::move(row));
  }
  for (const auto& tbl : f.c_table) {
    json row = json::array();
    for (const auto& c : tbl) row.push_back(complex_json(c));
    jc.push_back(std::move(row));
  }
  return json{{"kind", "general_fourier"},
              {"modes", f.modes},
              {"atoms", f.atom_omega},
              {"b", std::move(jb)},
              {"c", std::move(jc)}};
}

InteractionModel model_from(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "sine") return SineInteraction{j.at("coupling").get<double>()};
  if (kind != "general_fourier") throw std::invalid_argument("model.kind: unknown kind " + kind);
  FourierInteraction f;
  f.modes = j.at("modes").get<int>();
  f.atom_omega = j.at("atoms").get<std::vector<double>>();
  for (const auto& row : j.at("b")) {
    std::vector<Complex> tbl;
    for (const auto& c : row) tbl.push_back(complex_from(c));
    f.b_table.push_back(std::move(tbl));
  }
  for (const auto& row : j.at("c")) {
    std::vector<Complex> tbl;
    for (const auto& c : row) tbl.push_back(complex_from(c));
    f.c_table.push_back(std::move(tbl));
  }
  return f;
}

json disorder_json(const DisorderLaw& mu) {
  json atoms = json::array();
  for (const auto& a : mu.atoms) atoms.push_back({{"omega", a.omega}, {"weight", a.weight}});
  return json{{"atoms", std::move(atoms)}};
}

DisorderLaw disorder_from(const json& j) {
  DisorderLaw mu;
  for (const auto& a : j.at("atoms"))
    mu.atoms.push_back({a.at("omega").get<double>(), a.at("weight").get<double>()});
  return mu;
}

json initial_json(const InitialLaw& l) {
  switch (l.kind) {
    case InitialLaw::Kind::UniformCircle:
      return json{{"kind", "uniform"}};
    case InitialLaw::Kind::VonMisesLike:
      return json{{"kind", "von_mises"},
                  {"concentration", l.concentration},
                  {"center", l.center.value}};
    case InitialLaw::Kind::AtomAt:
      return json{{"kind", "atom"}, {"angle", l.center.value}};
  }
  throw std::logic_error("bad initial law");
}

InitialLaw initial_from(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "uniform") return InitialLaw::uniform();
  if (kind == "von_mises")
    return InitialLaw::von_mises(j.at("concentration").get<double>(),
                                 Angle(j.at("center").get<double>()));
  if (kind == "atom") return InitialLaw::atom(Angle(j.at("angle").get<double>()));
  throw std::invalid_argument("initial.kind: unknown kind " + kind);
}

std::string scheme_string(Scheme s) {
  return s == Scheme::EulerMaruyama ? "euler_maruyama" : "stochastic_heun";
}

Scheme scheme_from(const std::string& s) {
  if (s == "euler_maruyama") return Scheme::EulerMaruyama;
  if (s == "stochastic_heun") return Scheme::StochasticHeun;
  throw std::invalid_argument("numerics.scheme: unknown scheme " + s);
}

json config_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = to_string(cfg.experiment);
  j["model"] = model_json(cfg.model);
  j["disorder"] = disorder_json(cfg.disorder);
  j["initial"] = initial_json(cfg.initial);
  if (cfg.mv_initial) j["mv_initial"] = initial_json(*cfg.mv_initial);
  j["numerics"] = json{{"dt", cfg.numerics.dt},
                       {"T", cfg.numerics.T},
                       {"mv_dt", cfg.numerics.mv_dt},
                       {"M", cfg.numerics.M},
                       {"M_probe", cfg.numerics.M_probe},
                       {"ou_dt", cfg.numerics.ou_dt},
                       {"record_stride", cfg.numerics.record_stride},
                       {"scheme", scheme_string(cfg.numerics.scheme)},
                       {"ou_max_leak", cfg.numerics.ou_max_leak}};
  j["replication"] = json{{"N", cfg.replication.N},
                          {"N_list", cfg.replication.N_list},
                          {"n_disorder", cfg.replication.n_disorder},
                          {"n_noise", cfg.replication.n_noise},
                          {"base_seed", cfg.replication.base_seed}};
  j["window"] = json{{"t0", cfg.window.t0}, {"t1", cfg.window.t1}};
  j["k_grid"] = json{{"k_min", cfg.k_grid.k_min},
                     {"k_max", cfg.k_grid.k_max},
                     {"count", cfg.k_grid.count}};
  j["output_dir"] = cfg.output_dir;
  return j;
}

ExperimentConfig config_from(const json& j) {
  ExperimentConfig cfg;
  cfg.experiment = experiment_from_string(j.at("experiment").get<std::string>());
  cfg.model = model_from(j.at("model"));
  cfg.disorder = disorder_from(j.at("disorder"));
  cfg.initial = initial_from(j.at("initial"));
  if (j.contains("mv_initial")) cfg.mv_initial = initial_from(j.at("mv_initial"));
  const auto& n = j.at("numerics");
  cfg.numerics.dt = n.at("dt").get<double>();
  cfg.numerics.T = n.at("T").get<double>();
  cfg.numerics.mv_dt = n.at("mv_dt").get<double>();
  cfg.numerics.M = n.at("M").get<int>();
  cfg.numerics.M_probe = n.at("M_probe").get<int>();
  cfg.numerics.ou_dt = n.at("ou_dt").get<double>();
  cfg.numerics.record_stride = n.at("record_stride").get<int>();
  cfg.numerics.scheme = scheme_from(n.at("scheme").get<std::string>());
  cfg.numerics.ou_max_leak = n.at("ou_max_leak").get<double>();
  const auto& r = j.at("replication");
  cfg.replication.N = r.at("N").get<int>();
  cfg.replication.N_list = r.at("N_list").get<std::vector<int>>();
  cfg.replication.n_disorder = r.at("n_disorder").get<int>();
  cfg.replication.n_noise = r.at("n_noise").get<int>();
  cfg.replication.base_seed = r.at("base_seed").get<std::uint64_t>();
  const auto& w = j.at("window");
  cfg.window.t0 = w.at("t0").get<double>();
  cfg.window.t1 = w.at("t1").get<double>();
  const auto& k = j.at("k_grid");
  cfg.k_grid.k_min = k.at("k_min").get<double>();
  cfg.k_grid.k_max = k.at("k_max").get<double>();
  cfg.k_grid.count = k.at("count").get<int>();
  cfg.output_dir = j.at("output_dir").get<std::string>();
  return cfg;
}

}  // namespace

std::string ExperimentConfig::to_json_string(int indent) const {
  return config_json(*this).dump(indent);
}

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
  return config_from(json::parse(text));
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

void ExperimentConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config " + path);
  out << to_json_string() << "\n";
}

ExperimentConfig preset(Experiment e) {
  ExperimentConfig cfg;
  cfg.experiment = e;
  switch (e) {
    case Experiment::Figure1:
      cfg.model = SineInteraction{6.0};
      cfg.disorder = DisorderLaw::symmetric_pair(1.0);
      cfg.initial = InitialLaw::uniform();
      cfg.mv_initial = InitialLaw::von_mises(0.5, Angle(0.0));
      cfg.replication.N = 600;
      cfg.numerics.T = 20.0;
      cfg.output_dir = "out/figure1";
      break;
    case Experiment::Figure2:
      cfg.model = SineInteraction{4.0};
      cfg.disorder = DisorderLaw::symmetric_pair(0.5);
      cfg.initial = InitialLaw::uniform();
      cfg.replication.N = 400;
      cfg.replication.n_disorder = 6;
      cfg.numerics.T = 15.0;
      cfg.window = {5.0, 15.0};
      cfg.output_dir = "out/figure2";
      break;
    case Experiment::CouplingRate:
      cfg.model = SineInteraction{4.0};
      cfg.disorder = DisorderLaw::symmetric_pair(0.5);
      cfg.initial = InitialLaw::von_mises(0.5, Angle(0.0));
      cfg.replication.N_list = {50, 100, 200, 400, 800};
      cfg.replication.n_disorder = 50;
      cfg.replication.n_noise = 4;
      cfg.numerics.T = 1.0;
      cfg.numerics.record_stride = 1;
      cfg.output_dir = "out/coupling_rate";
      break;
    case Experiment::CltInit:
      cfg.model = SineInteraction{6.0};
      cfg.disorder = DisorderLaw::symmetric_pair(1.0);
      cfg.initial = InitialLaw::uniform();
      cfg.replication.N = 10000;
      cfg.replication.n_disorder = 100;
      cfg.replication.n_noise = 10;
      cfg.numerics.M_probe = 2;
      cfg.numerics.T = 0.0;
      cfg.output_dir = "out/clt_init";
      break;
    case Experiment::OuNull:
      cfg.model = SineInteraction{0.0};
      cfg.disorder = DisorderLaw::single(0.0);
      cfg.initial = InitialLaw::uniform();
      cfg.replication.n_disorder = 1;
      cfg.replication.n_noise = 10000;
      cfg.numerics.T = 2.0;
      cfg.numerics.ou_dt = 5e-3;
      cfg.numerics.M_probe = 4;
      cfg.numerics.record_stride = 50;
      cfg.output_dir = "out/ou_null";
      break;
    case Experiment::Bifurcation:
      cfg.model = SineInteraction{6.0};
      cfg.disorder = DisorderLaw::symmetric_pair(1.0);
      cfg.k_grid = {0.0, 8.0, 33};
      cfg.output_dir = "out/bifurcation";
      break;
    case Experiment::ScalingStudy:
      cfg.model = SineInteraction{4.0};
      cfg.disorder = DisorderLaw::symmetric_pair(0.5);
      cfg.initial = InitialLaw::uniform();
      cfg.replication.N_list = {100, 200, 400, 800, 1600};
      cfg.replication.n_disorder = 25;
      cfg.replication.n_noise = 4;
      cfg.numerics.T = 15.0;
      cfg.window = {5.0, 15.0};
      cfg.output_dir = "out/scaling";
      break;
    case Experiment::Custom:
      cfg.model = SineInteraction{6.0};
      cfg.disorder = DisorderLaw::symmetric_pair(1.0);
      cfg.initial = InitialLaw::uniform();
      cfg.replication.N = 600;
      cfg.numerics.T = 6.0;
      cfg.output_dir = "out/custom";
      break;
  }
  return cfg;
}

std::uint64_t replica_disorder_seed(const ExperimentConfig& cfg, int d_index) {
  return rng::derive(cfg.replication.base_seed, rng::Stream::disorder,
                     static_cast<std::uint64_t>(d_index));
}

std::uint64_t replica_noise_seed(const ExperimentConfig& cfg, int d_index, int n_index) {
  return rng::derive(cfg.replication.base_seed, rng::Stream::noise,
                     (static_cast<std::uint64_t>(d_index) << 20) +
                         static_cast<std::uint64_t>(n_index));
}

std::vector<std::string> validate(const ExperimentConfig& cfg) {
  std::vector<std::string> v;
  try {
    cfg.disorder.validate();
  } catch (const std::exception& e) {
    v.push_back(std::string("disorder: ") + e.what());
  }
  try {
    cfg.initial.validate();
  } catch (const std::exception& e) {
    v.push_back(std::string("initial: ") + e.what());
  }
  if (cfg.mv_initial) {
    try {
      cfg.mv_initial->validate();
    } catch (const std::exception& e) {
      v.push_back(std::string("mv_initial: ") + e.what());
    }
  }
  if (const auto* s = std::get_if<SineInteraction>(&cfg.model)) {
    if (!(s->coupling >= 0.0)) v.push_back("model.coupling: must be >= 0");
  } else {
    try {
      std::get<FourierInteraction>(cfg.model).validate();
    } catch (const std::exception& e) {
      v.push_back(std::string("model: ") + e.what());
    }
  }

  const auto& n = cfg.numerics;
  if (!(n.dt > 0.0)) v.push_back("numerics.dt: must be positive");
  if (n.T < 0.0) v.push_back("numerics.T: must be >= 0");
  if (n.dt > 0.0 && n.T > 0.0) {
    const long long steps = std::llround(n.T / n.dt);
    if (steps < 1 || std::fabs(steps * n.dt - n.T) > 1e-9 * std::max(1.0, n.T))
      v.push_back("numerics.dt: T/dt is not an integer step count");
  }
  if (n.record_stride < 1) v.push_back("numerics.record_stride: must be >= 1");
  if (n.M < 2) v.push_back("numerics.M: must be >= 2");
  if (!(n.mv_dt > 0.0))
    v.push_back("numerics.mv_dt: must be positive");
  else if (n.mv_dt * n.M * n.M / 2.0 >= 2.5)
    v.push_back("numerics.mv_dt: dt*M^2/2 >= 2.5, mean-field integrator unstable");
  if (n.M_probe < 1) v.push_back("numerics.M_probe: must be >= 1");
  if (!(n.ou_dt > 0.0))
    v.push_back("numerics.ou_dt: must be positive");
  else if (n.ou_dt * n.M_probe * n.M_probe / 2.0 >= 2.0)
    v.push_back("numerics.ou_dt: dt*M_probe^2/2 >= 2, fluctuation integrator unstable");

  const auto& r = cfg.replication;
  if (r.N < 1) v.push_back("replication.N: must be >= 1");
  if (r.n_disorder < 1) v.push_back("replication.n_disorder: must be >= 1");
  if (r.n_noise < 1) v.push_back("replication.n_noise: must be >= 1");

  const bool needs_n_list =
      cfg.experiment == Experiment::CouplingRate || cfg.experiment == Experiment::ScalingStudy;
  if (needs_n_list) {
    if (r.N_list.empty()) v.push_back("replication.N_list: required for this experiment");
    for (int nn : r.N_list)
      if (nn < 1) v.push_back("replication.N_list: entries must be >= 1");
  }

  if (cfg.experiment == Experiment::Bifurcation) {
    if (!cfg.disorder.symmetric(1e-9))
      v.push_back(
          "disorder: bifurcation/fixed-point analysis assumes a symmetric disorder law");
    if (cfg.k_grid.count < 2) v.push_back("k_grid.count: must be >= 2");
    if (!(cfg.k_grid.k_min <= cfg.k_grid.k_max)) v.push_back("k_grid: k_min must be <= k_max");
    if (!is_sine(cfg.model)) v.push_back("model: bifurcation scan requires the sine kind");
  }

  const bool psi_study =
      cfg.experiment == Experiment::ScalingStudy || cfg.experiment == Experiment::Figure2;
  if (psi_study) {
    if (!(cfg.window.t0 >= 0.0 && cfg.window.t0 < cfg.window.t1 && cfg.window.t1 <= n.T))
      v.push_back("window: need 0 <= t0 < t1 <= T");
    if (is_sine(cfg.model)) {
      try {
        if (linearize_uniform(sine_coupling(cfg.model), cfg.disorder) <= 0.0)
          v.push_back(
              "model.coupling: uniform state is stable, no synchronization; psi-drift "
              "study assumes the synchronized regime (limit r bounded away from 0)");
      } catch (const std::exception&) {
        // disorder violations already reported
      }
    }
  }
  return v;
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string s = cfg.to_json_string(-1);
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

struct Emitter {
  fs::path dir;
  std::string manifest_id;
  std::vector<std::string>* outputs;

  CsvWriter open(const std::string& name, const std::vector<std::string>& columns) const {
    outputs->push_back(name);
    return CsvWriter((dir / name).string(), columns, manifest_id);
  }
};

const char* stability_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::marginal: return "marginal";
  }
  return "?";
}

void run_figure1(const ExperimentConfig& cfg, const Emitter& em, int workers) {
  (void)workers;
  const InitialLaw mv_lambda = cfg.mv_initial.value_or(cfg.initial);
  MvOptions mv;
  mv.dt = cfg.numerics.mv_dt;
  mv.M = cfg.numerics.M;
  const MeanFieldSolution P = solve_mv(cfg.model, cfg.disorder, mv_lambda, cfg.numerics.T, mv);

  {
    auto csv = em.open("mv_solution.csv", {"t", "r", "psi", "degenerate"});
    for (double t : P.times) {
      const OrderParams op = limit_order_params(P, t);
      csv.row(t, op.r, op.psi.value, op.degenerate ? 1 : 0);
    }
  }

  SimConfig sim;
  sim.N = cfg.replication.N;
  sim.T = cfg.numerics.T;
  sim.dt = cfg.numerics.dt;
  sim.scheme = cfg.numerics.scheme;
  sim.record_stride = cfg.numerics.record_stride;
  sim.disorder_seed = replica_disorder_seed(cfg, 0);
  sim.noise_seed = replica_noise_seed(cfg, 0, 0);
  const auto snaps = simulate(sim, cfg.model, cfg.disorder, cfg.initial);

  {
    auto csv = em.open("particle_r_psi.csv", {"t", "r", "psi", "degenerate"});
    for (const auto& snap : snaps) {
      const OrderParams op = finite_order_params(snap);
      csv.row(snap.time, op.r, op.psi.value, op.degenerate ? 1 : 0);
    }
  }

  double r_star = 0.0;
  if (cfg.disorder.symmetric(1e-9) && is_sine(cfg.model)) {
    const auto report = find_fixed_points(sine_coupling(cfg.model), cfg.disorder);
    for (const auto& root : report.roots)
      if (root.stability == Stability::stable) r_star = std::max(r_star, root.r);
  }
  {
    auto csv = em.open("comparison.csv", {"t", "r_particle", "r_mv", "r_star"});
    for (const auto& snap : snaps) {
      const OrderParams op = finite_order_params(snap);
      const OrderParams mv_op = limit_order_params(P, snap.time);
      csv.row(snap.time, op.r, mv_op.r, r_star);
    }
  }
}

void run_figure2(const ExperimentConfig& cfg, const Emitter& em, int workers) {
  const int nd = cfg.replication.n_disorder, nn = cfg.replication.n_noise;
  struct Series {
    std::vector<double> t, r, psi;
  };
  std::vector<Series> series(static_cast<std::size_t>(nd) * nn);
  parallel_for(series.size(), workers, [&](std::size_t idx) {
    const int d = static_cast<int>(idx) / nn;
    const int k = static_cast<int>(idx) % nn;
    SimConfig sim;
    sim.N = cfg.replication.N;
    sim.T = cfg.numerics.T;
    sim.dt = cfg.numerics.dt;
    sim.scheme = cfg.numerics.scheme;
    sim.record_stride = cfg.numerics.record_stride;
    sim.disorder_seed = replica_disorder_seed(cfg, d);
    sim.noise_seed = replica_noise_seed(cfg, d, k);
    const auto snaps = simulate(sim, cfg.model, cfg.disorder, cfg.initial);
    std::vector<double> psi_raw;
    for (const auto& snap : snaps) {
      const OrderParams op = finite_order_params(snap);
      series[idx].t.push_back(snap.time);
      series[idx].r.push_back(op.r);
      psi_raw.push_back(op.psi.value);
    }
    // lenient lift: the run starts unsynchronized, where psi is undefined
    series[idx].psi = unwrap_psi(psi_raw, /*strict=*/false);
  });
  auto csv = em.open("figure2_psi.csv", {"t", "disorder_idx", "noise_idx", "r", "psi_unwrapped"});
  for (int d = 0; d < nd; ++d)
    for (int k = 0; k < nn; ++k) {
      const auto& s = series[static_cast<std::size_t>(d) * nn + k];
      for (std::size_t i = 0; i < s.t.size(); ++i)
        csv.row(s.t[i], d, k, s.r[i], s.psi[i]);
    }
}

void run_coupling_rate(const ExperimentConfig& cfg, const Emitter& em, int workers) {
  MvOptions mv;
  mv.dt = cfg.numerics.mv_dt;
  mv.M = cfg.numerics.M;
  const MeanFieldSolution P = solve_mv(cfg.model, cfg.disorder, cfg.initial, cfg.numerics.T, mv);

  const int nd = cfg.replication.n_disorder, nn = cfg.replication.n_noise;
  const std::size_t reps = static_cast<std::size_t>(nd) * nn;

  auto dist = em.open("coupling_dist.csv", {"N", "disorder_idx", "noise_idx", "n_sup_gap_sq"});
  auto rate = em.open("coupling_rate.csv", {"N", "mean_sup_gap_sq", "stderr", "replicas"});
  std::vector<double> log_n, log_gap;
  for (int N : cfg.replication.N_list) {
    std::vector<double> gaps(reps, 0.0);
    parallel_for(reps, workers, [&](std::size_t idx) {
      const int d = static_cast<int>(idx) / nn;
      const int k = static_cast<int>(idx) % nn;
      SimConfig sim;
      sim.N = N;
      sim.T = cfg.numerics.T;
      sim.dt = cfg.numerics.dt;
      sim.record_stride = cfg.numerics.record_stride;
      sim.disorder_seed = replica_disorder_seed(cfg, d);
      sim.noise_seed = replica_noise_seed(cfg, d, k);
      gaps[idx] = simulate_coupled(sim, cfg.model, cfg.disorder, cfg.initial, P).mean_sup_sq_gap;
    });
    double mean = 0.0;
    for (double g : gaps) mean += g;
    mean /= static_cast<double>(reps);
    double var = 0.0;
    for (double g : gaps) var += (g - mean) * (g - mean);
    var /= static_cast<double>(reps - 1);
    rate.row(N, mean, std::sqrt(var / static_cast<double>(reps)), static_cast<int>(reps));
    for (std::size_t idx = 0; idx < reps; ++idx)
      dist.row(N, static_cast<int>(idx) / nn, static_cast<int>(idx) % nn, N * gaps[idx]);
    log_n.push_back(std::log(static_cast<double>(N)));
    log_gap.push_back(std::log(mean));
  }

  // least squares for the decay exponent
  const std::size_t m = log_n.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += log_n[i];
    my += log_gap[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (log_n[i] - mx) * (log_n[i] - mx);
    sxy += (log_n[i] - mx) * (log_gap[i] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double resid = log_gap[i] - intercept - slope * log_n[i];
    rss += resid * resid;
  }
  const double se = m > 2 ? std::sqrt(rss / static_cast<double>(m - 2) / sxx) : 0.0;
  auto fit = em.open("coupling_fit.csv", {"slope", "stderr", "intercept"});
  fit.row(slope, se, intercept);
}

void run_clt_init(const ExperimentConfig& cfg, const Emitter& em, int workers) {
  const int n_atoms = static_cast<int>(cfg.disorder.size());
  const ProbeBasis basis = ProbeBasis::full(cfg.numerics.M_probe, n_atoms);
  const MeanFieldSolution P0 = initial_solution(cfg.initial, cfg.disorder, cfg.numerics.M);

  const Matrix g1 = gamma1_matrix(basis, cfg.initial, cfg.disorder);
  const Matrix g2 = gamma2_matrix(basis, cfg.initial, cfg.disorder);
  {
    std::vector<std::string> cols{"probe"};
    for (const auto& p : basis.probes) cols.push_back(p.id());
    auto csv1 = em.open("gamma1.csv", cols);
    auto csv2 = em.open("gamma2.csv", cols);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      csv1.cell(basis.probes[i].id());
      csv2.cell(basis.probes[i].id());
      for (std::size_t j = 0; j < basis.size(); ++j) {
        csv1.cell(g1(i, j));
        csv2.cell(g2(i, j));
      }
      csv1.end_row();
      csv2.end_row();
    }
  }

  const int nd = cfg.replication.n_disorder, nn = cfg.replication.n_noise;
  const std::size_t reps = static_cast<std::size_t>(nd) * nn;
  std::vector<std::vector<double>> values(basis.size(), std::vector<double>(reps, 0.0));
  parallel_for(reps, workers, [&](std::size_t idx) {
    const int d = static_cast<int>(idx) / nn;
    const int k = static_cast<int>(idx) % nn;
    EmpiricalSnapshot snap;
    snap.time = 0.0;
    snap.disorder =
        sample_disorder(cfg.disorder, cfg.replication.N, replica_disorder_seed(cfg, d));
    const auto angles =
        sample_initial(cfg.initial, cfg.replication.N, replica_noise_seed(cfg, d, k));
    snap.angles = angles;
    for (std::size_t p = 0; p < basis.size(); ++p)
      values[p][idx] = eval_fluct(snap, P0, basis.probes[p]);
  });

  {
    auto csv = em.open("clt_variance.csv",
                       {"probe", "replicas", "empirical_var", "predicted_var", "stderr", "z"});
    for (std::size_t p = 0; p < basis.size(); ++p) {
      double mean = 0.0;
      for (double v : values[p]) mean += v;
      mean /= static_cast<double>(reps);
      double m2 = 0.0, m4 = 0.0;
      for (double v : values[p]) {
        const double d2 = (v - mean) * (v - mean);
        m2 += d2;
        m4 += d2 * d2;
      }
      m2 /= static_cast<double>(reps);
      m4 /= static_cast<double>(reps);
      const double var = m2 * static_cast<double>(reps) / static_cast<double>(reps - 1);
      const double se = std::sqrt(std::max(0.0, m4 - m2 * m2) / static_cast<double>(reps));
      const double predicted = g1(p, p) + g2(p, p);
      const double z = se > 0.0 ? (var - predicted) / se : 0.0;
      csv.row(basis.probes[p].id(), static_cast<int>(reps), var, predicted, se, z);
    }
  }

  {
    // quenched decomposition: init-averaged values estimate C(omega); their
    // across-disorder variance matches Gamma2 up to a Gamma1/n_noise bias
    auto csv = em.open("quenched_decomposition.csv",
                       {"probe", "n_disorder", "excess_var", "gamma2", "stderr", "z"});
    for (std::size_t p = 0; p < basis.size(); ++p) {
      std::vector<double> means(nd, 0.0);
      for (int d = 0; d < nd; ++d) {
        double acc = 0.0;
        for (int k = 0; k < nn; ++k) acc += values[p][static_cast<std::size_t>(d) * nn + k];
        means[d] = acc / nn;
      }
      double mu_hat = 0.0;
      for (double v : means) mu_hat += v;
      mu_hat /= nd;
      double m2 = 0.0, m4 = 0.0;
      for (double v : means) {
        const double d2 = (v - mu_hat) * (v - mu_hat);
        m2 += d2;
        m4 += d2 * d2;
      }
      m2 /= nd;
      m4 /= nd;
      const double var = m2 * static_cast<double>(nd) / static_cast<double>(nd - 1);
      const double excess = var - g1(p, p) / nn;
      const double se = std::sqrt(std::max(0.0, m4 - m2 * m2) / nd);
      const double z = se > 0.0 ? (excess - g2(p, p)) / se : 0.0;
      csv.row(basis.probes[p].id(), nd, excess, g2(p, p), se, z);
    }
  }
}

void run_ou_null(const ExperimentConfig& cfg, const Emitter& em, int workers) {
  (void)workers;
  MvOptions mv;
  mv.dt = cfg.numerics.mv_dt;
  mv.M = cfg.numerics.M;
  const MeanFieldSolution P = solve_mv(cfg.model, cfg.disorder, cfg.initial, cfg.numerics.T, mv);
  const ProbeBasis basis =
      ProbeBasis::full(cfg.numerics.M_probe, static_cast<int>(cfg.disorder.size()));

  std::vector<OuSeeds> seeds;
  for (int d = 0; d < cfg.replication.n_disorder; ++d)
    for (int k = 0; k < cfg.replication.n_noise; ++k)
      seeds.push_back({replica_disorder_seed(cfg, d), replica_noise_seed(cfg, d, k)});

  OuOptions opt;
  opt.record_stride = cfg.numerics.record_stride;
  opt.max_leak_fraction = cfg.numerics.ou_max_leak;
  const auto traces = simulate_ou_batch(P, cfg.model, cfg.disorder, cfg.initial, basis,
                                        cfg.numerics.T, cfg.numerics.ou_dt, seeds, opt);

  {
    auto csv = em.open("ou_trace.csv", {"t", "probe", "value", "disorder_seed", "noise_seed"});
    const std::size_t shown = std::min<std::size_t>(traces.size(), 8);
    for (std::size_t rdx = 0; rdx < shown; ++rdx) {
      const auto& tr = traces[rdx];
      for (std::size_t p = 0; p < tr.probe_indices.size(); ++p)
        for (std::size_t k = 0; k < tr.times.size(); ++k)
          csv.row(tr.times[k], basis.probes[static_cast<std::size_t>(tr.probe_indices[p])].id(),
                  tr.values[p][k], seeds[rdx].disorder_seed, seeds[rdx].noise_seed);
    }
  }

  {
    const OuCovariance cov = ou_covariance(P, cfg.model, cfg.disorder, cfg.initial, basis,
                                           cfg.numerics.T, cfg.numerics.ou_dt,
                                           cfg.numerics.record_stride);
    auto csv = em.open("ou_variance.csv", {"t", "probe", "var_mc", "var_recursion"});
    const auto& t0 = traces.front();
    for (std::size_t k = 0; k < t0.times.size(); ++k) {
      for (std::size_t p = 0; p < t0.probe_indices.size(); ++p) {
        double mean = 0.0;
        for (const auto& tr : traces) mean += tr.values[p][k];
        mean /= static_cast<double>(traces.size());
        double var = 0.0;
        for (const auto& tr : traces) var += (tr.values[p][k] - mean) * (tr.values[p][k] - mean);
        var /= static_cast<double>(traces.size() - 1);
        const std::size_t probe = static_cast<std::size_t>(t0.probe_indices[p]);
        csv.row(t0.times[k], basis.probes[probe].id(), var, cov.sigma[k](probe, probe));
      }
    }
  }
}

void run_bifurcation(const ExperimentConfig& cfg, const Emitter& em, int workers) {
  std::vector<double> ks(static_cast<std::size_t>(cfg.k_grid.count));
  for (int i = 0; i < cfg.k_grid.count; ++i)
    ks[i] = cfg.k_grid.k_min +
            (cfg.k_grid.k_max - cfg.k_grid.k_min) * i / (cfg.k_grid.count - 1);
  std::vector<double> eigs(ks.size());
  std::vector<FixedPointReport> reports(ks.size());
  parallel_for(ks.size(), workers, [&](std::size_t i) {
    eigs[i] = linearize_uniform(ks[i], cfg.disorder);
    reports[i] = find_fixed_points(ks[i], cfg.disorder);
  });
  {
    auto csv = em.open("bifurcation.csv", {"K", "leading_eigenvalue", "root_r", "stability"});
    for (std::size_t i = 0; i < ks.size(); ++i)
      for (const auto& root : reports[i].roots)
        csv.row(ks[i], eigs[i], root.r, std::string(stability_string(root.stability)));
  }
  {
    const double K = sine_coupling(cfg.model);
    const auto report = find_fixed_points(K, cfg.disorder);
    auto csv = em.open("psi_map.csv", {"r", "psi_r"});
    for (const auto& [r, pr] : report.map_samples) csv.row(r, pr);
  }
}

void run_scaling(const ExperimentConfig& cfg, const Emitter& em, int workers) {
  const ScalingResult res = scaling_study(
      cfg.model, cfg.disorder, cfg.initial, cfg.replication.N_list, cfg.replication.n_disorder,
      cfg.replication.n_noise, cfg.window.t0, cfg.window.t1, cfg.numerics.T, cfg.numerics.dt,
      cfg.numerics.record_stride, cfg.replication.base_seed, workers);
  {
    auto csv = em.open("scaling_summary.csv", {"N", "mean_abs_speed", "stderr"});
    for (const auto& per : res.per_n) csv.row(per.N, per.mean_abs_speed, per.stderr_abs_speed);
  }
  {
    auto csv = em.open("scaling_drifts.csv", {"N", "disorder_idx", "noise_idx", "slope"});
    for (const auto& per : res.per_n)
      for (std::size_t d = 0; d < per.slopes.size(); ++d)
        for (std::size_t k = 0; k < per.slopes[d].size(); ++k)
          csv.row(per.N, static_cast<int>(d), static_cast<int>(k), per.slopes[d][k]);
  }
  {
    auto csv = em.open("scaling_fit.csv", {"slope", "stderr"});
    csv.row(res.slope, res.slope_stderr);
  }
}

void run_custom(const ExperimentConfig& cfg, const Emitter& em, int workers) {
  (void)workers;
  auto csv = em.open("particle_r_psi.csv", {"t", "r", "psi", "degenerate"});
  if (cfg.numerics.T == 0.0) return;  // header-only series
  SimConfig sim;
  sim.N = cfg.replication.N;
  sim.T = cfg.numerics.T;
  sim.dt = cfg.numerics.dt;
  sim.scheme = cfg.numerics.scheme;
  sim.record_stride = cfg.numerics.record_stride;
  sim.disorder_seed = replica_disorder_seed(cfg, 0);
  sim.noise_seed = replica_noise_seed(cfg, 0, 0);
  const auto snaps = simulate(sim, cfg.model, cfg.disorder, cfg.initial);
  for (const auto& snap : snaps) {
    const OrderParams op = finite_order_params(snap);
    csv.row(snap.time, op.r, op.psi.value, op.degenerate ? 1 : 0);
  }
}

RunManifest start_manifest(const ExperimentConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  RunManifest manifest;
  manifest.id = config_hash(cfg);
  manifest.path = (dir / "manifest.ndjson").string();
  json line;
  line["manifest_id"] = manifest.id;
  line["code_version"] = std::string(kVersion);
  line["seeds"] = {{"base_seed", cfg.replication.base_seed}};
  line["config"] = json::parse(cfg.to_json_string(-1));
  std::ofstream out(manifest.path);
  if (!out) throw std::runtime_error("cannot write manifest " + manifest.path);
  out << line.dump() << "\n";
  return manifest;
}

void finish_manifest(RunManifest& manifest, double wall_s) {
  manifest.wall_time_s = wall_s;
  json line;
  line["manifest_id"] = manifest.id;
  line["status"] = "complete";
  line["wall_time_s"] = wall_s;
  line["outputs"] = manifest.outputs;
  std::ofstream out(manifest.path, std::ios::app);
  out << line.dump() << "\n";
}

}  // namespace

RunManifest run(const ExperimentConfig& cfg, const std::string& out_dir, int workers) {
  const auto violations = validate(cfg);
  if (!violations.empty()) {
    std::ostringstream os;
    os << "config invalid:";
    for (const auto& v : violations) os << "\n  - " << v;
    throw std::invalid_argument(os.str());
  }
  const fs::path dir = out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(out_dir);
  RunManifest manifest = start_manifest(cfg, dir);
  Emitter em{dir, manifest.id, &manifest.outputs};

  const auto t_start = std::chrono::steady_clock::now();
  switch (cfg.experiment) {
    case Experiment::Figure1: run_figure1(cfg, em, workers); break;
    case Experiment::Figure2: run_figure2(cfg, em, workers); break;
    case Experiment::CouplingRate: run_coupling_rate(cfg, em, workers); break;
    case Experiment::CltInit: run_clt_init(cfg, em, workers); break;
    case Experiment::OuNull: run_ou_null(cfg, em, workers); break;
    case Experiment::Bifurcation: run_bifurcation(cfg, em, workers); break;
    case Experiment::ScalingStudy: run_scaling(cfg, em, workers); break;
    case Experiment::Custom: run_custom(cfg, em, workers); break;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  finish_manifest(manifest, wall);
  return manifest;
}

RunManifest run_mv_solve(const ExperimentConfig& cfg, const std::string& out_dir) {
  const auto violations = validate(cfg);
  if (!violations.empty()) {
    std::ostringstream os;
    os << "config invalid:";
    for (const auto& v : violations) os << "\n  - " << v;
    throw std::invalid_argument(os.str());
  }
  const fs::path dir = out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(out_dir);
  RunManifest manifest = start_manifest(cfg, dir);
  Emitter em{dir, manifest.id, &manifest.outputs};

  const auto t_start = std::chrono::steady_clock::now();
  const InitialLaw mv_lambda = cfg.mv_initial.value_or(cfg.initial);
  MvOptions mv;
  mv.dt = cfg.numerics.mv_dt;
  mv.M = cfg.numerics.M;
  const MeanFieldSolution P = solve_mv(cfg.model, cfg.disorder, mv_lambda, cfg.numerics.T, mv);
  auto csv = em.open("mv_solution.csv", {"t", "r", "psi", "degenerate"});
  for (double t : P.times) {
    const OrderParams op = limit_order_params(P, t);
    csv.row(t, op.r, op.psi.value, op.degenerate ? 1 : 0);
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  finish_manifest(manifest, wall);
  return manifest;
}

}  // namespace kuramoto

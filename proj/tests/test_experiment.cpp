#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kuramoto/experiment.hpp"

using namespace kuramoto;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("kuramoto_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config round-trips through JSON for every preset") {
  for (Experiment e :
       {Experiment::Figure1, Experiment::Figure2, Experiment::CouplingRate, Experiment::CltInit,
        Experiment::OuNull, Experiment::Bifurcation, Experiment::ScalingStudy,
        Experiment::Custom}) {
    const ExperimentConfig cfg = preset(e);
    const ExperimentConfig back = ExperimentConfig::from_json_string(cfg.to_json_string());
    CHECK(back == cfg);
    CHECK(config_hash(back) == config_hash(cfg));
  }

  // a general-Fourier model round-trips too
  ExperimentConfig cfg = preset(Experiment::Custom);
  cfg.model = FourierInteraction::sine(2.0, cfg.disorder);
  const auto back = ExperimentConfig::from_json_string(cfg.to_json_string());
  CHECK(back == cfg);
}

TEST_CASE("shipped preset files parse to the built-in presets") {
  const fs::path root = fs::path(__FILE__).parent_path().parent_path() / "presets";
  const std::pair<const char*, Experiment> files[] = {
      {"figure1.json", Experiment::Figure1},
      {"figure2.json", Experiment::Figure2},
      {"coupling_rate.json", Experiment::CouplingRate},
      {"clt_init.json", Experiment::CltInit},
      {"ou_null.json", Experiment::OuNull},
      {"bifurcation.json", Experiment::Bifurcation},
      {"scaling.json", Experiment::ScalingStudy},
      {"custom.json", Experiment::Custom},
  };
  for (const auto& [name, e] : files) {
    const auto cfg = ExperimentConfig::load((root / name).string());
    CHECK(cfg == preset(e));
  }
}

TEST_CASE("validate: stability bound, symmetric-mu requirement, psi-study prerequisite") {
  // the figure presets validate cleanly
  CHECK(validate(preset(Experiment::Figure1)).empty());
  CHECK(validate(preset(Experiment::ScalingStudy)).empty());

  ExperimentConfig cfg = preset(Experiment::Figure1);
  cfg.numerics.mv_dt = 1.0;  // dt*M^2/2 = 2048 >= 2.5
  const auto v1 = validate(cfg);
  REQUIRE_FALSE(v1.empty());
  bool found = false;
  for (const auto& s : v1)
    if (s.find("mv_dt") != std::string::npos) found = true;
  CHECK(found);

  ExperimentConfig bif = preset(Experiment::Bifurcation);
  bif.disorder = DisorderLaw{{{-1.0, 0.3}, {1.0, 0.7}}};
  bool symmetric_flagged = false;
  for (const auto& s : validate(bif))
    if (s.find("symmetric") != std::string::npos) symmetric_flagged = true;
  CHECK(symmetric_flagged);

  // psi-drift study below the synchronization threshold is flagged
  ExperimentConfig scal = preset(Experiment::ScalingStudy);
  scal.model = SineInteraction{0.5};
  bool hr_flagged = false;
  for (const auto& s : validate(scal))
    if (s.find("synchroni") != std::string::npos) hr_flagged = true;
  CHECK(hr_flagged);

  // violations enumerate every bad field
  ExperimentConfig broken = preset(Experiment::Custom);
  broken.replication.N = 0;
  broken.numerics.dt = -1.0;
  broken.numerics.record_stride = 0;
  const auto v = validate(broken);
  CHECK(v.size() >= 3);
}

TEST_CASE("run: empty horizon yields a header-only series and a valid manifest") {
  ExperimentConfig cfg = preset(Experiment::Custom);
  cfg.replication.N = 1;
  cfg.numerics.T = 0.0;
  const auto dir = temp_dir("empty");
  const auto manifest = run(cfg, dir.string(), 1);
  CHECK_FALSE(manifest.id.empty());
  CHECK(fs::exists(dir / "manifest.ndjson"));
  const std::string csv = read_file(dir / "particle_r_psi.csv");
  // comment line + header, no data rows
  std::istringstream lines(csv);
  std::string l1, l2, l3;
  std::getline(lines, l1);
  std::getline(lines, l2);
  CHECK(l1.rfind("# manifest=", 0) == 0);
  CHECK(l2 == "t,r,psi,degenerate");
  CHECK_FALSE(std::getline(lines, l3));
}

TEST_CASE("run: identical configs produce byte-identical CSV bodies") {
  ExperimentConfig cfg = preset(Experiment::Custom);
  cfg.replication.N = 80;
  cfg.numerics.T = 1.0;
  const auto dir1 = temp_dir("det1");
  const auto dir2 = temp_dir("det2");
  run(cfg, dir1.string(), 2);
  run(cfg, dir2.string(), 2);
  CHECK(read_file(dir1 / "particle_r_psi.csv") == read_file(dir2 / "particle_r_psi.csv"));

  // different seed, different bytes
  ExperimentConfig other = cfg;
  other.replication.base_seed += 1;
  const auto dir3 = temp_dir("det3");
  run(other, dir3.string(), 2);
  CHECK(read_file(dir1 / "particle_r_psi.csv") != read_file(dir3 / "particle_r_psi.csv"));
}

TEST_CASE("run: invalid config enumerates violations") {
  ExperimentConfig cfg = preset(Experiment::Custom);
  cfg.replication.N = 0;
  CHECK_THROWS_AS(run(cfg, temp_dir("bad").string(), 1), std::invalid_argument);
}

TEST_CASE("replica seed derivation separates streams") {
  const ExperimentConfig cfg = preset(Experiment::Custom);
  CHECK(replica_disorder_seed(cfg, 0) != replica_disorder_seed(cfg, 1));
  CHECK(replica_noise_seed(cfg, 0, 0) != replica_noise_seed(cfg, 0, 1));
  CHECK(replica_noise_seed(cfg, 0, 0) != replica_noise_seed(cfg, 1, 0));
  CHECK(replica_disorder_seed(cfg, 0) != replica_noise_seed(cfg, 0, 0));
}

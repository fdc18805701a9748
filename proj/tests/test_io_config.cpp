#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "fracising/config.hpp"
#include "fracising/io.hpp"

using namespace fracising;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "fracising_io_tests";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

MeasurementSeries sample_series() {
  MeasurementSeries s;
  s.n_sites = 16;
  s.Lx = 16;
  s.beta = 0.4408;
  Rng rng(99);
  for (long i = 0; i < 40; ++i) {
    MeasurementRecord r;
    r.sweep = i * 2;
    r.m = 2.0 * uniform01(rng) - 1.0;
    r.abs_m = std::abs(r.m);
    r.m2 = r.m * r.m;
    r.m4 = r.m2 * r.m2;
    r.e = -1.0 + 0.1 * uniform01(rng);
    s.rows.push_back(r);
  }
  s.corr_blocks.setZero(4, 9);
  for (long b = 0; b < 4; ++b)
    for (long r = 0; r < 9; ++r) s.corr_blocks(b, r) = uniform01(rng);
  s.corr_block_counts = {10, 10, 10, 10};
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("hash and float formatting are stable") {
  CHECK(io::fnv1a_hex("") == "cbf29ce484222325");
  CHECK(io::fnv1a_hex("a") == "af63dc4c8601ec8c");
  for (Real x : {1.0 / 3.0, -0.0, 1e-300, 3.141592653589793, -7.25e17}) {
    const std::string text = io::format_real(x);
    CHECK(std::strtod(text.c_str(), nullptr) == x);
  }
}

TEST_CASE("measurement records survive a write and read round trip") {
  const MeasurementSeries s = sample_series();
  const fs::path path = temp_dir() / "records.csv";
  io::write_records(path, s, "deadbeefdeadbeef");

  CHECK(io::file_manifest_hash(path) == "deadbeefdeadbeef");
  const MeasurementSeries back = io::read_records(path);
  CHECK(back.n_sites == s.n_sites);
  CHECK(back.Lx == s.Lx);
  CHECK(back.beta == s.beta);
  REQUIRE(back.rows.size() == s.rows.size());
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    CHECK(back.rows[i].sweep == s.rows[i].sweep);
    CHECK(back.rows[i].e == s.rows[i].e);
    CHECK(back.rows[i].m == s.rows[i].m);
    CHECK(back.rows[i].abs_m == s.rows[i].abs_m);
    CHECK(back.rows[i].m2 == s.rows[i].m2);
    CHECK(back.rows[i].m4 == s.rows[i].m4);
  }

  // rewriting the same series must reproduce the file byte for byte
  const std::string first = slurp(path);
  io::write_records(path, s, "deadbeefdeadbeef");
  CHECK(slurp(path) == first);
}

TEST_CASE("correlator blocks survive the sidecar round trip") {
  const MeasurementSeries s = sample_series();
  const fs::path path = temp_dir() / "corr.csv";
  io::write_correlators(path, s, "0123456789abcdef");
  CHECK(io::file_manifest_hash(path) == "0123456789abcdef");

  MeasurementSeries back;
  back.Lx = s.Lx;
  io::read_correlators(path, back);
  REQUIRE(back.corr_blocks.rows() == s.corr_blocks.rows());
  REQUIRE(back.corr_blocks.cols() == s.corr_blocks.cols());
  for (long b = 0; b < s.corr_blocks.rows(); ++b) {
    CHECK(back.corr_block_counts[static_cast<std::size_t>(b)] ==
          s.corr_block_counts[static_cast<std::size_t>(b)]);
    for (long r = 0; r < s.corr_blocks.cols(); ++r)
      CHECK(back.corr_blocks(b, r) == s.corr_blocks(b, r));
  }
}

TEST_CASE("malformed record files are rejected") {
  const fs::path path = temp_dir() / "bad.csv";
  std::ofstream(path) << "just some text\n";
  CHECK_THROWS_AS(io::read_records(path), std::runtime_error);
  CHECK_THROWS_AS(io::file_manifest_hash(path), std::runtime_error);
  CHECK_THROWS_AS(io::read_records(temp_dir() / "missing.csv"), std::runtime_error);

  std::ofstream(path) << "# manifest: x\n# lattice: Lx=4 Ly=1 n_sites=4 beta=1\n"
                      << "sweep,E,m,abs_m,m2,m4\n1,2,notanumber\n";
  CHECK_THROWS_AS(io::read_records(path), std::runtime_error);
}

TEST_CASE("configuration snapshots round trip and reject corruption") {
  io::Snapshot snap;
  snap.config = lattice::SpinConfiguration::all_up(lattice::Geometry::grid(6, 4));
  Rng rng(3);
  for (long i = 0; i < snap.config.spins.size(); ++i)
    snap.config.spins[i] = uniform01(rng) < 0.5 ? -1 : 1;
  snap.q = 0.75;
  snap.seed = 0xfeedface;
  snap.sweep = 12345;

  const fs::path path = temp_dir() / "state.snap";
  io::save_snapshot(path, snap);
  const io::Snapshot back = io::load_snapshot(path);
  CHECK(back.config.geom == snap.config.geom);
  CHECK((back.config.spins == snap.config.spins).all());
  CHECK(back.q == snap.q);
  CHECK(back.seed == snap.seed);
  CHECK(back.sweep == snap.sweep);

  std::ofstream(path, std::ios::binary) << "NOTASNAP and some bytes following it";
  CHECK_THROWS_AS(io::load_snapshot(path), std::runtime_error);
}

namespace {

std::string minimal_campaign(const std::string& extra = "", const std::string& mode = "classical_1d",
                             const std::string& q = "0.75") {
  return "[campaign]\nmode = " + mode + "\nq = " + q +
         "\nsizes = 16,32\nseed = 7\n\n[grid]\nmin = 1.0\nmax = 3.0\ncount = 5\n" + extra;
}

}  // namespace

TEST_CASE("campaign config parses with defaults") {
  const config::CampaignConfig cfg = config::parse_campaign_config(minimal_campaign());
  CHECK(cfg.mode == config::Mode::classical_1d);
  REQUIRE(cfg.q_list.size() == 1);
  CHECK(cfg.q_list[0] == 0.75);
  CHECK(cfg.sizes == std::vector<long>{16, 32});
  CHECK(cfg.seed == 7);
  CHECK(cfg.grid.count == 5);
  CHECK(cfg.algorithm == engine::Algorithm::mixed);
  CHECK(cfg.n_measure == 1000);
  CHECK(cfg.measure_corr);
  CHECK(cfg.output == "runs");
  const std::vector<Real> t = cfg.grid.values();
  REQUIRE(t.size() == 5);
  CHECK(t.front() == doctest::Approx(1.0));
  CHECK(t.back() == doctest::Approx(3.0));
  CHECK(t[2] == doctest::Approx(2.0));
}

TEST_CASE("grids can be logarithmic or a single point") {
  config::GridSpec log_grid{1.0, 100.0, 3, true};
  const std::vector<Real> g = log_grid.values();
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(10.0));
  CHECK(g[2] == doctest::Approx(100.0));

  const config::CampaignConfig cfg = config::parse_campaign_config(
      "[campaign]\nmode = classical_1d\nq = 1.0\nsizes = 8\n[grid]\nmin = 2.0\ncount = 1\n");
  CHECK(cfg.grid.values() == std::vector<Real>{2.0});
}

TEST_CASE("strict parsing rejects unknown and malformed input") {
  using config::ConfigError;
  using config::parse_campaign_config;
  // unknown key, unknown section, duplicates, stray keys, bad values
  CHECK_THROWS_WITH_AS(parse_campaign_config(minimal_campaign("[engine]\nsweeps = 10\n")),
                       doctest::Contains("unknown key 'sweeps'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_campaign_config(minimal_campaign("[extras]\nx = 1\n")),
                       doctest::Contains("unknown section [extras]"), ConfigError);
  CHECK_THROWS_AS(parse_campaign_config(minimal_campaign("[grid]\nmin = 9\n")), ConfigError);
  CHECK_THROWS_AS(parse_campaign_config("x = 1\n" + minimal_campaign()), ConfigError);
  CHECK_THROWS_AS(parse_campaign_config(minimal_campaign("[engine]\nthin = \n")), ConfigError);
  CHECK_THROWS_AS(parse_campaign_config(minimal_campaign("[engine]\nthin = abc\n")), ConfigError);
  CHECK_THROWS_AS(parse_campaign_config(minimal_campaign("[engine]\nthin == 2\n")), ConfigError);
  CHECK_THROWS_AS(
      parse_campaign_config(minimal_campaign("[engine]\nmeasure_corr = maybe\n")), ConfigError);
  CHECK_THROWS_AS(parse_campaign_config(minimal_campaign("[engine]\nthin = 2\nthin = 3\n")),
                  ConfigError);
}

TEST_CASE("orders beyond the ferromagnetic bound are rejected at parse time") {
  try {
    config::parse_campaign_config(minimal_campaign("", "classical_1d", "2.5"));
    FAIL("expected ConfigError");
  } catch (const config::ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("q <= 2") != std::string::npos);
  }
}

TEST_CASE("module preconditions are enforced at parse time") {
  using config::ConfigError;
  using config::parse_campaign_config;
  CHECK_THROWS_AS(parse_campaign_config(minimal_campaign("", "classical_1d", "0.5,0.5")),
                  ConfigError);  // duplicate q
  CHECK_THROWS_AS(parse_campaign_config(
                      "[campaign]\nmode = classical_1d\nq = 1.0\nsizes = 1\n"
                      "[grid]\nmin = 1\nmax = 2\ncount = 3\n"),
                  ConfigError);  // size below 2
  CHECK_THROWS_AS(parse_campaign_config(
                      "[campaign]\nmode = classical_1d\nq = 1.0\nsizes = 8,8\n"
                      "[grid]\nmin = 1\nmax = 2\ncount = 3\n"),
                  ConfigError);  // duplicate size
  CHECK_THROWS_AS(parse_campaign_config(minimal_campaign("[model]\nh = 0.5\n")),
                  ConfigError);  // cluster moves at nonzero field
  CHECK_NOTHROW(parse_campaign_config(
      minimal_campaign("[model]\nh = 0.5\n[engine]\nalgorithm = metropolis\n")));
  CHECK_THROWS_AS(parse_campaign_config(
                      "[campaign]\nmode = classical_1d\nq = 1.0\nsizes = 8\n"
                      "[grid]\nmin = 0.0\nmax = 2\ncount = 3\n"),
                  ConfigError);  // temperature must be positive
  CHECK_THROWS_AS(parse_campaign_config(
                      "[campaign]\nmode = classical_1d\nq = 1.0\nsizes = 8\n"
                      "[grid]\nmin = 3\nmax = 2\ncount = 3\n"),
                  ConfigError);  // inverted window
  CHECK_THROWS_AS(parse_campaign_config(minimal_campaign("[quantum]\ndelta_tau = 0.1\n")),
                  ConfigError);  // quantum section in a classical mode
  CHECK_THROWS_AS(parse_campaign_config(minimal_campaign("", "quantum_1d") +
                                        "[quantum]\ndelta_tau = 40.0\n"),
                  ConfigError);  // time coupling underflows at delta_tau * g
  CHECK_NOTHROW(parse_campaign_config(minimal_campaign("", "quantum_1d") +
                                      "[quantum]\ndelta_tau = 0.1\naspect = 1.0\n"));
  CHECK_THROWS_AS(parse_campaign_config(
                      "[campaign]\nmode = classical_1d\nq = 1.0\nsizes = 8\nseed = -5\n"
                      "[grid]\nmin = 1\nmax = 2\ncount = 3\n"),
                  ConfigError);  // negative seed
}

TEST_CASE("seeds accept the full unsigned 64-bit range") {
  const config::CampaignConfig cfg = config::parse_campaign_config(
      "[campaign]\nmode = classical_1d\nq = 1.0\nsizes = 8\nseed = 18446744073709551615\n"
      "[grid]\nmin = 1\nmax = 2\ncount = 3\n");
  CHECK(cfg.seed == 18446744073709551615ULL);
}

TEST_CASE("analysis config is strict about its keys") {
  const config::AnalysisConfig cfg = config::parse_analysis_config(
      "[analyze]\nstore = runs\npeak_observable = specific_heat\ncollapse = on\n");
  CHECK(cfg.store == "runs");
  CHECK(cfg.peak_observable == "specific_heat");
  CHECK(cfg.run_collapse);
  CHECK_FALSE(cfg.literal_delta);
  CHECK(cfg.n_resamples == 200);

  using config::ConfigError;
  CHECK_THROWS_AS(config::parse_analysis_config("[analyze]\nstore = runs\nfoo = 1\n"),
                  ConfigError);
  CHECK_THROWS_AS(config::parse_analysis_config("[analyze]\npeak_observable = x\n"), ConfigError);
  CHECK_THROWS_AS(config::parse_analysis_config(
                      "[analyze]\nstore = runs\npeak_observable = magnetization\n"),
                  ConfigError);
  CHECK_THROWS_AS(config::parse_analysis_config("[analyze]\nstore = runs\nn_resamples = 10\n"),
                  ConfigError);
}

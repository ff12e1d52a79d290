#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gpfourier/bench.hpp"
#include "gpfourier/error.hpp"
#include "test_util.hpp"

using namespace gpfourier;
using std::numbers::pi;
using boost::math::quadrature::gauss_kronrod;

namespace {

StudyConfig tiny_config() {
  StudyConfig cfg;
  cfg.n_trials = 3;
  cfg.t_min = -10.0;
  cfg.t_max = 10.0;
  cfg.dt = 0.1;
  cfg.a_max = 8.0;
  cfg.max_iters = 30;
  cfg.seed = 42;
  cfg.threads = 1;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("ground truth against adaptive quadrature") {
  const double inf = std::numeric_limits<double>::infinity();
  for (const AnharmonicParams p : {AnharmonicParams{15.0, 0.6 * pi, 0.0}, AnharmonicParams{2.5, 3.0, 1.3},
                                   AnharmonicParams{0.7, 2.2, 5.9}}) {
    auto f = [&](double t) { return std::exp(-t * t / (2.0 * p.a * p.a)) * std::pow(std::cos(p.omega0 * t + p.phi0), 3); };
    const std::vector<double> w{0.0, p.omega0, -p.omega0, 3.0 * p.omega0, 1.7, 0.5 * p.omega0};
    const auto truth = ground_truth_spectrum(p, w);
    for (std::size_t m = 0; m < w.size(); ++m) {
      const double re = gauss_kronrod<double, 61>::integrate([&](double t) { return f(t) * std::cos(w[m] * t); },
                                                             -inf, inf, 20, 1e-14);
      const double im = -gauss_kronrod<double, 61>::integrate([&](double t) { return f(t) * std::sin(w[m] * t); },
                                                              -inf, inf, 20, 1e-14);
      const cplx ref = cplx(re, im) / (2.0 * pi);
      CHECK(std::abs(truth.values[m] - ref) < 1e-9 * (1.0 + p.a));
    }
  }
}

TEST_CASE("band deviation examples") {
  const PowerSpectrum truth{{-1.0, 0.0, 1.0, 2.0}, {1e-3, 1.0, 1e-8, 1e-3}};
  const PowerSpectrum est{{-1.0, 0.0, 1.0, 2.0}, {2e-3, 0.5, 1e-7, 1e-3}};
  const auto d = band_deviation(est, truth, -6.0);
  REQUIRE(d.passband);
  REQUIRE(d.stopband);
  CHECK(*d.passband == doctest::Approx(1e-3 + 0.5));
  CHECK(*d.stopband == doctest::Approx(9e-8));
  const auto l = band_log_deviation(est, truth, -6.0);
  CHECK(*l.passband == doctest::Approx(std::log10(2.0) + std::log10(2.0)));
  CHECK(*l.stopband == doctest::Approx(1.0));
  SUBCASE("empty stopband") {
    const auto e = band_deviation(truth, truth, -20.0);
    CHECK(e.passband);
    CHECK_FALSE(e.stopband);
    CHECK(*e.passband == 0.0);
  }
  SUBCASE("zero power is clamped") {
    const PowerSpectrum zero{truth.freqs, {0.0, 0.0, 0.0, 0.0}};
    CHECK(std::isfinite(*band_log_deviation(zero, truth, -6.0).stopband));
  }
  const PowerSpectrum shorter{{0.0}, {1.0}};
  CHECK_THROWS_AS(band_deviation(shorter, truth, -6.0), ArgumentError);
}

TEST_CASE("parameter sampling") {
  const auto cfg = tiny_config();
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto p = sample_params(cfg, mix_seed(s));
    CHECK(p.a > cfg.a_min);
    CHECK(p.a <= cfg.a_max);
    CHECK(p.omega0 >= cfg.omega_min);
    CHECK(p.omega0 <= cfg.omega_max);
    CHECK(p.phi0 >= cfg.phi_min);
    CHECK(p.phi0 <= cfg.phi_max);
  }
  const auto a = sample_params(cfg, 17);
  const auto b = sample_params(cfg, 17);
  CHECK(a.a == b.a);
  CHECK(a.omega0 == b.omega0);
  CHECK(mix_seed(1) != mix_seed(2));
}

TEST_CASE("config validation and JSON") {
  auto cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.estimators = {"bgf", "welch"};
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg = tiny_config();
  cfg.n_trials = 0;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg = tiny_config();
  cfg.a_min = 9.0;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);

  const auto back = study_config_from_json(to_json(tiny_config()));
  CHECK(to_json(back).dump() == to_json(tiny_config()).dump());
  const auto partial = study_config_from_json(nlohmann::json{{"n_trials", 7}});
  CHECK(partial.n_trials == 7);
  CHECK(partial.a_max == StudyConfig{}.a_max);
  CHECK_THROWS_AS(study_config_from_json(nlohmann::json{{"n_trails", 7}}), ParseError);
  test::TempDir dir;
  CHECK_THROWS_AS(read_study_config(dir.path() / "missing.json"), IoError);
}

TEST_CASE("DFT estimators are energy normalized to the truth") {
  const auto cfg = tiny_config();
  const AnharmonicParams p{3.0, 2.5, 0.2};
  const auto ts = generate_anharmonic(p, cfg.t_min, cfg.t_max, cfg.dt);
  const auto grid = dft_frequencies(ts);
  const PowerSpectrum truth{grid, ground_truth_spectrum(p, grid).power()};
  for (const char* name : {"dft", "hann", "dpss2", "dpss3", "dpss4"}) {
    const auto est = run_estimator(name, ts, truth, cfg);
    CHECK(est.freqs == truth.freqs);
    CHECK(est.total() == doctest::Approx(truth.total()).epsilon(1e-10));
  }
  CHECK_THROWS_AS(run_estimator("welch", ts, truth, cfg), ArgumentError);
}

TEST_CASE("ties keep list order") {
  auto cfg = tiny_config();
  cfg.estimators = {"hann", "dft", "hann"};
  const auto r = run_study(cfg);
  for (const auto& t : r.trials) {
    REQUIRE(t.pass_rank.size() == 3);
    CHECK(t.pass_rank[0] < t.pass_rank[2]);
    CHECK(t.stop_rank[0] < t.stop_rank[2]);
  }
}

TEST_CASE("single-trial study smoke") {
  auto cfg = tiny_config();
  cfg.n_trials = 1;
  const auto r = run_study(cfg);
  REQUIRE(r.trials.size() == 1);
  REQUIRE(r.pass_hist.size() == cfg.estimators.size());
  std::size_t firsts = 0;
  for (const auto& h : r.pass_hist) firsts += h[0];
  CHECK(firsts == 1);
  for (const auto& o : r.trials[0].outcomes) CHECK_FALSE(o.failed);
  double total = 0.0;
  for (const auto& e : cfg.estimators) total += r.rank1_fraction(e, "passband");
  CHECK(total == doctest::Approx(1.0));
  CHECK_THROWS_AS(r.rank1_fraction("bgf", "midband"), ArgumentError);
  CHECK_THROWS_AS(r.rank1_fraction("welch", "passband"), ArgumentError);
}

TEST_CASE("studies are deterministic and thread-count independent") {
  auto cfg = tiny_config();
  cfg.noise_sd = 0.1;
  auto outcome = [](const StudyResult& r) {
    auto j = to_json(r);
    j.erase("config");
    return j.dump();
  };
  const auto a = to_json(run_study(cfg)).dump();
  CHECK(to_json(run_study(cfg)).dump() == a);
  const auto one = outcome(run_study(cfg));
  cfg.threads = 2;
  CHECK(outcome(run_study(cfg)) == one);
  cfg.seed = 43;
  CHECK(outcome(run_study(cfg)) != one);
}

TEST_CASE("study output files") {
  auto cfg = tiny_config();
  cfg.n_trials = 2;
  const auto r = run_study(cfg);
  test::TempDir dir;
  const auto files = write_study(dir.path() / "out", r);
  CHECK(files.size() == 3);
  for (const auto& f : files) CHECK(std::filesystem::exists(f));
  const auto dev = slurp(dir.path() / "out" / "deviations.csv");
  CHECK(dev.rfind("trial,estimator,band,value,log_value", 0) == 0);
  std::size_t lines = 0;
  for (char c : dev) lines += c == '\n';
  CHECK(lines == 1 + 2 * cfg.estimators.size() * 2);
  const auto json = nlohmann::json::parse(slurp(dir.path() / "out" / "result.json"));
  CHECK(json.at("trials").size() == 2);
}

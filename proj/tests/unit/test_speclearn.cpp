#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gpfourier/dft.hpp"
#include "gpfourier/error.hpp"
#include "gpfourier/speclearn.hpp"
#include "test_util.hpp"

using namespace gpfourier;
using std::numbers::pi;

namespace {

SpectralModel small_model() {
  SpectralModel m;
  m.centers = {-2.0, -1.0, 0.0, 1.0, 2.0};
  m.log_weights = {0.1, -0.4, 0.3, -0.4, 0.1};
  m.se_scale = 0.8;
  m.noise_variance = 0.05;
  return m;
}

std::vector<double> fd_gradient(const SpectralModel& m, auto&& f) {
  std::vector<double> g(m.size());
  const double h = 1e-6;
  for (std::size_t k = 0; k < m.size(); ++k) {
    auto p = m;
    auto q = m;
    p.log_weights[k] += h;
    q.log_weights[k] -= h;
    g[k] = (f(p) - f(q)) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("density evaluation") {
  SpectralModel m;
  m.centers = {0.0};
  m.log_weights = {std::log(2.0)};
  m.se_scale = 0.5;
  CHECK(density_eval(m, 0.0) == doctest::Approx(2.0));
  CHECK(density_eval(m, 0.5) == doctest::Approx(2.0 * std::exp(-0.5)));
  CHECK(density_eval(small_model(), 0.7) == doctest::Approx(density_eval(small_model(), -0.7)));
}

TEST_CASE("log likelihood and prior by hand") {
  SpectralModel m;
  m.centers = {0.0, 1.0};
  m.log_weights = {0.0, 0.0};
  m.se_scale = 1.0;
  m.noise_variance = 0.5;
  const double e = std::exp(-0.5);
  const double s = 1.0 + e + 0.5;
  const std::vector<double> p{2.0, 1.0};
  CHECK(log_likelihood(m, p) == doctest::Approx(-2.0 / s - std::log(pi * s) - 1.0 / s - std::log(pi * s)));
  CHECK(log_likelihood(m, p, 3.0) == doctest::Approx(3.0 * log_likelihood(m, p)));
  CHECK(log_prior(m) == doctest::Approx(-0.5 * (2.0 + 2.0 * e)));
}

TEST_CASE("gradients match finite differences") {
  const auto m = small_model();
  const std::vector<double> p{0.5, 2.0, 1.0, 3.0, 0.2};
  const auto gl = likelihood_gradient(m, p, 2.0);
  const auto fl = fd_gradient(m, [&](const SpectralModel& x) { return log_likelihood(x, p, 2.0); });
  const auto gp = prior_gradient(m);
  const auto fp = fd_gradient(m, [](const SpectralModel& x) { return log_prior(x); });
  for (std::size_t k = 0; k < m.size(); ++k) {
    CHECK(gl[k] == doctest::Approx(fl[k]).epsilon(1e-6));
    CHECK(gp[k] == doctest::Approx(fp[k]).epsilon(1e-6));
  }
}

TEST_CASE("model validation") {
  auto m = small_model();
  CHECK_NOTHROW(m.validate());
  m.se_scale = 0.0;
  CHECK_THROWS_AS(m.validate(), ArgumentError);
  m = small_model();
  m.centers[1] = m.centers[0];
  CHECK_THROWS_AS(m.validate(), ArgumentError);
  m = small_model();
  m.log_weights.pop_back();
  CHECK_THROWS_AS(m.validate(), ArgumentError);
  m = small_model();
  m.noise_variance = -1.0;
  CHECK_THROWS_AS(m.validate(), ArgumentError);
  FitOptions o;
  o.step_size = 0.0;
  CHECK_THROWS_AS(o.validate(), ArgumentError);
}

TEST_CASE("hann periodogram and scale defaults") {
  const TimeSeries ts(0.0, 0.5, std::vector<double>(40, 1.0));
  const auto p = hann_periodogram(ts);
  REQUIRE(p.size() == 40);
  CHECK(*std::max_element(p.begin(), p.end()) == p[20]);
  CHECK(default_se_scale(ts) == doctest::Approx(4.0 * 2.0 * pi / 20.0));
}

TEST_CASE("symmetrize averages mirrored weights") {
  auto m = small_model();
  m.log_weights = {1.0, 2.0, 5.0, 4.0, 3.0};
  symmetrize(m);
  CHECK(m.log_weights[0] == doctest::Approx(2.0));
  CHECK(m.log_weights[4] == doctest::Approx(2.0));
  CHECK(m.log_weights[1] == doctest::Approx(3.0));
  CHECK(m.log_weights[2] == doctest::Approx(5.0));
}

TEST_CASE("initial model reproduces a flat periodogram") {
  std::vector<double> centers;
  for (int k = -50; k < 50; ++k) centers.push_back(0.1 * k);
  const std::vector<double> p(centers.size(), 2.0);
  const auto m = initial_model(centers, p, 0.2, 0.0);
  CHECK(density_eval(m, 0.0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(density_eval(m, 2.0) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("white noise gives a flat density") {
  const TimeSeries base(0.0, 1.0, std::vector<double>(512, 0.0));
  std::vector<TimeSeries> trials;
  for (std::uint64_t s = 0; s < 8; ++s) trials.push_back(add_white_noise(base, 1.0, 100 + s));
  FitOptions o;
  o.max_iters = 300;
  o.prior_weight = 0.0;
  const auto fit = fit_map(trials, default_se_scale(trials[0]), 0.0, o);
  // Unit-variance white noise with a unit-energy taper has expected periodogram 1. Bumps near
  // Nyquist have no neighbours beyond the band, so only the interior is checked.
  const double edge = pi - 3.0 * fit.model.se_scale;
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (double xi : fit.model.centers) {
    if (std::abs(xi) > edge) continue;
    const double v = density_eval(fit.model, xi);
    sum += v;
    sq += (v - 1.0) * (v - 1.0);
    ++count;
  }
  CHECK(sum / static_cast<double>(count) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::sqrt(sq / static_cast<double>(count)) < 0.25);
}

TEST_CASE("fit improves the objective monotonically") {
  const auto ts = generate_anharmonic({15.0, 2.5, 0.0}, -25.0, 25.0, 0.1);
  FitOptions o;
  o.max_iters = 200;
  const auto fit = fit_map(std::span<const TimeSeries>(&ts, 1), default_se_scale(ts), 1e-4, o);
  REQUIRE(fit.objective_trace.size() >= 2);
  CHECK(fit.final_objective > fit.initial_objective);
  for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
    CHECK(fit.objective_trace[i] >= fit.objective_trace[i - 1]);
  }
  for (std::size_t j = 0; j < fit.model.size(); ++j) {
    const auto k = fit.model.size() - 1 - j;
    if (fit.model.centers[j] == -fit.model.centers[k]) {
      CHECK(fit.model.log_weights[j] == doctest::Approx(fit.model.log_weights[k]));
    }
  }
}

TEST_CASE("fit learns the fundamental") {
  AnharmonicParams params;
  params.omega0 = 3.0;
  params.phi0 = 0.4;
  const auto ts = generate_anharmonic(params, -25.0, 25.0, 0.05);
  FitOptions o;
  o.max_iters = 400;
  const auto fit = fit_map(std::span<const TimeSeries>(&ts, 1), 2.0 * 2.0 * pi / ts.duration(), 1e-6, o);
  double best = 0.0;
  double arg = 0.0;
  for (double xi : fit.model.centers) {
    if (xi <= 0.2) continue;
    const double v = density_eval(fit.model, xi);
    if (v > best) {
      best = v;
      arg = xi;
    }
  }
  CHECK(arg == doctest::Approx(params.omega0).epsilon(0.05));
}

TEST_CASE("zero iterations returns the initialization") {
  const auto ts = add_white_noise(TimeSeries(0.0, 1.0, std::vector<double>(64, 0.0)), 1.0, 1);
  FitOptions o;
  o.max_iters = 0;
  const auto fit = fit_map(std::span<const TimeSeries>(&ts, 1), 1.0, 0.1, o);
  CHECK(fit.iterations == 0);
  CHECK(fit.final_objective == fit.initial_objective);
}

TEST_CASE("fit input checks") {
  const TimeSeries a(0.0, 1.0, std::vector<double>(32, 1.0));
  const TimeSeries b(0.0, 0.5, std::vector<double>(32, 1.0));
  const std::vector<TimeSeries> mixed{a, b};
  CHECK_THROWS_AS(fit_map(mixed, 1.0, 0.0), ArgumentError);
  CHECK_THROWS_AS(fit_map(std::span<const TimeSeries>(), 1.0, 0.0), ArgumentError);
  CHECK_THROWS_AS(fit_map(std::span<const TimeSeries>(&a, 1), -1.0, 0.0), ArgumentError);
}

TEST_CASE("model JSON round trip") {
  const auto m = small_model();
  const auto back = spectral_model_from_json(to_json(m));
  CHECK(back.centers == m.centers);
  CHECK(back.log_weights == m.log_weights);
  CHECK(back.se_scale == m.se_scale);
  CHECK(back.noise_variance == m.noise_variance);
  test::TempDir dir;
  write_model(dir.path() / "m.json", m);
  CHECK(read_model(dir.path() / "m.json").log_weights == m.log_weights);
  CHECK_THROWS_AS(read_model(dir.path() / "absent.json"), IoError);
  dir.write("bad.json", "{\"centers\": [0]}");
  CHECK_THROWS_AS(read_model(dir.path() / "bad.json"), ParseError);
}

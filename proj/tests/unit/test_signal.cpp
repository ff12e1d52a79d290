#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "gpfourier/error.hpp"
#include "gpfourier/signal.hpp"
#include "test_util.hpp"

using namespace gpfourier;
using std::numbers::pi;

TEST_CASE("anharmonic fixture at fine resolution") {
  const auto ts = generate_anharmonic({15.0, 3.0 * pi / 5.0, 0.0}, -25.0, 25.0, 0.01);
  CHECK(ts.size() == 5001);
  CHECK(ts.values()[2500] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ts.noise_variance() == 0.0);
  // even in t for zero phase
  for (std::size_t k = 0; k < ts.size(); ++k) {
    CHECK(ts.values()[k] == doctest::Approx(ts.values()[ts.size() - 1 - k]).epsilon(1e-12));
  }
}

TEST_CASE("anharmonic values at known points") {
  const auto ts = generate_anharmonic({1.0, pi, 0.0}, 0.0, 2.0, 0.5);
  REQUIRE(ts.size() == 5);
  CHECK(ts.values()[2] == doctest::Approx(-std::exp(-0.5)).epsilon(1e-12));
  // cos(pi * 0.5) = 0
  CHECK(std::abs(ts.values()[1]) < 1e-15);
}

TEST_CASE("generate_anharmonic rejects bad grids") {
  CHECK_THROWS_AS(generate_anharmonic({1.0, 1.0, 0.0}, 1.0, 0.0, 0.1), ArgumentError);
  CHECK_THROWS_AS(generate_anharmonic({1.0, 1.0, 0.0}, 0.0, 1.0, 0.0), ArgumentError);
  CHECK_THROWS_AS(generate_anharmonic({0.0, 1.0, 0.0}, 0.0, 1.0, 0.1), ArgumentError);
}

TEST_CASE("white noise") {
  const auto clean = generate_anharmonic({15.0, 3.0 * pi / 5.0, 0.0}, -25.0, 25.0, 0.01);
  SUBCASE("sd zero is the identity") {
    const auto out = add_white_noise(clean, 0.0, 5);
    CHECK(out.noise_variance() == 0.0);
    for (std::size_t k = 0; k < clean.size(); ++k) CHECK(out.values()[k] == clean.values()[k]);
  }
  SUBCASE("sample variance close to sd^2") {
    const auto out = add_white_noise(clean, 0.1, 42);
    CHECK(out.noise_variance() == doctest::Approx(0.01));
    double mean = 0.0;
    for (std::size_t k = 0; k < clean.size(); ++k) mean += out.values()[k] - clean.values()[k];
    mean /= static_cast<double>(clean.size());
    double var = 0.0;
    for (std::size_t k = 0; k < clean.size(); ++k) {
      const double d = out.values()[k] - clean.values()[k] - mean;
      var += d * d;
    }
    var /= static_cast<double>(clean.size() - 1);
    CHECK(var > 0.01 * 0.85);
    CHECK(var < 0.01 * 1.15);
  }
  SUBCASE("seeded") {
    const auto a = add_white_noise(clean, 0.1, 9);
    const auto b = add_white_noise(clean, 0.1, 9);
    const auto c = add_white_noise(clean, 0.1, 10);
    bool differs = false;
    for (std::size_t k = 0; k < clean.size(); ++k) {
      CHECK(a.values()[k] == b.values()[k]);
      differs = differs || a.values()[k] != c.values()[k];
    }
    CHECK(differs);
  }
  CHECK_THROWS_AS(add_white_noise(clean, -1.0, 1), ArgumentError);
}

TEST_CASE("polynomial detrending") {
  SUBCASE("exact quadratic") {
    std::vector<double> v;
    for (int k = 0; k < 50; ++k) {
      const double t = 1990.0 + k / 12.0;
      v.push_back(3.0 - 0.5 * t + 0.01 * t * t);
    }
    const auto r = detrend_poly(TimeSeries(1990.0, 1.0 / 12.0, v), 2);
    for (double x : r.values()) CHECK(std::abs(x) < 1e-8);
  }
  SUBCASE("constant, order 0") {
    const auto r = detrend_poly(TimeSeries(0.0, 1.0, std::vector<double>(10, 4.2)), 0);
    for (double x : r.values()) CHECK(std::abs(x) < 1e-12);
  }
  SUBCASE("line plus sine against the normal equations") {
    const std::size_t n = 201;
    std::vector<double> v(n);
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd y(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = 0.05 * static_cast<double>(k);
      v[k] = t + std::sin(t);
      a(static_cast<Eigen::Index>(k), 0) = 1.0;
      a(static_cast<Eigen::Index>(k), 1) = t;
      y(static_cast<Eigen::Index>(k)) = v[k];
    }
    const Eigen::VectorXd coef = (a.transpose() * a).ldlt().solve(a.transpose() * y);
    const Eigen::VectorXd expect = y - a * coef;
    const auto r = detrend_poly(TimeSeries(0.0, 0.05, v), 1);
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(r.values()[k] == doctest::Approx(expect(static_cast<Eigen::Index>(k))).epsilon(1e-9).scale(1.0));
    }
  }
  SUBCASE("residuals orthogonal to the basis and idempotent") {
    std::vector<double> v;
    for (int k = 0; k < 180; ++k) v.push_back(std::sin(0.3 * k) + 0.02 * k + 1e-4 * k * k);
    const TimeSeries ts(2005.0, 1.0 / 12.0, v);
    const auto r = detrend_poly(ts, 2);
    for (int p = 0; p <= 2; ++p) {
      double dot = 0.0;
      double norm = 0.0;
      for (std::size_t k = 0; k < r.size(); ++k) {
        const double x = std::pow((r.time(k) - 2012.5) / 7.5, p);
        dot += x * r.values()[k];
        norm += std::abs(x * r.values()[k]);
      }
      CHECK(std::abs(dot) <= 1e-8 * norm);
    }
    const auto rr = detrend_poly(r, 2);
    for (std::size_t k = 0; k < r.size(); ++k) CHECK(std::abs(rr.values()[k] - r.values()[k]) < 1e-10);
  }
  CHECK_THROWS_AS(detrend_poly(TimeSeries(0.0, 1.0, {1.0, 2.0, 3.0}), 3), ArgumentError);
  CHECK_THROWS_AS(detrend_poly(TimeSeries(0.0, 1.0, {1.0, 2.0, 3.0}), -1), ArgumentError);
}

TEST_CASE("TimeSeries invariants") {
  CHECK_THROWS_AS(TimeSeries(0.0, 1.0, {1.0}), ArgumentError);
  CHECK_THROWS_AS(TimeSeries(0.0, -1.0, {1.0, 2.0}), ArgumentError);
  CHECK_THROWS_AS(TimeSeries(0.0, 1.0, {1.0, 2.0}, -0.1), ArgumentError);
  const std::vector<double> t{0.0, 0.5, 1.0, 1.5};
  const auto ts = TimeSeries::from_samples(t, {1, 2, 3, 4});
  CHECK(ts.dt() == doctest::Approx(0.5));
  CHECK(ts.duration() == doctest::Approx(2.0));
  const std::vector<double> gap{0.0, 0.5, 1.5, 2.0};
  CHECK_THROWS_AS(TimeSeries::from_samples(gap, {1, 2, 3, 4}), NonUniformSpacingError);
}

TEST_CASE("CSV loading") {
  test::TempDir dir;
  SUBCASE("two rows") {
    const auto p = dir.write("two.csv", "time,value\n0.0,1.5\n0.25,-2\n");
    const auto ts = load_csv(p, "time", "value");
    CHECK(ts.size() == 2);
    CHECK(ts.dt() == doctest::Approx(0.25));
    CHECK(ts.values()[1] == -2.0);
    CHECK(ts.noise_variance() == 0.0);
  }
  SUBCASE("columns by name, comments skipped") {
    const auto p = dir.write("cols.csv", "# comment\nvalue,other,time\n1,x,10\n\n2,y,11\n3,z,12\n");
    const auto ts = load_csv(p, "time", "value");
    CHECK(ts.size() == 3);
    CHECK(ts.t0() == 10.0);
    CHECK(ts.values()[2] == 3.0);
  }
  SUBCASE("gap in the grid") {
    const auto p = dir.write("gap.csv", "time,value\n0,1\n1,2\n3,3\n4,4\n");
    CHECK_THROWS_AS(load_csv(p, "time", "value"), NonUniformSpacingError);
  }
  SUBCASE("non-numeric cell") {
    const auto p = dir.write("bad.csv", "time,value\n0,1\n1,abc\n");
    CHECK_THROWS_AS(load_csv(p, "time", "value"), ParseError);
  }
  SUBCASE("missing column") {
    const auto p = dir.write("nocol.csv", "time,value\n0,1\n1,2\n");
    CHECK_THROWS_AS(load_csv(p, "time", "average"), ParseError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_csv(dir.path() / "nope.csv", "time", "value"), IoError);
  }
  SUBCASE("fifteen years of monthly records") {
    const auto p = dir.path() / "co2.csv";
    test::write_co2_fixture(p, 180);
    const auto ts = load_csv_nominal(p, "decimal date", "average", 1.0 / 12.0);
    CHECK(ts.size() == 180);
    CHECK(ts.dt() == doctest::Approx(1.0 / 12.0));
  }
  SUBCASE("monthly record with a missing month") {
    const auto p = dir.write("gap.csv", "decimal date,average\n2000.042,1\n2000.125,2\n2000.292,3\n");
    CHECK_THROWS_AS(load_csv_nominal(p, "decimal date", "average", 1.0 / 12.0), NonUniformSpacingError);
  }
  SUBCASE("jittered monthly dates are accepted") {
    const auto p = dir.write("jit.csv", "decimal date,average\n2000.042,1\n2000.127,2\n2000.206,3\n");
    CHECK(load_csv_nominal(p, "decimal date", "average", 1.0 / 12.0).size() == 3);
  }
  SUBCASE("round trip") {
    const TimeSeries ts(1.0, 0.1, {0.5, -1.25, 3.0}, 0.04);
    const auto p = dir.path() / "rt.csv";
    write_csv(p, ts);
    const auto back = load_csv(p, "time", "value");
    CHECK(back.same_grid(ts));
    for (std::size_t k = 0; k < ts.size(); ++k) CHECK(back.values()[k] == ts.values()[k]);
    std::ifstream in(p);
    std::string first;
    std::getline(in, first);
    CHECK(first.rfind("# noise_variance=", 0) == 0);
  }
}

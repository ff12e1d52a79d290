#include "gpfourier/signal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include "gpfourier/error.hpp"

namespace gpfourier {

namespace {

constexpr double kSpacingTolerance = 1e-9;

void check_grid(double dt, std::size_t n, double noise_variance) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ArgumentError("TimeSeries: dt must be positive");
  if (n < 2) throw ArgumentError("TimeSeries: need at least two samples");
  if (!(noise_variance >= 0.0)) throw ArgumentError("TimeSeries: noise_variance must be >= 0");
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_cell(const std::string& cell, std::size_t line_no, const std::string& column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line_no) + ": column '" + column +
                     "' is not a finite number: '" + cell + "'");
  }
  return v;
}

struct Columns {
  std::vector<double> times;
  std::vector<double> values;
};

Columns read_columns(const std::filesystem::path& path, const std::string& time_column,
                     const std::string& value_column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    header = split_commas(line);
    break;
  }
  if (header.empty()) throw ParseError("'" + path.string() + "': missing header row");

  auto index_of = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw ParseError("'" + path.string() + "': no column named '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ti = index_of(time_column);
  const std::size_t vi = index_of(value_column);

  Columns cols;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto cells = split_commas(line);
    if (cells.size() <= std::max(ti, vi)) {
      throw ParseError("line " + std::to_string(line_no) + ": too few columns");
    }
    cols.times.push_back(parse_cell(cells[ti], line_no, time_column));
    cols.values.push_back(parse_cell(cells[vi], line_no, value_column));
  }
  return cols;
}

}  // namespace

TimeSeries::TimeSeries(double t0, double dt, std::vector<double> values, double noise_variance)
    : t0_(t0), dt_(dt), values_(std::move(values)), noise_variance_(noise_variance) {
  check_grid(dt_, values_.size(), noise_variance_);
}

TimeSeries TimeSeries::from_samples(std::span<const double> times, std::vector<double> values,
                                    double noise_variance) {
  if (times.size() != values.size()) {
    throw ArgumentError("TimeSeries: times and values differ in length");
  }
  if (times.size() < 2) throw ArgumentError("TimeSeries: need at least two samples");
  const std::size_t n = times.size();
  const double dt = (times[n - 1] - times[0]) / static_cast<double>(n - 1);
  if (!(dt > 0.0)) throw ArgumentError("TimeSeries: times must be strictly increasing");
  const double scale = std::max({std::abs(times[0]), std::abs(times[n - 1]), dt});
  for (std::size_t k = 1; k < n; ++k) {
    if (!(times[k] > times[k - 1])) {
      throw ArgumentError("TimeSeries: times must be strictly increasing (row " +
                          std::to_string(k) + ")");
    }
    const double step = times[k] - times[k - 1];
    const double expected = times[0] + static_cast<double>(k) * dt;
    if (std::abs(step - dt) > kSpacingTolerance * dt &&
        std::abs(times[k] - expected) > kSpacingTolerance * scale) {
      throw NonUniformSpacingError("TimeSeries: non-uniform spacing at row " + std::to_string(k) +
                                   " (step " + std::to_string(step) + ", expected " +
                                   std::to_string(dt) + ")");
    }
  }
  return TimeSeries(times[0], dt, std::move(values), noise_variance);
}

std::vector<double> TimeSeries::times() const {
  std::vector<double> t(size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = time(k);
  return t;
}

TimeSeries TimeSeries::with_values(std::vector<double> values) const {
  if (values.size() != size()) throw ArgumentError("TimeSeries: value count mismatch");
  return TimeSeries(t0_, dt_, std::move(values), noise_variance_);
}

TimeSeries TimeSeries::with_noise_variance(double noise_variance) const {
  return TimeSeries(t0_, dt_, values_, noise_variance);
}

bool TimeSeries::same_grid(const TimeSeries& other) const noexcept {
  if (size() != other.size()) return false;
  const double scale = std::max({std::abs(t0_), std::abs(other.t0_), dt_});
  return std::abs(dt_ - other.dt_) <= kSpacingTolerance * dt_ &&
         std::abs(t0_ - other.t0_) <= kSpacingTolerance * scale;
}

TimeSeries generate_anharmonic(const AnharmonicParams& params, double t_min, double t_max,
                               double dt) {
  if (!(t_min < t_max) || !(dt > 0.0)) {
    throw ArgumentError("generate_anharmonic: need t_min < t_max and dt > 0");
  }
  if (!(params.a > 0.0)) throw ArgumentError("generate_anharmonic: a must be positive");
  const auto n = static_cast<std::size_t>(std::floor((t_max - t_min) / dt + 1e-9)) + 1;
  std::vector<double> v(n);
  const double inv2a2 = 1.0 / (2.0 * params.a * params.a);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t_min + static_cast<double>(k) * dt;
    const double c = std::cos(params.omega0 * t + params.phi0);
    v[k] = std::exp(-t * t * inv2a2) * c * c * c;
  }
  return TimeSeries(t_min, dt, std::move(v), 0.0);
}

TimeSeries add_white_noise(const TimeSeries& ts, double sd, std::uint64_t seed) {
  if (!(sd >= 0.0)) throw ArgumentError("add_white_noise: sd must be >= 0");
  std::vector<double> v(ts.values().begin(), ts.values().end());
  if (sd > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sd);
    for (double& x : v) x += noise(rng);
  }
  return TimeSeries(ts.t0(), ts.dt(), std::move(v), sd * sd);
}

TimeSeries detrend_poly(const TimeSeries& ts, int order) {
  if (order < 0) throw ArgumentError("detrend_poly: order must be >= 0");
  const auto n = static_cast<Eigen::Index>(ts.size());
  if (n <= order) {
    throw ArgumentError("detrend_poly: rank-deficient design (N <= order)");
  }
  const double mid = ts.t0() + 0.5 * static_cast<double>(n - 1) * ts.dt();
  const double half = 0.5 * static_cast<double>(n - 1) * ts.dt();

  // Legendre basis on the scaled axis keeps the columns close to orthogonal.
  Eigen::MatrixXd basis(n, order + 1);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double x = (ts.time(static_cast<std::size_t>(k)) - mid) / half;
    double p_prev = 1.0;
    double p = x;
    basis(k, 0) = 1.0;
    if (order >= 1) basis(k, 1) = x;
    for (int m = 2; m <= order; ++m) {
      const double next = ((2.0 * m - 1.0) * x * p - (m - 1.0) * p_prev) / m;
      p_prev = p;
      p = next;
      basis(k, m) = p;
    }
  }
  Eigen::Map<const Eigen::VectorXd> y(ts.values().data(), n);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
  if (qr.rank() < order + 1) throw ArgumentError("detrend_poly: rank-deficient design");
  const Eigen::VectorXd coef = qr.solve(y);
  Eigen::VectorXd resid = y - basis * coef;
  // One refinement pass tightens orthogonality of the residual.
  resid -= basis * qr.solve(resid);
  return ts.with_values(std::vector<double>(resid.data(), resid.data() + n));
}

TimeSeries load_csv(const std::filesystem::path& path, const std::string& time_column,
                    const std::string& value_column) {
  auto cols = read_columns(path, time_column, value_column);
  return TimeSeries::from_samples(cols.times, std::move(cols.values), 0.0);
}

TimeSeries load_csv_nominal(const std::filesystem::path& path, const std::string& time_column,
                            const std::string& value_column, double step) {
  if (!(step > 0.0)) throw ArgumentError("load_csv_nominal: step must be positive");
  auto cols = read_columns(path, time_column, value_column);
  if (cols.values.size() < 2) throw ArgumentError("load_csv_nominal: need at least two rows");
  // Recorded times may jitter around the nominal grid but must not skip or repeat a slot.
  for (std::size_t k = 1; k < cols.times.size(); ++k) {
    const double gap = cols.times[k] - cols.times[k - 1];
    if (!(gap > 0.5 * step && gap < 1.5 * step)) {
      throw NonUniformSpacingError("row " + std::to_string(k + 1) + ": spacing " + std::to_string(gap) +
                                   " is not within half a step of " + std::to_string(step));
    }
  }
  return TimeSeries(cols.times.front(), step, std::move(cols.values), 0.0);
}

void write_csv(std::ostream& out, const TimeSeries& ts) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "# noise_variance=" << ts.noise_variance() << "\n";
  out << "time,value\n";
  for (std::size_t k = 0; k < ts.size(); ++k) out << ts.time(k) << "," << ts.values()[k] << "\n";
}

void write_csv(const std::filesystem::path& path, const TimeSeries& ts) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_csv(out, ts);
}

}  // namespace gpfourier

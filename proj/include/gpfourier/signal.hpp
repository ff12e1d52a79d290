#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace gpfourier {

/// Uniformly sampled real signal y_k = f(t_k) + e_k with t_k = t0 + k dt and
/// i.i.d. Gaussian observation noise of variance noise_variance.
class TimeSeries {
 public:
  TimeSeries(double t0, double dt, std::vector<double> values, double noise_variance = 0.0);

  /// Builds a series from explicit timestamps; rejects spacing that deviates from
  /// uniform by more than 1e-9 relative.
  static TimeSeries from_samples(std::span<const double> times, std::vector<double> values,
                                 double noise_variance = 0.0);

  std::size_t size() const noexcept { return values_.size(); }
  double t0() const noexcept { return t0_; }
  double dt() const noexcept { return dt_; }
  double time(std::size_t k) const noexcept { return t0_ + static_cast<double>(k) * dt_; }
  std::vector<double> times() const;
  /// Record length T = N dt.
  double duration() const noexcept { return static_cast<double>(size()) * dt_; }
  double noise_variance() const noexcept { return noise_variance_; }
  std::span<const double> values() const noexcept { return values_; }

  TimeSeries with_values(std::vector<double> values) const;
  TimeSeries with_noise_variance(double noise_variance) const;

  /// True when both series share N, t0 and dt (to 1e-9 relative).
  bool same_grid(const TimeSeries& other) const noexcept;

 private:
  double t0_;
  double dt_;
  std::vector<double> values_;
  double noise_variance_;
};

struct AnharmonicParams {
  double a = 15.0;       // envelope scale
  double omega0 = 0.0;   // rad per time unit
  double phi0 = 0.0;     // rad, in [0, 2 pi)
};

/// exp(-t^2/(2a^2)) cos^3(omega0 t + phi0) on t_k = t_min + k dt, t_k <= t_max.
TimeSeries generate_anharmonic(const AnharmonicParams& params, double t_min, double t_max,
                               double dt);

/// Adds N(0, sd^2) draws from a generator seeded with `seed`; sets noise_variance = sd^2.
TimeSeries add_white_noise(const TimeSeries& ts, double sd, std::uint64_t seed);

/// Removes the least-squares polynomial of the given order. The fit uses a time axis
/// shifted and scaled onto [-1, 1] and a QR solve.
TimeSeries detrend_poly(const TimeSeries& ts, int order);

/// Reads a comma-separated file with a header row; columns are selected by name.
/// Blank lines and lines starting with '#' are skipped.
TimeSeries load_csv(const std::filesystem::path& path, const std::string& time_column,
                    const std::string& value_column);

/// Same as load_csv but replaces the file's timestamps with the nominal grid
/// t_k = first_time + k * step (for calendar data such as monthly records).
TimeSeries load_csv_nominal(const std::filesystem::path& path, const std::string& time_column,
                            const std::string& value_column, double step);

/// Writes `# noise_variance=<v>` followed by a `time,value` table.
void write_csv(std::ostream& out, const TimeSeries& ts);
void write_csv(const std::filesystem::path& path, const TimeSeries& ts);

}  // namespace gpfourier

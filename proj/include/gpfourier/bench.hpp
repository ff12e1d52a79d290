#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpfourier/dft.hpp"
#include "gpfourier/signal.hpp"

namespace gpfourier {

/// Randomized anharmonic-signal study. Estimator names: bgf, dft (square taper), hann,
/// dpss2, dpss3, dpss4 (multitaper with NW = (K + 1) / 2).
struct StudyConfig {
  std::size_t n_trials = 200;
  double noise_sd = 0.0;
  double phi_min = 0.0;
  double phi_max = 6.283185307179586;
  double omega_min = 0.6 * 3.141592653589793;
  double omega_max = 1.2 * 3.141592653589793;
  /// a is drawn from (a_min, a_max]; a = 0 would give an all-zero signal.
  double a_min = 0.5;
  double a_max = 30.0;
  std::uint64_t seed = 0;
  std::vector<std::string> estimators{"bgf", "dft", "hann"};
  /// log10 power threshold separating passband from stopband.
  double theta = -6.0;
  double t_min = -25.0;
  double t_max = 25.0;
  double dt = 0.05;
  /// BGF: spectral smoothing width in DFT bins.
  double se_scale_bins = 1.0;
  /// BGF noise variance when noise_sd == 0; with noise the true variance noise_sd^2 is used.
  double noiseless_lambda = 1e-6;
  double prior_weight = 1.0;
  std::size_t max_iters = 5000;
  /// Worker threads; 0 uses BGF_THREADS or the hardware concurrency.
  std::size_t threads = 0;

  void validate() const;
};

nlohmann::ordered_json to_json(const StudyConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
StudyConfig study_config_from_json(const nlohmann::json& j);
StudyConfig read_study_config(const std::filesystem::path& path);

/// Registry of estimator names in tie-breaking order.
const std::vector<std::string>& estimator_registry();

/// Analytic Fourier transform of exp(-t^2/(2a^2)) cos^3(omega0 t + phi0), 1/(2 pi) convention.
ComplexSpectrum ground_truth_spectrum(const AnharmonicParams& params, std::span<const double> omega_grid);

struct BandDeviation {
  /// Absent when the band holds no frequencies.
  std::optional<double> passband;
  std::optional<double> stopband;
};

/// Sum of |est - truth| over {log10 truth > theta} and over the complement.
BandDeviation band_deviation(const PowerSpectrum& est, const PowerSpectrum& truth, double theta);
/// Same on log10 power (both clamped at 1e-300); the band split still uses truth.
BandDeviation band_log_deviation(const PowerSpectrum& est, const PowerSpectrum& truth, double theta);

/// Power-spectrum estimate of `name` on the DFT grid of `ts`. DFT-based estimates are
/// energy-normalized to `truth`.
PowerSpectrum run_estimator(const std::string& name, const TimeSeries& ts, const PowerSpectrum& truth,
                            const StudyConfig& cfg);

struct EstimatorOutcome {
  std::string estimator;
  bool failed = false;
  std::string error;
  BandDeviation power;
  BandDeviation log_power;
};

struct TrialRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  AnharmonicParams params;
  std::vector<EstimatorOutcome> outcomes;  // in config estimator order
  /// rank (1-based) per estimator; 0 when the band is absent.
  std::vector<std::size_t> pass_rank;
  std::vector<std::size_t> stop_rank;
};

struct StudyResult {
  StudyConfig config;
  std::vector<TrialRecord> trials;
  /// histogram[e][r] = trials in which estimator e took rank r + 1.
  std::vector<std::vector<std::size_t>> pass_hist;
  std::vector<std::vector<std::size_t>> stop_hist;
  std::vector<std::size_t> failures;

  /// Fraction of trials in which `estimator` ranked first in the band ("passband"/"stopband").
  double rank1_fraction(const std::string& estimator, const std::string& band) const;
};

/// splitmix64 finalizer; trial i is seeded with mix_seed(master ^ i).
std::uint64_t mix_seed(std::uint64_t x) noexcept;

/// Draws the trial's signal parameters from its seed.
AnharmonicParams sample_params(const StudyConfig& cfg, std::uint64_t trial_seed);

StudyResult run_study(const StudyConfig& cfg);

/// Deterministic (no timings); identical configs serialize byte-identically.
nlohmann::ordered_json to_json(const StudyResult& result);
void write_deviations_csv(const std::filesystem::path& path, const StudyResult& result);
void write_ranks_csv(const std::filesystem::path& path, const StudyResult& result);
/// Writes result.json, deviations.csv and ranks.csv into `dir`; returns the paths.
std::vector<std::filesystem::path> write_study(const std::filesystem::path& dir, const StudyResult& result);

}  // namespace gpfourier

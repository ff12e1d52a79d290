#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpfourier/signal.hpp"

namespace gpfourier {

/// Spectral density  s(xi) = sum_j exp(a_j) exp(-(xi - xi_j)^2 / (2 sigma^2))
/// restricted to positive combinations of squared-exponential bumps at fixed centers.
struct SpectralModel {
  std::vector<double> centers;      // xi_j, strictly increasing, rad per time unit
  std::vector<double> log_weights;  // a_j
  double se_scale = 1.0;            // sigma > 0, rad per time unit
  double noise_variance = 0.0;      // lambda >= 0

  std::size_t size() const noexcept { return centers.size(); }
  /// Throws ArgumentError when an invariant is violated.
  void validate() const;
};

struct FitOptions {
  double step_size = 1.0;
  std::size_t max_iters = 5000;
  /// Stop when the sup-norm of the gradient falls below grad_tol times its initial value.
  double grad_tol = 1e-6;
  double prior_weight = 1.0;
  /// Step multiplier applied after every accepted step; 1 disables growth.
  double step_growth = 2.0;
  int max_halvings = 30;
  /// Average log-weights over +/- xi pairs (real-valued data).
  bool symmetrize = true;

  void validate() const;
};

struct FitResult {
  SpectralModel model;
  std::size_t iterations = 0;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  bool converged = false;
  /// Objective after initialization and after every accepted step.
  std::vector<double> objective_trace;
};

/// s(xi) by direct summation over all centers.
double density_eval(const SpectralModel& model, double xi);

/// Per-frequency complex-normal log-likelihood summed over centers,
/// sum_j [ -P_j / (s_j + lambda) - log(pi (s_j + lambda)) ], scaled by n_trials for an
/// averaged periodogram.
double log_likelihood(const SpectralModel& model, std::span<const double> periodogram,
                      double n_trials = 1.0);

/// -1/2 sum_{k,j} exp(a_k) K_SE(xi_k, xi_j) exp(a_j).
double log_prior(const SpectralModel& model);

/// d log_likelihood / d a_k = exp(a_k) sum_j (P_j - (s_j + lambda)) / (s_j + lambda)^2 K_SE(xi_k, xi_j)
std::vector<double> likelihood_gradient(const SpectralModel& model,
                                        std::span<const double> periodogram,
                                        double n_trials = 1.0);

/// d log_prior / d a_k = -exp(a_k) sum_j K_SE(xi_k, xi_j) exp(a_j)
std::vector<double> prior_gradient(const SpectralModel& model);

/// |tapered DFT|^2 with a unit-energy Hann taper, on dft_frequencies(ts).
std::vector<double> hann_periodogram(const TimeSeries& ts);

/// Four DFT bins: 4 * 2 pi / T.
double default_se_scale(const TimeSeries& ts);

/// Median periodogram value over the upper quarter of |frequency|.
double estimate_noise_floor(std::span<const double> centers, std::span<const double> periodogram);

/// log(max(P_j, eps) / G_j) with eps = 1e-12 max(P) and G_j = sum_m K_SE(xi_j, xi_m).
SpectralModel initial_model(std::span<const double> centers, std::span<const double> periodogram,
                            double se_scale, double noise_variance);

/// Averages log-weights of mirrored centers (xi_j, -xi_j).
void symmetrize(SpectralModel& model);

/// MAP gradient ascent on the log-weights given a trial-averaged periodogram.
FitResult fit_map_periodogram(std::span<const double> centers,
                              std::span<const double> mean_periodogram, std::size_t n_trials,
                              double se_scale, double noise_variance, const FitOptions& opts);

/// MAP gradient ascent summing the log-likelihood over all trials (shared uniform grid).
FitResult fit_map(std::span<const TimeSeries> trials, double se_scale, double noise_variance,
                  const FitOptions& opts = {});

nlohmann::ordered_json to_json(const SpectralModel& model);
SpectralModel spectral_model_from_json(const nlohmann::json& j);
void write_model(const std::filesystem::path& path, const SpectralModel& model);
SpectralModel read_model(const std::filesystem::path& path);

}  // namespace gpfourier

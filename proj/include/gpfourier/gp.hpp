#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gpfourier/signal.hpp"
#include "gpfourier/speclearn.hpp"

namespace gpfourier {

using cplx = std::complex<double>;

/// Squared exponential  beta exp(-tau^2 / (2 nu^2)).
struct SeKernel {
  double scale = 1.0;      // nu
  double amplitude = 1.0;  // beta
};

/// Band-limited periodic kernel  beta sum_k Phi_k(t) conj(Phi_k(t')),  Phi_k(t) = exp(i w_k t) / N,
/// w_k = 2 pi k / T over the N DFT integers.
struct BandLimitedKernel {
  double period = 1.0;     // T
  std::size_t count = 1;   // N
  double amplitude = 1.0;  // beta
};

/// Band-limited kernel multiplied by exp(-tau^2 / (2 nu^2)); zero at nonzero sample lags
/// but not periodic.
struct RelaxedBandLimitedKernel {
  double period = 1.0;
  std::size_t count = 1;
  double amplitude = 1.0;
  double scale = 1.0;  // nu
};

/// Covariance obtained by inverse-transforming a learned spectral density:
///   K(tau) = gain sigma exp(-sigma^2 tau^2 / 2) sum_j exp(h_j) cos(xi_j tau).
/// The cosine form is the real part of the complex exponential sum; it is the covariance of
/// a real process whose spectral measure is mirrored about zero.
class LearnedKernel {
 public:
  explicit LearnedKernel(SpectralModel model, double gain = 1.0);

  const SpectralModel& model() const noexcept { return model_; }
  double gain() const noexcept { return gain_; }
  double sigma() const noexcept { return model_.se_scale; }
  /// exp(h_j).
  std::span<const double> weights() const noexcept { return weights_; }

  double eval(double tau) const;
  /// Analog Fourier transform of eval() at omega.
  double fourier(double omega) const;

 private:
  SpectralModel model_;
  double gain_;
  std::vector<double> weights_;
  bool uniform_centers_ = false;
  double center_step_ = 0.0;
};

using KernelSpec = std::variant<LearnedKernel, SeKernel, BandLimitedKernel, RelaxedBandLimitedKernel>;

/// "bgf", "se", "bl" or "rbl".
std::string_view kernel_name(const KernelSpec& spec);
void validate(const KernelSpec& spec);
bool is_stationary_transformable(const KernelSpec& spec);

/// K(t, t'), complex for bl / rbl.
cplx kernel_eval(const KernelSpec& spec, double t, double t_prime);
/// Real part of kernel_eval; the covariance used for regression on real data.
double kernel_eval_real(const KernelSpec& spec, double t, double t_prime);

Eigen::MatrixXcd gram_matrix(const KernelSpec& spec, std::span<const double> times);
Eigen::MatrixXd gram_matrix_real(const KernelSpec& spec, std::span<const double> times);

struct GpOptions {
  /// Escalate diagonal jitter from 1e-12 to 1e-6 of trace/N when the solve fails.
  bool allow_jitter = true;
  double residual_tol = 1e-8;
  /// Direct solves are refused above this size.
  std::size_t max_size = 6000;
};

/// Posterior mean  m(t) = sum_k w_k K(t, t_k),  w = (K + lambda I)^{-1} y.
class GPPosterior {
 public:
  GPPosterior(std::vector<double> times, std::vector<double> weights, KernelSpec kernel,
              double noise_variance, double jitter = 0.0);

  std::span<const double> times() const noexcept { return times_; }
  std::span<const double> weights() const noexcept { return weights_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  double noise_variance() const noexcept { return noise_variance_; }
  /// Diagonal jitter added on top of noise_variance by the solver.
  double jitter() const noexcept { return jitter_; }
  /// Relative residual of the final solve.
  double residual() const noexcept { return residual_; }
  void set_residual(double r) noexcept { residual_ = r; }

 private:
  std::vector<double> times_;
  std::vector<double> weights_;
  KernelSpec kernel_;
  double noise_variance_;
  double jitter_;
  double residual_ = 0.0;
};

GPPosterior fit_gp(std::span<const double> times, std::span<const double> values,
                   const KernelSpec& spec, double lambda, const GpOptions& opts = {});
GPPosterior fit_gp(const TimeSeries& ts, const KernelSpec& spec, double lambda,
                   const GpOptions& opts = {});

double posterior_mean(const GPPosterior& post, double t);
std::vector<double> posterior_mean(const GPPosterior& post, std::span<const double> ts);

nlohmann::ordered_json to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const GPPosterior& post);
GPPosterior posterior_from_json(const nlohmann::json& j);
void write_posterior(const std::filesystem::path& path, const GPPosterior& post);

}  // namespace gpfourier

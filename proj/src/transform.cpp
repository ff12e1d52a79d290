#include "gpfourier/transform.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numbers>

#include "gpfourier/conventions.hpp"
#include "gpfourier/error.hpp"

namespace gpfourier {

namespace {

constexpr double kBumpCutoff = 37.5;

// sum_k w_k exp(-i w t_k) for every w in the grid.
std::vector<cplx> weight_phase_sums(const GPPosterior& post, std::span<const double> omega_grid) {
  const auto t = post.times();
  const auto w = post.weights();
  std::vector<cplx> out(omega_grid.size());
  for (std::size_t m = 0; m < omega_grid.size(); ++m) {
    const double omega = omega_grid[m];
    cplx acc{};
    for (std::size_t k = 0; k < t.size(); ++k) acc += w[k] * std::polar(1.0, -omega * t[k]);
    out[m] = acc;
  }
  return out;
}

// Mirrored Gaussian bump sum  sum_j c_j [exp(-(w - x_j)^2 / (2 s^2)) + exp(-(w + x_j)^2 / (2 s^2))] / 2
// over sorted centers x_j, skipping terms below 1e-300.
double mirrored_bumps(std::span<const double> centers, std::span<const double> coeffs, double s,
                      double omega) {
  const double reach = kBumpCutoff * s;
  double sum = 0.0;
  for (double target : {omega, -omega}) {
    auto lo = std::lower_bound(centers.begin(), centers.end(), target - reach);
    auto hi = std::upper_bound(centers.begin(), centers.end(), target + reach);
    for (auto it = lo; it != hi; ++it) {
      const auto j = static_cast<std::size_t>(it - centers.begin());
      const double d = (target - *it) / s;
      sum += coeffs[j] * std::exp(-0.5 * d * d);
    }
  }
  return 0.5 * sum;
}

const LearnedKernel& require_learned(const GPPosterior& post, const char* who) {
  const auto* k = std::get_if<LearnedKernel>(&post.kernel());
  if (k == nullptr) {
    throw ArgumentError(std::string(who) + ": posterior kernel is '" +
                        std::string(kernel_name(post.kernel())) + "', expected 'bgf'");
  }
  return *k;
}

double kernel_ft(const KernelSpec& spec, double omega) {
  if (const auto* k = std::get_if<LearnedKernel>(&spec)) return k->fourier(omega);
  if (const auto* k = std::get_if<SeKernel>(&spec)) {
    return k->amplitude * conventions::gaussian_ft(k->scale, omega);
  }
  throw ArgumentError("stationary Fourier transform: kernel '" + std::string(kernel_name(spec)) +
                      "' is not supported (use bgf or se)");
}

std::vector<double> bl_frequencies(double period, std::size_t count) {
  std::vector<double> w;
  w.reserve(count);
  for (long k : dft_indices(count)) w.push_back(conventions::kTwoPi * static_cast<double>(k) / period);
  return w;
}

}  // namespace

KernelTransform fourier_transform(const KernelSpec& spec) {
  if (!is_stationary_transformable(spec)) {
    throw ArgumentError("fourier transform: kernel '" + std::string(kernel_name(spec)) +
                        "' is not supported (use bgf or se)");
  }
  return {"fourier", std::string(kernel_name(spec)), [spec](double s, double t_k) {
            return kernel_ft(spec, s) * std::polar(1.0, -s * t_k);
          }};
}

KernelTransform quadrature_transform(const SeKernel& kernel, double a, double b) {
  if (!(a < b)) throw ArgumentError("quadrature: need a < b");
  const double c = kernel.amplitude * kernel.scale * std::sqrt(std::numbers::pi / 2.0);
  const double inv = 1.0 / (std::numbers::sqrt2 * kernel.scale);
  return {"quadrature", "se", [=](double, double t_k) {
            return cplx(c * (std::erf((b - t_k) * inv) - std::erf((a - t_k) * inv)));
          }};
}

KernelTransform rbl_fourier_transform(const RelaxedBandLimitedKernel& kernel) {
  const auto freqs = bl_frequencies(kernel.period, kernel.count);
  std::vector<double> ones(freqs.size(), 1.0);
  const double n = static_cast<double>(kernel.count);
  const double c = kernel.amplitude * kernel.scale * conventions::kInvSqrtTwoPi / (n * n);
  // Bump widths in frequency are 1/nu.
  const double width = 1.0 / kernel.scale;
  return {"rbl-fourier", "rbl", [=](double s, double t_k) {
            return c * mirrored_bumps(freqs, ones, width, s) * std::polar(1.0, -s * t_k);
          }};
}

KernelTransform make_transform(std::string_view name, const KernelSpec& spec, double a, double b) {
  if (name == "fourier") return fourier_transform(spec);
  if (name == "quadrature") {
    const auto* se = std::get_if<SeKernel>(&spec);
    if (se == nullptr) throw ArgumentError("quadrature transform requires the se kernel");
    return quadrature_transform(*se, a, b);
  }
  if (name == "rbl-fourier") {
    const auto* rbl = std::get_if<RelaxedBandLimitedKernel>(&spec);
    if (rbl == nullptr) throw ArgumentError("rbl-fourier transform requires the rbl kernel");
    return rbl_fourier_transform(*rbl);
  }
  throw ArgumentError("unknown transform '" + std::string(name) +
                      "' (expected fourier, quadrature or rbl-fourier)");
}

std::vector<cplx> integral_transform(const GPPosterior& post, const KernelTransform& kt,
                                     std::span<const double> s_grid) {
  if (kt.kernel != kernel_name(post.kernel())) {
    std::clog << "warning: transform '" << kt.name << "' was derived for kernel '" << kt.kernel
              << "' but the posterior uses '" << kernel_name(post.kernel()) << "'\n";
  }
  const auto t = post.times();
  const auto w = post.weights();
  std::vector<cplx> out(s_grid.size());
  for (std::size_t m = 0; m < s_grid.size(); ++m) {
    cplx acc{};
    for (std::size_t k = 0; k < t.size(); ++k) acc += w[k] * kt.apply(s_grid[m], t[k]);
    out[m] = acc;
  }
  return out;
}

ComplexSpectrum bgf_fourier(const GPPosterior& post, std::span<const double> omega_grid) {
  const auto& kernel = require_learned(post, "bgf_fourier");
  const auto& model = kernel.model();
  const double c = kernel.gain() * conventions::kInvSqrtTwoPi;
  const auto phases = weight_phase_sums(post, omega_grid);

  ComplexSpectrum out;
  out.convention = "analog";
  out.freqs.assign(omega_grid.begin(), omega_grid.end());
  out.values.resize(omega_grid.size());
  for (std::size_t m = 0; m < omega_grid.size(); ++m) {
    const double bumps = mirrored_bumps(model.centers, kernel.weights(), model.se_scale, omega_grid[m]);
    out.values[m] = c * bumps * phases[m];
  }
  return out;
}

cplx stationary_fourier(const GPPosterior& post, double omega) {
  const double ft = kernel_ft(post.kernel(), omega);
  const auto t = post.times();
  const auto w = post.weights();
  cplx acc{};
  for (std::size_t k = 0; k < t.size(); ++k) acc += w[k] * std::polar(1.0, -omega * t[k]);
  return ft * acc;
}

ComplexSpectrum stationary_fourier(const GPPosterior& post, std::span<const double> omega_grid) {
  ComplexSpectrum out;
  out.convention = "analog";
  out.freqs.assign(omega_grid.begin(), omega_grid.end());
  out.values.resize(omega_grid.size());
  for (std::size_t m = 0; m < omega_grid.size(); ++m) {
    out.values[m] = stationary_fourier(post, omega_grid[m]);
  }
  return out;
}

double gp_quadrature(const GPPosterior& post, double a, double b) {
  const auto* se = std::get_if<SeKernel>(&post.kernel());
  if (se == nullptr) throw ArgumentError("gp_quadrature: posterior kernel must be se");
  if (!(a < b)) throw ArgumentError("gp_quadrature: need a < b");
  const auto kt = quadrature_transform(*se, a, b);
  const double s = 0.0;
  return integral_transform(post, kt, std::span<const double>(&s, 1)).front().real();
}

ComplexSpectrum rbl_fourier(const GPPosterior& post, std::span<const double> omega_grid) {
  const auto* k = std::get_if<RelaxedBandLimitedKernel>(&post.kernel());
  if (k == nullptr) throw ArgumentError("rbl_fourier: posterior kernel must be rbl");
  const auto freqs = bl_frequencies(k->period, k->count);
  const std::vector<double> ones(freqs.size(), 1.0);
  const double n = static_cast<double>(k->count);
  const double c = k->amplitude * k->scale * conventions::kInvSqrtTwoPi / (n * n);
  const auto phases = weight_phase_sums(post, omega_grid);

  ComplexSpectrum out;
  out.convention = "analog";
  out.freqs.assign(omega_grid.begin(), omega_grid.end());
  out.values.resize(omega_grid.size());
  for (std::size_t m = 0; m < omega_grid.size(); ++m) {
    out.values[m] = c * mirrored_bumps(freqs, ones, 1.0 / k->scale, omega_grid[m]) * phases[m];
  }
  return out;
}

std::vector<Impulse> bl_fourier_impulses(const GPPosterior& post) {
  const auto* k = std::get_if<BandLimitedKernel>(&post.kernel());
  if (k == nullptr) throw ArgumentError("bl_fourier_impulses: posterior kernel must be bl");
  const double n = static_cast<double>(k->count);
  const double c = 0.5 * k->amplitude / (n * n);
  const auto t = post.times();
  const auto w = post.weights();
  // cos(w_k tau) = (exp(i w_k tau) + exp(-i w_k tau)) / 2 puts half a mass at each of +/- w_k.
  std::map<long, cplx> masses;
  for (long idx : dft_indices(k->count)) {
    const double omega = conventions::kTwoPi * static_cast<double>(idx) / k->period;
    cplx phase{};
    for (std::size_t j = 0; j < t.size(); ++j) phase += w[j] * std::polar(1.0, -omega * t[j]);
    masses[idx] += c * phase;
    masses[-idx] += c * std::conj(phase);
  }
  std::vector<Impulse> out;
  out.reserve(masses.size());
  for (const auto& [idx, mass] : masses) {
    out.push_back({conventions::kTwoPi * static_cast<double>(idx) / k->period, mass});
  }
  return out;
}

BgfFit fit_bgf(const TimeSeries& ts, double se_scale, double lambda, const FitOptions& fit_opts,
               const GpOptions& gp_opts) {
  return fit_bgf(std::span<const TimeSeries>(&ts, 1), ts, se_scale, lambda, fit_opts, gp_opts);
}

BgfFit fit_bgf(std::span<const TimeSeries> trials, const TimeSeries& ts, double se_scale,
               double lambda, const FitOptions& fit_opts, const GpOptions& gp_opts) {
  auto spectrum = fit_map(trials, se_scale, lambda, fit_opts);
  LearnedKernel kernel(spectrum.model, conventions::learned_kernel_gain(ts.dt()));
  auto posterior = fit_gp(ts, kernel, lambda, gp_opts);
  return {std::move(spectrum), std::move(posterior)};
}

std::vector<double> default_transform_grid(std::size_t n, double dt) {
  const double duration = static_cast<double>(n) * dt;
  const double step = conventions::kTwoPi / (8.0 * duration);
  const double limit = 1.2 * std::numbers::pi / dt;
  const auto half = static_cast<long>(std::floor(limit / step));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(2 * half + 1));
  for (long i = -half; i <= half; ++i) grid.push_back(static_cast<double>(i) * step);
  return grid;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
  if (count == 0) throw ArgumentError("linear_grid: count must be >= 1");
  if (count == 1) return {lo};
  if (!(hi > lo)) throw ArgumentError("linear_grid: need hi > lo");
  std::vector<double> g(count);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) g[i] = lo + static_cast<double>(i) * step;
  return g;
}

}  // namespace gpfourier

#pragma once

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gpfourier/dft.hpp"
#include "gpfourier/gp.hpp"
#include "gpfourier/speclearn.hpp"

namespace gpfourier {

/// Closed-form kernel integral  (s, t_k) -> integral A(s, t) K(t, t_k) dt  for one kernel family.
/// Transforming the posterior mean is then  sum_k w_k apply(s, t_k).
struct KernelTransform {
  std::string name;
  /// kernel_name() of the family the closed form was derived for.
  std::string kernel;
  std::function<cplx(double s, double t_k)> apply;
};

/// Analog Fourier transform (1/(2 pi)) integral exp(-i s t) K(t - t_k) dt; bgf or se only.
KernelTransform fourier_transform(const KernelSpec& spec);
/// integral_a^b K(t, t_k) dt for the se kernel; s is ignored.
KernelTransform quadrature_transform(const SeKernel& kernel, double a, double b);
/// Analog Fourier transform of the (real part of the) rbl kernel.
KernelTransform rbl_fourier_transform(const RelaxedBandLimitedKernel& kernel);

/// Registry lookup by name: "fourier", "quadrature" (uses [a, b]) or "rbl-fourier".
KernelTransform make_transform(std::string_view name, const KernelSpec& spec, double a = 0.0,
                               double b = 0.0);

/// out[m] = sum_k w_k kt.apply(s_m, t_k).
std::vector<cplx> integral_transform(const GPPosterior& post, const KernelTransform& kt,
                                     std::span<const double> s_grid);

/// Fourier transform of a learned-kernel posterior mean, evaluated as
///   gain / (2 sqrt(2 pi)) sum_j exp(h_j) [G(w - xi_j) + G(w + xi_j)]  *  sum_k w_k exp(-i w t_k)
/// with G(d) = exp(-d^2 / (2 sigma^2)). For a mirror-symmetric model the bump sum equals
/// gain / sqrt(2 pi) sum_j exp(h_j) G(w - xi_j).
ComplexSpectrum bgf_fourier(const GPPosterior& post, std::span<const double> omega_grid);

/// (analytic FT of the kernel at w) * sum_k w_k exp(-i w t_k); bgf or se kernels.
cplx stationary_fourier(const GPPosterior& post, double omega);
ComplexSpectrum stationary_fourier(const GPPosterior& post, std::span<const double> omega_grid);

/// integral_a^b m(t) dt for an se-kernel posterior, via the error-function closed form.
double gp_quadrature(const GPPosterior& post, double a, double b);

/// beta nu / (sqrt(2 pi) N^2) * (mirrored sum_k exp(-nu^2 (w - w_k)^2 / 2)) * sum_j w_j exp(-i w t_j)
ComplexSpectrum rbl_fourier(const GPPosterior& post, std::span<const double> omega_grid);

/// A Dirac mass  mass * delta(w - omega).
struct Impulse {
  double omega = 0.0;
  cplx mass;
};

/// Fourier transform of a bl-kernel posterior mean: impulses at the DFT frequencies.
std::vector<Impulse> bl_fourier_impulses(const GPPosterior& post);

/// Learned spectrum, kernel and posterior for one series.
struct BgfFit {
  FitResult spectrum;
  GPPosterior posterior;
};

/// Full pipeline: MAP spectral density from the Hann periodogram, learned kernel with gain
/// dt / sqrt(2 pi) (matching the periodogram's units), then GP regression with noise lambda.
BgfFit fit_bgf(const TimeSeries& ts, double se_scale, double lambda, const FitOptions& fit_opts = {},
               const GpOptions& gp_opts = {});
/// Same with the density learned from several trials on a shared grid; the posterior uses `ts`.
BgfFit fit_bgf(std::span<const TimeSeries> trials, const TimeSeries& ts, double se_scale,
               double lambda, const FitOptions& fit_opts = {}, const GpOptions& gp_opts = {});

/// Evaluation grid 8x denser than the DFT grid, spanning +/-1.2 times the Nyquist frequency.
std::vector<double> default_transform_grid(std::size_t n, double dt);

/// Evenly spaced grid of `count` points on [lo, hi] (count == 1 gives {lo}).
std::vector<double> linear_grid(double lo, double hi, std::size_t count);

}  // namespace gpfourier

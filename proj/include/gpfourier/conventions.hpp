#pragma once

// Every Fourier normalization constant used by the library lives here.
//
//   analog transform   F[f](w) = 1/(2 pi) * integral exp(-i w t) f(t) dt
//   DFT coefficient    X_j     = sum_k x_k exp(-i w_j t_k)         (no prefactor)
//   DFT frequencies    w_j     = 2 pi j / T,  T = N dt,  j = -floor(N/2) .. floor((N-1)/2)
//
// All frequencies are angular (radians per time unit).

#include <cmath>
#include <numbers>

namespace gpfourier::conventions {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Prefactor of the analog (continuous-time) Fourier transform.
inline constexpr double kAnalogPrefactor = 1.0 / kTwoPi;

/// Prefactor applied to DFT sums.
inline constexpr double kDftPrefactor = 1.0;

/// 1/sqrt(2 pi).
inline constexpr double kInvSqrtTwoPi = 0.3989422804014326779399460599343818684758586311649;

/// Analog transform of the time-domain Gaussian exp(-t^2 / (2 width^2)) at w:
/// width / sqrt(2 pi) * exp(-width^2 w^2 / 2).
inline double gaussian_ft(double width, double omega) {
  return width * kInvSqrtTwoPi * std::exp(-0.5 * width * width * omega * omega);
}

/// Analog transform of sigma * exp(-sigma^2 tau^2 / 2) * cos(xi tau) at w, i.e. of one
/// real (mirrored) spectral bump of the learned covariance:
/// (G(w - xi) + G(w + xi)) / (2 sqrt(2 pi)), G(d) = exp(-d^2 / (2 sigma^2)).
inline double learned_bump_ft(double sigma, double xi, double omega) {
  const double dm = (omega - xi) / sigma;
  const double dp = (omega + xi) / sigma;
  return 0.5 * kInvSqrtTwoPi * (std::exp(-0.5 * dm * dm) + std::exp(-0.5 * dp * dp));
}

/// Kernel gain that makes the learned covariance consistent with a density fitted to
/// unit-energy tapered periodograms: K(0) equals the process variance when
/// gain = dt / sqrt(2 pi).
inline double learned_kernel_gain(double dt) { return dt * kInvSqrtTwoPi; }

}  // namespace gpfourier::conventions

#pragma once

#include <complex>
#include <span>
#include <vector>

namespace gpfourier::detail {

/// X[m] = sum_k x[k] exp(sign * 2 pi i m k / n), unnormalized, for any length n.
std::vector<std::complex<double>> fft(std::span<const std::complex<double>> x, int sign);

}  // namespace gpfourier::detail

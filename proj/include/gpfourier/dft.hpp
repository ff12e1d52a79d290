#pragma once

#include <complex>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gpfourier/signal.hpp"
#include "gpfourier/taper.hpp"

namespace gpfourier {

using cplx = std::complex<double>;

/// Complex amplitudes on an increasing angular-frequency grid.
struct ComplexSpectrum {
  std::vector<double> freqs;
  std::vector<cplx> values;
  /// Which forward-transform constant produced the values ("dft-sum" or "analog").
  std::string convention;

  std::size_t size() const noexcept { return freqs.size(); }
  /// |value|^2 per frequency.
  std::vector<double> power() const;
};

struct PowerSpectrum {
  std::vector<double> freqs;
  std::vector<double> power;

  std::size_t size() const noexcept { return freqs.size(); }
  double total() const noexcept;
};

/// Signed DFT integers k = -floor(N/2) .. floor((N-1)/2).
std::vector<long> dft_indices(std::size_t n);

/// Angular DFT frequencies 2 pi k / T, T = N dt, in increasing order.
std::vector<double> dft_frequencies(std::size_t n, double dt);
std::vector<double> dft_frequencies(const TimeSeries& ts);

/// sum_k w[k] y[k] exp(-i w_j t_k) on the DFT grid of ts (FFT evaluation).
ComplexSpectrum tapered_dft(const TimeSeries& ts, std::span<const double> taper);
ComplexSpectrum tapered_dft(const TimeSeries& ts, const TaperSet& taper);

/// O(N^2) direct summation of the same quantity; reference implementation.
ComplexSpectrum tapered_dft_direct(const TimeSeries& ts, std::span<const double> taper);

/// (1/K) sum_m |tapered_dft(ts, taper m)|^2.
PowerSpectrum multitaper_spectrum(const TimeSeries& ts, const TaperSet& tapers);

/// Rescales `est` so its total power equals that of `reference` on the shared grid.
PowerSpectrum normalize_energy(const PowerSpectrum& est, const PowerSpectrum& reference);

/// Output-side frequency unit handling: angular (default) or cycles per time unit.
enum class FrequencyUnits { angular, hertz };

void write_csv(std::ostream& out, const ComplexSpectrum& spec,
               FrequencyUnits units = FrequencyUnits::angular);
void write_csv(std::ostream& out, const PowerSpectrum& spec,
               FrequencyUnits units = FrequencyUnits::angular);
void write_csv(const std::filesystem::path& path, const ComplexSpectrum& spec,
               FrequencyUnits units = FrequencyUnits::angular);
void write_csv(const std::filesystem::path& path, const PowerSpectrum& spec,
               FrequencyUnits units = FrequencyUnits::angular);

}  // namespace gpfourier

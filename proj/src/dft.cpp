#include "gpfourier/dft.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

#include "fft.hpp"
#include "gpfourier/conventions.hpp"
#include "gpfourier/error.hpp"

namespace gpfourier {

namespace {

void check_taper_length(const TimeSeries& ts, std::span<const double> taper) {
  if (taper.size() != ts.size()) {
    throw ArgumentError("taper length " + std::to_string(taper.size()) +
                        " does not match series length " + std::to_string(ts.size()));
  }
}

double to_output_units(double omega, FrequencyUnits units) {
  return units == FrequencyUnits::hertz ? omega / conventions::kTwoPi : omega;
}

void write_units_header(std::ostream& out, FrequencyUnits units) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << (units == FrequencyUnits::hertz ? "# units=cycles/time\n" : "# units=rad/time\n");
}

const char* freq_column(FrequencyUnits units) {
  return units == FrequencyUnits::hertz ? "freq" : "omega";
}

}  // namespace

std::vector<double> ComplexSpectrum::power() const {
  std::vector<double> p(values.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(values[i]);
  return p;
}

double PowerSpectrum::total() const noexcept {
  return std::accumulate(power.begin(), power.end(), 0.0);
}

std::vector<long> dft_indices(std::size_t n) {
  std::vector<long> k(n);
  const long first = -static_cast<long>(n / 2);
  std::iota(k.begin(), k.end(), first);
  return k;
}

std::vector<double> dft_frequencies(std::size_t n, double dt) {
  const double duration = static_cast<double>(n) * dt;
  std::vector<double> w;
  w.reserve(n);
  for (long k : dft_indices(n)) w.push_back(conventions::kTwoPi * static_cast<double>(k) / duration);
  return w;
}

std::vector<double> dft_frequencies(const TimeSeries& ts) {
  return dft_frequencies(ts.size(), ts.dt());
}

ComplexSpectrum tapered_dft(const TimeSeries& ts, std::span<const double> taper) {
  check_taper_length(ts, taper);
  const std::size_t n = ts.size();
  std::vector<cplx> x(n);
  for (std::size_t k = 0; k < n; ++k) x[k] = taper[k] * ts.values()[k];
  const auto full = detail::fft(x, -1);

  ComplexSpectrum out;
  out.convention = "dft-sum";
  out.freqs = dft_frequencies(ts);
  out.values.resize(n);
  const auto idx = dft_indices(n);
  const auto nl = static_cast<long>(n);
  // exp(-i w_j t_k) = exp(-i w_j t0) exp(-2 pi i j k / N)
  for (std::size_t j = 0; j < n; ++j) {
    const long m = ((idx[j] % nl) + nl) % nl;
    out.values[j] = conventions::kDftPrefactor * full[static_cast<std::size_t>(m)] *
                    std::polar(1.0, -out.freqs[j] * ts.t0());
  }
  return out;
}

ComplexSpectrum tapered_dft(const TimeSeries& ts, const TaperSet& taper) {
  if (taper.count() != 1) throw ArgumentError("tapered_dft: expected a single taper");
  return tapered_dft(ts, taper[0]);
}

ComplexSpectrum tapered_dft_direct(const TimeSeries& ts, std::span<const double> taper) {
  check_taper_length(ts, taper);
  const std::size_t n = ts.size();
  ComplexSpectrum out;
  out.convention = "dft-sum";
  out.freqs = dft_frequencies(ts);
  out.values.assign(n, cplx{});
  for (std::size_t j = 0; j < n; ++j) {
    cplx acc{};
    for (std::size_t k = 0; k < n; ++k) {
      acc += taper[k] * ts.values()[k] * std::polar(1.0, -out.freqs[j] * ts.time(k));
    }
    out.values[j] = conventions::kDftPrefactor * acc;
  }
  return out;
}

PowerSpectrum multitaper_spectrum(const TimeSeries& ts, const TaperSet& tapers) {
  if (tapers.length != ts.size() || tapers.count() == 0) {
    throw ArgumentError("multitaper_spectrum: taper set does not match series length");
  }
  PowerSpectrum out;
  out.freqs = dft_frequencies(ts);
  out.power.assign(ts.size(), 0.0);
  for (std::size_t m = 0; m < tapers.count(); ++m) {
    const auto coeffs = tapered_dft(ts, tapers[m]);
    for (std::size_t j = 0; j < coeffs.size(); ++j) out.power[j] += std::norm(coeffs.values[j]);
  }
  const double inv_k = 1.0 / static_cast<double>(tapers.count());
  for (double& p : out.power) p *= inv_k;
  return out;
}

PowerSpectrum normalize_energy(const PowerSpectrum& est, const PowerSpectrum& reference) {
  if (est.size() != reference.size()) {
    throw ArgumentError("normalize_energy: spectra are on different grids");
  }
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double scale = std::max(std::abs(est.freqs[i]), 1.0);
    if (std::abs(est.freqs[i] - reference.freqs[i]) > 1e-9 * scale) {
      throw ArgumentError("normalize_energy: spectra are on different grids");
    }
  }
  const double est_total = est.total();
  if (!(est_total > 0.0)) throw DegenerateInputError("normalize_energy: estimate has zero power");
  const double factor = reference.total() / est_total;
  PowerSpectrum out = est;
  for (double& p : out.power) p *= factor;
  return out;
}

void write_csv(std::ostream& out, const ComplexSpectrum& spec, FrequencyUnits units) {
  write_units_header(out, units);
  out << freq_column(units) << ",real,imag\n";
  for (std::size_t i = 0; i < spec.size(); ++i) {
    out << to_output_units(spec.freqs[i], units) << "," << spec.values[i].real() << ","
        << spec.values[i].imag() << "\n";
  }
}

void write_csv(std::ostream& out, const PowerSpectrum& spec, FrequencyUnits units) {
  write_units_header(out, units);
  out << freq_column(units) << ",power\n";
  for (std::size_t i = 0; i < spec.size(); ++i) {
    out << to_output_units(spec.freqs[i], units) << "," << spec.power[i] << "\n";
  }
}

void write_csv(const std::filesystem::path& path, const ComplexSpectrum& spec,
               FrequencyUnits units) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_csv(out, spec, units);
}

void write_csv(const std::filesystem::path& path, const PowerSpectrum& spec,
               FrequencyUnits units) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_csv(out, spec, units);
}

}  // namespace gpfourier

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace gpfourier {

enum class TaperKind { square, hann, dpss };

std::string_view to_string(TaperKind kind);

/// K unit-energy tapers of common length N.
struct TaperSet {
  TaperKind kind = TaperKind::square;
  std::size_t length = 0;
  std::vector<std::vector<double>> tapers;
  /// Time-bandwidth product NW (DPSS only).
  double bandwidth_param = 0.0;
  /// Eigenvalues of the tridiagonal Slepian matrix, descending (DPSS only).
  std::vector<double> eigenvalues;

  std::size_t count() const noexcept { return tapers.size(); }
  std::span<const double> operator[](std::size_t m) const { return tapers[m]; }
};

/// Constant taper 1/sqrt(n).
TaperSet square_taper(std::size_t n);

/// Hann window 0.5 (1 - cos(2 pi k / (n - 1))) scaled to unit energy.
TaperSet hann(std::size_t n);

/// The k leading discrete prolate spheroidal sequences with time-bandwidth product nw.
/// Requires n >= 8, 0 < nw < n/2 and 1 <= k <= floor(2 nw).
TaperSet dpss(std::size_t n, double nw, std::size_t k);

/// Largest k accepted by dpss() for a given nw.
std::size_t dpss_max_tapers(double nw);

}  // namespace gpfourier

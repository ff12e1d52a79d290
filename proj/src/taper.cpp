#include "gpfourier/taper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "gpfourier/error.hpp"

namespace gpfourier {

namespace {

void normalize_unit_energy(std::vector<double>& w) {
  const double energy = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
  const double scale = 1.0 / std::sqrt(energy);
  for (double& x : w) x *= scale;
}

// Symmetric tridiagonal matrix: diagonal d[0..n), off-diagonal e[i] couples i-1 and i
// (e[0] unused).
struct Tridiagonal {
  std::vector<double> d;
  std::vector<double> e;
};

// Number of eigenvalues strictly below x (Sturm sequence).
std::size_t count_below(const Tridiagonal& t, double x) {
  const double tiny = std::numeric_limits<double>::min();
  std::size_t count = 0;
  double q = t.d[0] - x;
  if (q < 0.0) ++count;
  for (std::size_t i = 1; i < t.d.size(); ++i) {
    if (q == 0.0) q = tiny;
    q = t.d[i] - x - t.e[i] * t.e[i] / q;
    if (q < 0.0) ++count;
  }
  return count;
}

// The eigenvalue with ascending index `index`, by bisection.
double bisect_eigenvalue(const Tridiagonal& t, std::size_t index, double lo, double hi) {
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (count_below(t, mid) > index) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Solves (T - shift I) x = b in place with partial pivoting (LAPACK dgtsv scheme).
void solve_shifted(const Tridiagonal& t, double shift, std::vector<double>& b, double pivot_floor) {
  const std::size_t n = t.d.size();
  std::vector<double> dl(n - 1), d(n), du(n - 1);
  for (std::size_t i = 0; i < n; ++i) d[i] = t.d[i] - shift;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    dl[i] = t.e[i + 1];
    du[i] = t.e[i + 1];
  }
  std::vector<double> du2(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (d[i] == 0.0) d[i] = pivot_floor;
      const double fact = dl[i] / d[i];
      d[i + 1] -= fact * du[i];
      b[i + 1] -= fact * b[i];
    } else {
      const double fact = d[i] / dl[i];
      d[i] = dl[i];
      const double temp = d[i + 1];
      d[i + 1] = du[i] - fact * temp;
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -fact * du2[i];
      }
      du[i] = temp;
      const double tb = b[i];
      b[i] = b[i + 1];
      b[i + 1] = tb - fact * b[i + 1];
    }
  }
  for (double& x : d) {
    if (std::abs(x) < pivot_floor) x = std::copysign(pivot_floor, x == 0.0 ? 1.0 : x);
  }
  b[n - 1] /= d[n - 1];
  if (n >= 2) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
  for (std::size_t ii = n - 2; ii-- > 0;) {
    b[ii] = (b[ii] - du[ii] * b[ii + 1] - du2[ii] * b[ii + 2]) / d[ii];
  }
}

}  // namespace

std::string_view to_string(TaperKind kind) {
  switch (kind) {
    case TaperKind::square: return "square";
    case TaperKind::hann: return "hann";
    case TaperKind::dpss: return "dpss";
  }
  return "unknown";
}

TaperSet square_taper(std::size_t n) {
  if (n < 1) throw ArgumentError("square_taper: n must be >= 1");
  TaperSet set;
  set.kind = TaperKind::square;
  set.length = n;
  set.tapers.emplace_back(n, 1.0 / std::sqrt(static_cast<double>(n)));
  return set;
}

TaperSet hann(std::size_t n) {
  if (n < 2) throw ArgumentError("hann: n must be >= 2");
  std::vector<double> w(n);
  const double denom = static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / denom));
  }
  // cos(2 pi) is not exactly 1 in floating point.
  w.front() = 0.0;
  w.back() = 0.0;
  if (n == 2) {
    // Both samples vanish; fall back to the square taper rather than divide by zero.
    return square_taper(2);
  }
  normalize_unit_energy(w);
  TaperSet set;
  set.kind = TaperKind::hann;
  set.length = n;
  set.tapers.push_back(std::move(w));
  return set;
}

std::size_t dpss_max_tapers(double nw) {
  return nw > 0.0 ? static_cast<std::size_t>(std::floor(2.0 * nw)) : 0;
}

TaperSet dpss(std::size_t n, double nw, std::size_t k) {
  if (n < 8) throw ArgumentError("dpss: n must be >= 8");
  if (!(nw > 0.0) || !(nw < 0.5 * static_cast<double>(n))) {
    throw ArgumentError("dpss: need 0 < nw < n/2");
  }
  if (k < 1 || k > dpss_max_tapers(nw)) {
    throw ArgumentError("dpss: k must be in [1, floor(2 nw)] = [1, " +
                        std::to_string(dpss_max_tapers(nw)) + "]");
  }

  const double w = nw / static_cast<double>(n);
  const double cw = std::cos(2.0 * std::numbers::pi * w);
  Tridiagonal t;
  t.d.resize(n);
  t.e.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = (static_cast<double>(n) - 1.0 - 2.0 * static_cast<double>(i)) / 2.0;
    t.d[i] = c * c * cw;
    if (i > 0) t.e[i] = static_cast<double>(i) * static_cast<double>(n - i) / 2.0;
  }

  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(t.e[i]) : 0.0) + (i + 1 < n ? std::abs(t.e[i + 1]) : 0.0);
    lo = std::min(lo, t.d[i] - r);
    hi = std::max(hi, t.d[i] + r);
  }
  const double norm = std::max(std::abs(lo), std::abs(hi));
  const double pivot_floor = norm * std::numeric_limits<double>::epsilon();

  TaperSet set;
  set.kind = TaperKind::dpss;
  set.length = n;
  set.bandwidth_param = nw;
  for (std::size_t m = 0; m < k; ++m) {
    const double lambda = bisect_eigenvalue(t, n - 1 - m, lo - 1.0, hi + 1.0);
    set.eigenvalues.push_back(lambda);

    // Inverse iteration from a smooth start vector.
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = 1.0 + 0.5 * std::sin(0.37 * static_cast<double>(i + 1) * static_cast<double>(m + 1));
    }
    for (int iter = 0; iter < 4; ++iter) {
      solve_shifted(t, lambda, v, pivot_floor);
      for (const auto& prev : set.tapers) {
        const double proj = std::inner_product(v.begin(), v.end(), prev.begin(), 0.0);
        for (std::size_t i = 0; i < n; ++i) v[i] -= proj * prev[i];
      }
      normalize_unit_energy(v);
    }

    const double vmax = std::abs(*std::max_element(
        v.begin(), v.end(), [](double a, double b) { return std::abs(a) < std::abs(b); }));
    auto first = std::find_if(v.begin(), v.end(),
                              [&](double x) { return std::abs(x) > 1e-12 * vmax; });
    if (first != v.end() && *first < 0.0) {
      for (double& x : v) x = -x;
    }
    set.tapers.push_back(std::move(v));
  }
  return set;
}

}  // namespace gpfourier

#include "gpfourier/speclearn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

#include "gpfourier/dft.hpp"
#include "gpfourier/error.hpp"
#include "gpfourier/taper.hpp"

namespace gpfourier {

namespace {

// exp(-x^2/2) < 1e-300 beyond this many scales.
constexpr double kBandCutoff = 37.5;
constexpr double kDenominatorFloor = 1e-300;

// K_SE(xi_k, xi_j) restricted to |xi_k - xi_j| <= kBandCutoff sigma, row by row.
class SeBand {
 public:
  SeBand(std::span<const double> centers, double sigma) : first_(centers.size()), rows_(centers.size()) {
    const std::size_t n = centers.size();
    const double reach = kBandCutoff * sigma;
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (std::size_t k = 0; k < n; ++k) {
      while (centers[k] - centers[lo] > reach) ++lo;
      if (hi < k) hi = k;
      while (hi + 1 < n && centers[hi + 1] - centers[k] <= reach) ++hi;
      first_[k] = lo;
      rows_[k].resize(hi - lo + 1);
      for (std::size_t j = lo; j <= hi; ++j) {
        const double d = (centers[k] - centers[j]) / sigma;
        rows_[k][j - lo] = std::exp(-0.5 * d * d);
      }
    }
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(rows_.size());
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      const auto& row = rows_[k];
      const double* xp = x.data() + first_[k];
      double acc = 0.0;
      for (std::size_t i = 0; i < row.size(); ++i) acc += row[i] * xp[i];
      y[k] = acc;
    }
    return y;
  }

  std::vector<double> row_sums() const {
    std::vector<double> s(rows_.size());
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      s[k] = std::accumulate(rows_[k].begin(), rows_[k].end(), 0.0);
    }
    return s;
  }

 private:
  std::vector<std::size_t> first_;
  std::vector<std::vector<double>> rows_;
};

std::vector<double> exp_weights(std::span<const double> log_weights) {
  std::vector<double> w(log_weights.size());
  std::transform(log_weights.begin(), log_weights.end(), w.begin(),
                 [](double a) { return std::exp(a); });
  return w;
}

double sup_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Objective and gradient of  n_trials * loglik + prior_weight * logprior  on a fixed band.
class Objective {
 public:
  Objective(std::span<const double> centers, std::span<const double> periodogram, double n_trials,
            double sigma, double lambda, double prior_weight)
      : band_(centers, sigma),
        periodogram_(periodogram.begin(), periodogram.end()),
        n_trials_(n_trials),
        lambda_(lambda),
        prior_weight_(prior_weight) {}

  // Returns -inf when any denominator degenerates.
  double value(std::span<const double> a) const {
    const auto w = exp_weights(a);
    const auto s = band_.apply(w);
    double lik = 0.0;
    double prior = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double denom = s[j] + lambda_;
      if (!(denom >= kDenominatorFloor) || !std::isfinite(denom)) {
        return -std::numeric_limits<double>::infinity();
      }
      lik += -periodogram_[j] / denom - std::log(std::numbers::pi * denom);
      prior += w[j] * s[j];
    }
    return n_trials_ * lik - 0.5 * prior_weight_ * prior;
  }

  struct Gradient {
    std::vector<double> likelihood;
    std::vector<double> prior;
  };

  Gradient gradient(std::span<const double> a) const {
    const auto w = exp_weights(a);
    const auto s = band_.apply(w);
    std::vector<double> r(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double denom = s[j] + lambda_;
      if (!(denom >= kDenominatorFloor)) {
        throw DegenerateInputError("likelihood gradient: s(xi_j) + lambda underflows at center " +
                                   std::to_string(j));
      }
      r[j] = n_trials_ * (periodogram_[j] - denom) / (denom * denom);
    }
    const auto kr = band_.apply(r);
    Gradient g{std::vector<double>(s.size()), std::vector<double>(s.size())};
    for (std::size_t k = 0; k < s.size(); ++k) {
      g.likelihood[k] = w[k] * kr[k];
      g.prior[k] = -w[k] * s[k];
    }
    return g;
  }

  std::vector<double> total_gradient(std::span<const double> a) const {
    auto g = gradient(a);
    for (std::size_t k = 0; k < g.likelihood.size(); ++k) {
      g.likelihood[k] += prior_weight_ * g.prior[k];
    }
    return std::move(g.likelihood);
  }

 private:
  SeBand band_;
  std::vector<double> periodogram_;
  double n_trials_;
  double lambda_;
  double prior_weight_;
};

void check_centers(std::span<const double> centers) {
  if (centers.empty()) throw ArgumentError("spectral model: no centers");
  for (std::size_t j = 1; j < centers.size(); ++j) {
    if (!(centers[j] > centers[j - 1])) {
      throw ArgumentError("spectral model: centers must be strictly increasing");
    }
  }
}

void check_periodogram(const SpectralModel& model, std::span<const double> periodogram) {
  if (periodogram.size() != model.size()) {
    throw ArgumentError("periodogram length does not match the number of centers");
  }
  for (double p : periodogram) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ArgumentError("periodogram values must be finite and nonnegative");
    }
  }
}

}  // namespace

void SpectralModel::validate() const {
  check_centers(centers);
  if (centers.size() != log_weights.size()) {
    throw ArgumentError("spectral model: centers and log_weights differ in length");
  }
  if (!(se_scale > 0.0) || !std::isfinite(se_scale)) {
    throw ArgumentError("spectral model: se_scale must be positive");
  }
  if (!(noise_variance >= 0.0)) {
    throw ArgumentError("spectral model: noise_variance must be >= 0");
  }
  for (double a : log_weights) {
    if (!std::isfinite(a)) throw ArgumentError("spectral model: non-finite log-weight");
  }
}

void FitOptions::validate() const {
  if (!(step_size > 0.0)) throw ArgumentError("fit options: step_size must be positive");
  if (!(grad_tol > 0.0)) throw ArgumentError("fit options: grad_tol must be positive");
  if (!(prior_weight >= 0.0)) throw ArgumentError("fit options: prior_weight must be >= 0");
  if (!(step_growth >= 1.0)) throw ArgumentError("fit options: step_growth must be >= 1");
  if (max_halvings < 0) throw ArgumentError("fit options: max_halvings must be >= 0");
}

double density_eval(const SpectralModel& model, double xi) {
  double s = 0.0;
  for (std::size_t j = 0; j < model.size(); ++j) {
    const double d = (xi - model.centers[j]) / model.se_scale;
    s += std::exp(model.log_weights[j] - 0.5 * d * d);
  }
  return s;
}

double log_likelihood(const SpectralModel& model, std::span<const double> periodogram,
                      double n_trials) {
  check_periodogram(model, periodogram);
  Objective obj(model.centers, periodogram, n_trials, model.se_scale, model.noise_variance, 0.0);
  return obj.value(model.log_weights);
}

double log_prior(const SpectralModel& model) {
  const std::vector<double> zeros(model.size(), 0.0);
  Objective obj(model.centers, zeros, 0.0, model.se_scale, 1.0, 1.0);
  return obj.value(model.log_weights);
}

std::vector<double> likelihood_gradient(const SpectralModel& model,
                                        std::span<const double> periodogram, double n_trials) {
  check_periodogram(model, periodogram);
  Objective obj(model.centers, periodogram, n_trials, model.se_scale, model.noise_variance, 0.0);
  return obj.gradient(model.log_weights).likelihood;
}

std::vector<double> prior_gradient(const SpectralModel& model) {
  const std::vector<double> zeros(model.size(), 0.0);
  // lambda = 1 keeps the unused likelihood denominators away from zero.
  Objective obj(model.centers, zeros, 0.0, model.se_scale, 1.0, 1.0);
  return obj.gradient(model.log_weights).prior;
}

std::vector<double> hann_periodogram(const TimeSeries& ts) {
  return tapered_dft(ts, hann(ts.size())).power();
}

double default_se_scale(const TimeSeries& ts) {
  return 4.0 * 2.0 * std::numbers::pi / ts.duration();
}

double estimate_noise_floor(std::span<const double> centers, std::span<const double> periodogram) {
  if (centers.size() != periodogram.size() || centers.empty()) {
    throw ArgumentError("estimate_noise_floor: size mismatch");
  }
  const double wmax = sup_norm(centers);
  std::vector<double> upper;
  for (std::size_t j = 0; j < centers.size(); ++j) {
    if (std::abs(centers[j]) >= 0.75 * wmax) upper.push_back(periodogram[j]);
  }
  const auto mid = upper.begin() + static_cast<std::ptrdiff_t>(upper.size() / 2);
  std::nth_element(upper.begin(), mid, upper.end());
  if (upper.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(upper.begin(), mid);
  return 0.5 * (lo + hi);
}

SpectralModel initial_model(std::span<const double> centers, std::span<const double> periodogram,
                            double se_scale, double noise_variance) {
  check_centers(centers);
  SpectralModel model;
  model.centers.assign(centers.begin(), centers.end());
  model.se_scale = se_scale;
  model.noise_variance = noise_variance;
  model.log_weights.assign(centers.size(), 0.0);
  check_periodogram(model, periodogram);

  const double pmax = *std::max_element(periodogram.begin(), periodogram.end());
  double eps = 1e-12 * pmax;
  if (!(eps > 0.0)) eps = 1e-12 * std::max(noise_variance, 1.0);
  const auto g = SeBand(centers, se_scale).row_sums();
  for (std::size_t j = 0; j < centers.size(); ++j) {
    model.log_weights[j] = std::log(std::max(periodogram[j], eps) / g[j]);
  }
  model.validate();
  return model;
}

void symmetrize(SpectralModel& model) {
  const auto& c = model.centers;
  const double scale = std::max(sup_norm(c), std::numeric_limits<double>::min());
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (c[j] >= 0.0) continue;
    auto it = std::lower_bound(c.begin(), c.end(), -c[j] - 1e-9 * scale);
    if (it == c.end() || std::abs(*it + c[j]) > 1e-9 * scale) continue;
    const auto m = static_cast<std::size_t>(it - c.begin());
    const double avg = 0.5 * (model.log_weights[j] + model.log_weights[m]);
    model.log_weights[j] = avg;
    model.log_weights[m] = avg;
  }
}

FitResult fit_map_periodogram(std::span<const double> centers,
                              std::span<const double> mean_periodogram, std::size_t n_trials,
                              double se_scale, double noise_variance, const FitOptions& opts) {
  opts.validate();
  if (n_trials == 0) throw ArgumentError("fit_map: need at least one trial");
  if (!(noise_variance >= 0.0)) throw ArgumentError("fit_map: lambda must be >= 0");
  if (!(se_scale > 0.0)) throw ArgumentError("fit_map: se_scale must be positive");

  FitResult result;
  result.model = initial_model(centers, mean_periodogram, se_scale, noise_variance);
  if (opts.symmetrize) symmetrize(result.model);

  const Objective objective(centers, mean_periodogram, static_cast<double>(n_trials), se_scale,
                            noise_variance, opts.prior_weight);
  std::vector<double> a = result.model.log_weights;
  double f = objective.value(a);
  if (!std::isfinite(f)) throw DivergenceError("fit_map: non-finite objective at initialization", 0);
  result.initial_objective = f;
  result.objective_trace.push_back(f);

  std::vector<double> g = objective.total_gradient(a);
  const double g0 = sup_norm(g);
  const double tol = opts.grad_tol * g0;
  double step = opts.step_size;
  std::vector<double> trial(a.size());

  std::size_t iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    if (sup_norm(g) <= tol) {
      result.converged = true;
      break;
    }
    bool accepted = false;
    double f_new = f;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      for (std::size_t k = 0; k < a.size(); ++k) trial[k] = a[k] + step * g[k];
      f_new = objective.value(trial);
      if (std::isfinite(f_new) && f_new >= f) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No ascent direction left at working precision.
      result.converged = true;
      break;
    }
    a.swap(trial);
    f = f_new;
    result.objective_trace.push_back(f);
    g = objective.total_gradient(a);
    for (double x : g) {
      if (!std::isfinite(x)) throw DivergenceError("fit_map: non-finite gradient", iter + 1);
    }
    step *= opts.step_growth;
  }
  if (iter == 0 && g0 == 0.0) result.converged = true;

  result.iterations = iter;
  result.model.log_weights = a;
  if (opts.symmetrize) symmetrize(result.model);
  result.final_objective = objective.value(result.model.log_weights);
  if (!std::isfinite(result.final_objective)) {
    throw DivergenceError("fit_map: non-finite objective after ascent", iter);
  }
  return result;
}

FitResult fit_map(std::span<const TimeSeries> trials, double se_scale, double noise_variance,
                  const FitOptions& opts) {
  if (trials.empty()) throw ArgumentError("fit_map: need at least one trial");
  for (const auto& t : trials) {
    if (!t.same_grid(trials.front())) {
      throw ArgumentError("fit_map: trials do not share the same time grid");
    }
  }
  const auto centers = dft_frequencies(trials.front());
  std::vector<double> mean(centers.size(), 0.0);
  const auto taper = hann(trials.front().size());
  for (const auto& t : trials) {
    const auto p = tapered_dft(t, taper).power();
    for (std::size_t j = 0; j < p.size(); ++j) mean[j] += p[j];
  }
  for (double& p : mean) p /= static_cast<double>(trials.size());
  return fit_map_periodogram(centers, mean, trials.size(), se_scale, noise_variance, opts);
}

nlohmann::ordered_json to_json(const SpectralModel& model) {
  nlohmann::ordered_json j;
  j["se_scale"] = model.se_scale;
  j["noise_variance"] = model.noise_variance;
  j["centers"] = model.centers;
  j["log_weights"] = model.log_weights;
  return j;
}

SpectralModel spectral_model_from_json(const nlohmann::json& j) {
  SpectralModel m;
  try {
    m.se_scale = j.at("se_scale").get<double>();
    m.noise_variance = j.at("noise_variance").get<double>();
    m.centers = j.at("centers").get<std::vector<double>>();
    m.log_weights = j.at("log_weights").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("spectral model JSON: ") + e.what());
  }
  m.validate();
  return m;
}

void write_model(const std::filesystem::path& path, const SpectralModel& model) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << to_json(model).dump(2) << "\n";
}

SpectralModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
  return spectral_model_from_json(j);
}

}  // namespace gpfourier

#include "gpfourier/gp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "gpfourier/conventions.hpp"
#include "gpfourier/error.hpp"

namespace gpfourier {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// sum_{k = k0}^{k0 + N - 1} exp(-i theta k),  k0 = -floor(N/2)
cplx dirichlet_sum(double theta, std::size_t n) {
  const double nd = static_cast<double>(n);
  const double k0 = -std::floor(nd / 2.0);
  const double center = k0 + 0.5 * (nd - 1.0);
  const double half = 0.5 * theta;
  const double den = std::sin(half);
  double ratio;
  if (std::abs(den) < 1e-9) {
    // l'Hopital at theta = 2 pi m
    ratio = nd * std::cos(nd * half) / std::cos(half);
  } else {
    ratio = std::sin(nd * half) / den;
  }
  return std::polar(ratio, -theta * center);
}

cplx band_limited(double period, std::size_t n, double amplitude, double tau) {
  const double nd = static_cast<double>(n);
  return amplitude / (nd * nd) * dirichlet_sum(conventions::kTwoPi * tau / period, n);
}

bool uniform_grid(std::span<const double> x, double& step) {
  if (x.size() < 2) {
    step = 0.0;
    return true;
  }
  step = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
  const double scale = std::max({std::abs(x.front()), std::abs(x.back()), std::abs(step)});
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i] - (x.front() + static_cast<double>(i) * step)) > 1e-12 * scale) return false;
  }
  return step > 0.0;
}

}  // namespace

LearnedKernel::LearnedKernel(SpectralModel model, double gain)
    : model_(std::move(model)), gain_(gain) {
  model_.validate();
  if (!(gain_ > 0.0)) throw ArgumentError("learned kernel: gain must be positive");
  weights_.resize(model_.size());
  std::transform(model_.log_weights.begin(), model_.log_weights.end(), weights_.begin(),
                 [](double a) { return std::exp(a); });
  uniform_centers_ = uniform_grid(model_.centers, center_step_) && model_.size() > 1;
}

double LearnedKernel::eval(double tau) const {
  const double sigma = model_.se_scale;
  const double env = gain_ * sigma * std::exp(-0.5 * sigma * sigma * tau * tau);
  if (env == 0.0) return 0.0;
  const std::size_t n = weights_.size();
  double sum = 0.0;
  if (uniform_centers_) {
    // Phase rotation along the uniform center grid, re-anchored every 64 terms.
    const cplx rot = std::polar(1.0, center_step_ * tau);
    cplx phase;
    for (std::size_t j = 0; j < n; ++j) {
      if (j % 64 == 0) phase = std::polar(1.0, model_.centers[j] * tau);
      sum += weights_[j] * phase.real();
      phase *= rot;
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) sum += weights_[j] * std::cos(model_.centers[j] * tau);
  }
  return env * sum;
}

double LearnedKernel::fourier(double omega) const {
  const double sigma = model_.se_scale;
  double sum = 0.0;
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    sum += weights_[j] * conventions::learned_bump_ft(sigma, model_.centers[j], omega);
  }
  return gain_ * sum;
}

std::string_view kernel_name(const KernelSpec& spec) {
  return std::visit(overloaded{[](const LearnedKernel&) { return std::string_view("bgf"); },
                               [](const SeKernel&) { return std::string_view("se"); },
                               [](const BandLimitedKernel&) { return std::string_view("bl"); },
                               [](const RelaxedBandLimitedKernel&) { return std::string_view("rbl"); }},
                    spec);
}

void validate(const KernelSpec& spec) {
  std::visit(overloaded{[](const LearnedKernel& k) { k.model().validate(); },
                        [](const SeKernel& k) {
                          if (!(k.scale > 0.0) || !(k.amplitude > 0.0)) {
                            throw ArgumentError("se kernel: scale and amplitude must be positive");
                          }
                        },
                        [](const BandLimitedKernel& k) {
                          if (!(k.period > 0.0) || k.count < 1 || !(k.amplitude > 0.0)) {
                            throw ArgumentError("bl kernel: period, count, amplitude must be positive");
                          }
                        },
                        [](const RelaxedBandLimitedKernel& k) {
                          if (!(k.period > 0.0) || k.count < 1 || !(k.amplitude > 0.0) ||
                              !(k.scale > 0.0)) {
                            throw ArgumentError("rbl kernel: parameters must be positive");
                          }
                        }},
             spec);
}

bool is_stationary_transformable(const KernelSpec& spec) {
  return std::holds_alternative<LearnedKernel>(spec) || std::holds_alternative<SeKernel>(spec);
}

cplx kernel_eval(const KernelSpec& spec, double t, double t_prime) {
  const double tau = t_prime - t;
  return std::visit(
      overloaded{[&](const LearnedKernel& k) { return cplx(k.eval(tau)); },
                 [&](const SeKernel& k) {
                   const double x = tau / k.scale;
                   return cplx(k.amplitude * std::exp(-0.5 * x * x));
                 },
                 [&](const BandLimitedKernel& k) {
                   return band_limited(k.period, k.count, k.amplitude, tau);
                 },
                 [&](const RelaxedBandLimitedKernel& k) {
                   const double x = tau / k.scale;
                   return band_limited(k.period, k.count, k.amplitude, tau) * std::exp(-0.5 * x * x);
                 }},
      spec);
}

double kernel_eval_real(const KernelSpec& spec, double t, double t_prime) {
  return kernel_eval(spec, t, t_prime).real();
}

Eigen::MatrixXcd gram_matrix(const KernelSpec& spec, std::span<const double> times) {
  if (times.empty()) throw ArgumentError("gram_matrix: no time points");
  const auto n = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXcd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const cplx v = kernel_eval(spec, times[i], times[j]);
      k(i, j) = v;
      k(j, i) = std::conj(v);
    }
  }
  return k;
}

Eigen::MatrixXd gram_matrix_real(const KernelSpec& spec, std::span<const double> times) {
  if (times.empty()) throw ArgumentError("gram_matrix: no time points");
  const auto n = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd k(n, n);
  double step = 0.0;
  if (n > 2 && uniform_grid(times, step)) {
    // Every variant is a function of the lag only, and its real part is even.
    std::vector<double> lag(static_cast<std::size_t>(n));
    for (Eigen::Index m = 0; m < n; ++m) {
      lag[static_cast<std::size_t>(m)] = kernel_eval_real(spec, 0.0, static_cast<double>(m) * step);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        k(i, j) = lag[static_cast<std::size_t>(std::abs(i - j))];
      }
    }
    return k;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = kernel_eval_real(spec, times[i], times[j]);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

GPPosterior::GPPosterior(std::vector<double> times, std::vector<double> weights, KernelSpec kernel,
                         double noise_variance, double jitter)
    : times_(std::move(times)),
      weights_(std::move(weights)),
      kernel_(std::move(kernel)),
      noise_variance_(noise_variance),
      jitter_(jitter) {
  if (times_.size() != weights_.size()) {
    throw ArgumentError("GPPosterior: times and weights differ in length");
  }
}

GPPosterior fit_gp(std::span<const double> times, std::span<const double> values,
                   const KernelSpec& spec, double lambda, const GpOptions& opts) {
  validate(spec);
  if (times.size() != values.size() || times.empty()) {
    throw ArgumentError("fit_gp: times and values must be nonempty and equal in length");
  }
  if (!(lambda >= 0.0)) throw ArgumentError("fit_gp: lambda must be >= 0");
  if (times.size() > opts.max_size) {
    throw ArgumentError("fit_gp: " + std::to_string(times.size()) +
                        " samples exceeds the direct-solve limit of " +
                        std::to_string(opts.max_size) + "; decimate the input");
  }
  const auto n = static_cast<Eigen::Index>(times.size());
  const Eigen::MatrixXd k = gram_matrix_real(spec, times);
  const Eigen::Map<const Eigen::VectorXd> y(values.data(), n);
  const double ynorm = y.norm();
  const double unit = std::max(k.trace() / static_cast<double>(n), std::numeric_limits<double>::min());

  std::vector<double> jitters;
  if (lambda > 0.0 || !opts.allow_jitter) jitters.push_back(0.0);
  if (opts.allow_jitter) {
    for (double j = 1e-12; j <= 1e-6 * 1.0000001; j *= 10.0) jitters.push_back(j * unit);
  }

  Eigen::LLT<Eigen::MatrixXd> llt;
  double last_jitter = 0.0;
  double last_residual = std::numeric_limits<double>::infinity();
  for (double jitter : jitters) {
    last_jitter = jitter;
    const double shift = lambda + jitter;
    llt.compute(k + shift * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() != Eigen::Success) continue;
    Eigen::VectorXd w = llt.solve(y);
    Eigen::VectorXd r = y - (k * w + shift * w);
    w += llt.solve(r);
    r = y - (k * w + shift * w);
    if (!w.allFinite()) continue;
    last_residual = ynorm > 0.0 ? r.norm() / ynorm : r.norm();
    if (ynorm == 0.0 || last_residual < opts.residual_tol) {
      GPPosterior post(std::vector<double>(times.begin(), times.end()),
                       std::vector<double>(w.data(), w.data() + n), spec, lambda, jitter);
      post.set_residual(last_residual);
      return post;
    }
  }
  throw ConditioningError("fit_gp: factorization failed (relative residual " +
                              std::to_string(last_residual) + ")",
                          last_jitter);
}

GPPosterior fit_gp(const TimeSeries& ts, const KernelSpec& spec, double lambda,
                   const GpOptions& opts) {
  const auto t = ts.times();
  return fit_gp(t, ts.values(), spec, lambda, opts);
}

double posterior_mean(const GPPosterior& post, double t) {
  const auto times = post.times();
  const auto w = post.weights();
  double m = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (w[k] != 0.0) m += w[k] * kernel_eval_real(post.kernel(), t, times[k]);
  }
  return m;
}

namespace {

// Queries and samples on a common lattice of step dt / m: every lag is a multiple of the
// lattice step, so the kernel is tabulated once per distinct lag.
bool lattice_posterior_mean(const GPPosterior& post, std::span<const double> ts,
                            std::vector<double>& out) {
  const auto times = post.times();
  double dt = 0.0;
  if (times.size() < 3 || ts.size() < 16 || !uniform_grid(times, dt)) return false;
  const double t0 = times.front();
  std::vector<long> q(ts.size());
  for (long m = 1; m <= 64; ++m) {
    const double h = dt / static_cast<double>(m);
    bool ok = true;
    long lo = 0;
    long hi = 0;
    for (std::size_t i = 0; i < ts.size() && ok; ++i) {
      const double x = (ts[i] - t0) / h;
      const double r = std::nearbyint(x);
      ok = std::abs(x - r) <= 1e-9 * (1.0 + std::abs(x)) && std::abs(r) < 1e12;
      q[i] = static_cast<long>(r);
      lo = i == 0 ? q[i] : std::min(lo, q[i]);
      hi = i == 0 ? q[i] : std::max(hi, q[i]);
    }
    if (!ok) continue;
    const long n = static_cast<long>(times.size());
    // lag index k m - q ranges over [-hi, (n - 1) m - lo].
    const long first = -hi;
    const long count = (n - 1) * m - lo - first + 1;
    if (static_cast<double>(count) * 2.0 > static_cast<double>(ts.size()) * static_cast<double>(n)) {
      return false;
    }
    std::vector<double> table(static_cast<std::size_t>(count));
    for (long l = 0; l < count; ++l) {
      table[static_cast<std::size_t>(l)] =
          kernel_eval_real(post.kernel(), 0.0, static_cast<double>(l + first) * h);
    }
    const auto w = post.weights();
    out.assign(ts.size(), 0.0);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      double acc = 0.0;
      for (long k = 0; k < n; ++k) {
        acc += w[static_cast<std::size_t>(k)] * table[static_cast<std::size_t>(k * m - q[i] - first)];
      }
      out[i] = acc;
    }
    return true;
  }
  return false;
}

}  // namespace

std::vector<double> posterior_mean(const GPPosterior& post, std::span<const double> ts) {
  std::vector<double> out;
  if (lattice_posterior_mean(post, ts, out)) return out;
  out.resize(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) out[i] = posterior_mean(post, ts[i]);
  return out;
}

nlohmann::ordered_json to_json(const KernelSpec& spec) {
  nlohmann::ordered_json j;
  j["type"] = std::string(kernel_name(spec));
  std::visit(overloaded{[&](const LearnedKernel& k) {
                          j["gain"] = k.gain();
                          j["model"] = to_json(k.model());
                        },
                        [&](const SeKernel& k) {
                          j["scale"] = k.scale;
                          j["amplitude"] = k.amplitude;
                        },
                        [&](const BandLimitedKernel& k) {
                          j["period"] = k.period;
                          j["count"] = k.count;
                          j["amplitude"] = k.amplitude;
                        },
                        [&](const RelaxedBandLimitedKernel& k) {
                          j["period"] = k.period;
                          j["count"] = k.count;
                          j["amplitude"] = k.amplitude;
                          j["scale"] = k.scale;
                        }},
             spec);
  return j;
}

KernelSpec kernel_from_json(const nlohmann::json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "bgf") {
      return LearnedKernel(spectral_model_from_json(j.at("model")), j.at("gain").get<double>());
    }
    if (type == "se") return SeKernel{j.at("scale").get<double>(), j.at("amplitude").get<double>()};
    if (type == "bl") {
      return BandLimitedKernel{j.at("period").get<double>(), j.at("count").get<std::size_t>(),
                               j.at("amplitude").get<double>()};
    }
    if (type == "rbl") {
      return RelaxedBandLimitedKernel{j.at("period").get<double>(), j.at("count").get<std::size_t>(),
                                      j.at("amplitude").get<double>(), j.at("scale").get<double>()};
    }
    throw ParseError("kernel JSON: unknown type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("kernel JSON: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const GPPosterior& post) {
  nlohmann::ordered_json j;
  j["times"] = std::vector<double>(post.times().begin(), post.times().end());
  j["weights"] = std::vector<double>(post.weights().begin(), post.weights().end());
  j["kernel"] = to_json(post.kernel());
  j["lambda"] = post.noise_variance();
  j["jitter"] = post.jitter();
  return j;
}

GPPosterior posterior_from_json(const nlohmann::json& j) {
  try {
    return GPPosterior(j.at("times").get<std::vector<double>>(),
                       j.at("weights").get<std::vector<double>>(), kernel_from_json(j.at("kernel")),
                       j.at("lambda").get<double>(), j.value("jitter", 0.0));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("posterior JSON: ") + e.what());
  }
}

void write_posterior(const std::filesystem::path& path, const GPPosterior& post) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << to_json(post).dump(2) << "\n";
}

}  // namespace gpfourier

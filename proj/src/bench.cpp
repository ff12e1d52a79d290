#include "gpfourier/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <thread>

#include "gpfourier/conventions.hpp"
#include "gpfourier/error.hpp"
#include "gpfourier/taper.hpp"
#include "gpfourier/transform.hpp"
#include "gpfourier/version.hpp"

namespace gpfourier {

namespace {

constexpr double kLogFloor = 1e-300;
constexpr std::uint64_t kNoiseStream = 0x9e3779b97f4a7c15ULL;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string("NA"); }

nlohmann::ordered_json opt_json(const std::optional<double>& x) {
  return x ? nlohmann::ordered_json(*x) : nlohmann::ordered_json(nullptr);
}

std::size_t dpss_order(const std::string& name) {
  if (name.size() == 5 && name.starts_with("dpss") && name[4] >= '2' && name[4] <= '4') {
    return static_cast<std::size_t>(name[4] - '0');
  }
  return 0;
}

std::size_t worker_count(const StudyConfig& cfg) {
  std::size_t n = cfg.threads;
  if (n == 0) {
    n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("BGF_THREADS")) {
      const long cap = std::strtol(env, nullptr, 10);
      if (cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
    }
  }
  return std::min(n, cfg.n_trials);
}

// Stable ranking by deviation; failures and ties fall back to list order.
std::vector<std::size_t> rank_band(const std::vector<EstimatorOutcome>& outcomes, bool passband) {
  const std::size_t e = outcomes.size();
  auto dev = [&](std::size_t i) -> std::optional<double> {
    if (outcomes[i].failed) return std::nullopt;
    return passband ? outcomes[i].power.passband : outcomes[i].power.stopband;
  };
  bool present = false;
  for (std::size_t i = 0; i < e; ++i) {
    const auto& p = outcomes[i].power;
    if (!outcomes[i].failed && (passband ? p.passband : p.stopband)) present = true;
  }
  std::vector<std::size_t> ranks(e, 0);
  if (!present) return ranks;
  std::vector<std::size_t> order(e);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const auto dx = dev(x);
    const auto dy = dev(y);
    if (!dx || !dy) return dx.has_value() && !dy.has_value();
    return *dx < *dy;
  });
  for (std::size_t r = 0; r < e; ++r) ranks[order[r]] = r + 1;
  return ranks;
}

TrialRecord run_trial(const StudyConfig& cfg, std::size_t index) {
  TrialRecord rec;
  rec.trial = index;
  rec.seed = mix_seed(cfg.seed ^ static_cast<std::uint64_t>(index));
  rec.params = sample_params(cfg, rec.seed);

  TimeSeries ts = generate_anharmonic(rec.params, cfg.t_min, cfg.t_max, cfg.dt);
  if (cfg.noise_sd > 0.0) ts = add_white_noise(ts, cfg.noise_sd, mix_seed(rec.seed ^ kNoiseStream));

  const auto grid = dft_frequencies(ts);
  PowerSpectrum truth{grid, ground_truth_spectrum(rec.params, grid).power()};

  for (const auto& name : cfg.estimators) {
    EstimatorOutcome out;
    out.estimator = name;
    try {
      const auto est = run_estimator(name, ts, truth, cfg);
      out.power = band_deviation(est, truth, cfg.theta);
      out.log_power = band_log_deviation(est, truth, cfg.theta);
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
    }
    rec.outcomes.push_back(std::move(out));
  }
  rec.pass_rank = rank_band(rec.outcomes, true);
  rec.stop_rank = rank_band(rec.outcomes, false);
  return rec;
}

}  // namespace

void StudyConfig::validate() const {
  if (n_trials < 1) throw ArgumentError("study: n_trials must be >= 1");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ArgumentError("study: noise_sd must be >= 0");
  if (!(phi_min <= phi_max)) throw ArgumentError("study: empty phi0 range");
  if (!(omega_min <= omega_max)) throw ArgumentError("study: empty omega0 range");
  if (!(a_min >= 0.0 && a_min < a_max)) throw ArgumentError("study: a range must satisfy 0 <= a_min < a_max");
  if (!(dt > 0.0) || !(t_max > t_min)) throw ArgumentError("study: need dt > 0 and t_max > t_min");
  if (!(se_scale_bins > 0.0)) throw ArgumentError("study: se_scale_bins must be > 0");
  if (!(noiseless_lambda >= 0.0)) throw ArgumentError("study: noiseless_lambda must be >= 0");
  if (!(prior_weight >= 0.0)) throw ArgumentError("study: prior_weight must be >= 0");
  if (estimators.empty()) throw ArgumentError("study: estimator list is empty");
  const auto& reg = estimator_registry();
  for (const auto& e : estimators) {
    if (std::find(reg.begin(), reg.end(), e) == reg.end()) {
      throw ArgumentError("study: unknown estimator '" + e + "'");
    }
  }
}

const std::vector<std::string>& estimator_registry() {
  static const std::vector<std::string> names{"bgf", "dft", "hann", "dpss2", "dpss3", "dpss4"};
  return names;
}

nlohmann::ordered_json to_json(const StudyConfig& cfg) {
  nlohmann::ordered_json j;
  j["n_trials"] = cfg.n_trials;
  j["noise_sd"] = cfg.noise_sd;
  j["phi_min"] = cfg.phi_min;
  j["phi_max"] = cfg.phi_max;
  j["omega_min"] = cfg.omega_min;
  j["omega_max"] = cfg.omega_max;
  j["a_min"] = cfg.a_min;
  j["a_max"] = cfg.a_max;
  j["seed"] = cfg.seed;
  j["estimators"] = cfg.estimators;
  j["theta"] = cfg.theta;
  j["t_min"] = cfg.t_min;
  j["t_max"] = cfg.t_max;
  j["dt"] = cfg.dt;
  j["se_scale_bins"] = cfg.se_scale_bins;
  j["noiseless_lambda"] = cfg.noiseless_lambda;
  j["prior_weight"] = cfg.prior_weight;
  j["max_iters"] = cfg.max_iters;
  j["threads"] = cfg.threads;
  return j;
}

StudyConfig study_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("study config: expected a JSON object");
  StudyConfig cfg;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n_trials") cfg.n_trials = v.get<std::size_t>();
      else if (key == "noise_sd") cfg.noise_sd = v.get<double>();
      else if (key == "phi_min") cfg.phi_min = v.get<double>();
      else if (key == "phi_max") cfg.phi_max = v.get<double>();
      else if (key == "omega_min") cfg.omega_min = v.get<double>();
      else if (key == "omega_max") cfg.omega_max = v.get<double>();
      else if (key == "a_min") cfg.a_min = v.get<double>();
      else if (key == "a_max") cfg.a_max = v.get<double>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "estimators") cfg.estimators = v.get<std::vector<std::string>>();
      else if (key == "theta") cfg.theta = v.get<double>();
      else if (key == "t_min") cfg.t_min = v.get<double>();
      else if (key == "t_max") cfg.t_max = v.get<double>();
      else if (key == "dt") cfg.dt = v.get<double>();
      else if (key == "se_scale_bins") cfg.se_scale_bins = v.get<double>();
      else if (key == "noiseless_lambda") cfg.noiseless_lambda = v.get<double>();
      else if (key == "prior_weight") cfg.prior_weight = v.get<double>();
      else if (key == "max_iters") cfg.max_iters = v.get<std::size_t>();
      else if (key == "threads") cfg.threads = v.get<std::size_t>();
      else throw ParseError("study config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("study config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

StudyConfig read_study_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open study config '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("study config '" + path.string() + "': " + e.what());
  }
  return study_config_from_json(j);
}

ComplexSpectrum ground_truth_spectrum(const AnharmonicParams& p, std::span<const double> omega_grid) {
  ComplexSpectrum out;
  out.convention = "analog";
  out.freqs.assign(omega_grid.begin(), omega_grid.end());
  out.values.resize(omega_grid.size());
  const double c = p.a * conventions::kInvSqrtTwoPi;
  auto lobe = [&](double omega, double mu) {
    const double d = p.a * (omega - mu);
    return std::exp(-0.5 * d * d);
  };
  const cplx e1 = std::polar(1.0, p.phi0);
  const cplx e3 = std::polar(1.0, 3.0 * p.phi0);
  for (std::size_t m = 0; m < omega_grid.size(); ++m) {
    const double w = omega_grid[m];
    const cplx fundamental = e1 * lobe(w, p.omega0) + std::conj(e1) * lobe(w, -p.omega0);
    const cplx third = e3 * lobe(w, 3.0 * p.omega0) + std::conj(e3) * lobe(w, -3.0 * p.omega0);
    out.values[m] = c * (0.375 * fundamental + 0.125 * third);
  }
  return out;
}

BandDeviation band_deviation(const PowerSpectrum& est, const PowerSpectrum& truth, double theta) {
  if (est.size() != truth.size()) throw ArgumentError("band_deviation: grids differ in size");
  BandDeviation d;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const double diff = std::abs(est.power[j] - truth.power[j]);
    auto& band = std::log10(truth.power[j]) > theta ? d.passband : d.stopband;
    band = band.value_or(0.0) + diff;
  }
  return d;
}

BandDeviation band_log_deviation(const PowerSpectrum& est, const PowerSpectrum& truth, double theta) {
  if (est.size() != truth.size()) throw ArgumentError("band_log_deviation: grids differ in size");
  BandDeviation d;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const double diff = std::abs(std::log10(std::max(est.power[j], kLogFloor)) -
                                 std::log10(std::max(truth.power[j], kLogFloor)));
    auto& band = std::log10(truth.power[j]) > theta ? d.passband : d.stopband;
    band = band.value_or(0.0) + diff;
  }
  return d;
}

PowerSpectrum run_estimator(const std::string& name, const TimeSeries& ts, const PowerSpectrum& truth,
                            const StudyConfig& cfg) {
  if (name == "bgf") {
    const double sigma = cfg.se_scale_bins * conventions::kTwoPi / ts.duration();
    const double lambda = cfg.noise_sd > 0.0 ? cfg.noise_sd * cfg.noise_sd : cfg.noiseless_lambda;
    FitOptions opts;
    opts.max_iters = cfg.max_iters;
    opts.prior_weight = cfg.prior_weight;
    const auto fit = fit_bgf(ts, sigma, lambda, opts);
    return {truth.freqs, bgf_fourier(fit.posterior, truth.freqs).power()};
  }
  TaperSet taper;
  if (name == "dft") {
    taper = square_taper(ts.size());
  } else if (name == "hann") {
    taper = hann(ts.size());
  } else if (const auto k = dpss_order(name); k != 0) {
    taper = dpss(ts.size(), 0.5 * static_cast<double>(k + 1), k);
  } else {
    throw ArgumentError("unknown estimator '" + name + "'");
  }
  return normalize_energy(multitaper_spectrum(ts, taper), truth);
}

double StudyResult::rank1_fraction(const std::string& estimator, const std::string& band) const {
  const auto it = std::find(config.estimators.begin(), config.estimators.end(), estimator);
  if (it == config.estimators.end()) throw ArgumentError("rank1_fraction: unknown estimator '" + estimator + "'");
  const auto e = static_cast<std::size_t>(it - config.estimators.begin());
  if (band != "passband" && band != "stopband") {
    throw ArgumentError("rank1_fraction: band must be passband or stopband");
  }
  const auto& hist = band == "passband" ? pass_hist : stop_hist;
  return static_cast<double>(hist[e][0]) / static_cast<double>(trials.size());
}

std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

AnharmonicParams sample_params(const StudyConfig& cfg, std::uint64_t trial_seed) {
  std::mt19937_64 rng(trial_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AnharmonicParams p;
  p.a = cfg.a_max - unit(rng) * (cfg.a_max - cfg.a_min);  // (a_min, a_max]
  p.omega0 = cfg.omega_min + unit(rng) * (cfg.omega_max - cfg.omega_min);
  p.phi0 = cfg.phi_min + unit(rng) * (cfg.phi_max - cfg.phi_min);
  return p;
}

StudyResult run_study(const StudyConfig& cfg) {
  cfg.validate();
  StudyResult result;
  result.config = cfg;
  result.trials.resize(cfg.n_trials);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cfg.n_trials; i = next++) result.trials[i] = run_trial(cfg, i);
  };
  const std::size_t workers = worker_count(cfg);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  const std::size_t e = cfg.estimators.size();
  result.pass_hist.assign(e, std::vector<std::size_t>(e, 0));
  result.stop_hist.assign(e, std::vector<std::size_t>(e, 0));
  result.failures.assign(e, 0);
  for (const auto& rec : result.trials) {
    for (std::size_t i = 0; i < e; ++i) {
      if (rec.outcomes[i].failed) ++result.failures[i];
      if (rec.pass_rank[i] > 0) ++result.pass_hist[i][rec.pass_rank[i] - 1];
      if (rec.stop_rank[i] > 0) ++result.stop_hist[i][rec.stop_rank[i] - 1];
    }
  }
  return result;
}

nlohmann::ordered_json to_json(const StudyResult& result) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["config"] = to_json(result.config);
  auto& trials = j["trials"] = nlohmann::ordered_json::array();
  for (const auto& rec : result.trials) {
    nlohmann::ordered_json t;
    t["trial"] = rec.trial;
    t["seed"] = rec.seed;
    t["params"] = {{"a", rec.params.a}, {"omega0", rec.params.omega0}, {"phi0", rec.params.phi0}};
    auto& ests = t["estimators"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < rec.outcomes.size(); ++i) {
      const auto& o = rec.outcomes[i];
      nlohmann::ordered_json x;
      x["name"] = o.estimator;
      x["failed"] = o.failed;
      if (o.failed) x["error"] = o.error;
      x["passband"] = opt_json(o.power.passband);
      x["stopband"] = opt_json(o.power.stopband);
      x["log_passband"] = opt_json(o.log_power.passband);
      x["log_stopband"] = opt_json(o.log_power.stopband);
      x["passband_rank"] = rec.pass_rank[i];
      x["stopband_rank"] = rec.stop_rank[i];
      ests.push_back(std::move(x));
    }
    trials.push_back(std::move(t));
  }
  auto& ranks = j["ranks"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.config.estimators.size(); ++i) {
    ranks.push_back({{"estimator", result.config.estimators[i]},
                     {"passband", result.pass_hist[i]},
                     {"stopband", result.stop_hist[i]},
                     {"failures", result.failures[i]}});
  }
  return j;
}

void write_deviations_csv(const std::filesystem::path& path, const StudyResult& result) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "trial,estimator,band,value,log_value\n";
  for (const auto& rec : result.trials) {
    for (const auto& o : rec.outcomes) {
      const BandDeviation none;
      const auto& p = o.failed ? none : o.power;
      const auto& l = o.failed ? none : o.log_power;
      out << rec.trial << ',' << o.estimator << ",passband," << fmt(p.passband) << ',' << fmt(l.passband) << '\n';
      out << rec.trial << ',' << o.estimator << ",stopband," << fmt(p.stopband) << ',' << fmt(l.stopband) << '\n';
    }
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_ranks_csv(const std::filesystem::path& path, const StudyResult& result) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "estimator,band,rank,count\n";
  for (std::size_t i = 0; i < result.config.estimators.size(); ++i) {
    for (const auto* band : {"passband", "stopband"}) {
      const auto& hist = std::string_view(band) == "passband" ? result.pass_hist[i] : result.stop_hist[i];
      for (std::size_t r = 0; r < hist.size(); ++r) {
        out << result.config.estimators[i] << ',' << band << ',' << r + 1 << ',' << hist[r] << '\n';
      }
    }
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<std::filesystem::path> write_study(const std::filesystem::path& dir, const StudyResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  const auto json_path = dir / "result.json";
  {
    std::ofstream out(json_path);
    if (!out) throw IoError("cannot write '" + json_path.string() + "'");
    out << to_json(result).dump(2) << '\n';
  }
  write_deviations_csv(dir / "deviations.csv", result);
  write_ranks_csv(dir / "ranks.csv", result);
  return {json_path, dir / "deviations.csv", dir / "ranks.csv"};
}

}  // namespace gpfourier

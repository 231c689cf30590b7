#include "feedacc/geostat.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>
#include <omp.h>

#include "feedacc/csv.hpp"
#include "feedacc/error.hpp"

namespace feedacc {
namespace {

// Sites closer than this (meters) are the same location.
constexpr double kCoincident = 1e-6;

struct LinearFit {
  double sse = std::numeric_limits<double>::infinity();
  double nugget = 0.0;
  double partial_sill = 0.0;
};

// min sum w_k (n + p f_k - g_k)^2 subject to n, p >= 0.
LinearFit nnls2(std::span<const double> f, std::span<const double> g, std::span<const double> w) {
  double sw = 0, swf = 0, swff = 0, swg = 0, swfg = 0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    sw += w[k];
    swf += w[k] * f[k];
    swff += w[k] * f[k] * f[k];
    swg += w[k] * g[k];
    swfg += w[k] * f[k] * g[k];
  }
  auto sse = [&](double n, double p) {
    double s = 0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double r = n + p * f[k] - g[k];
      s += w[k] * r * r;
    }
    return s;
  };
  LinearFit best;
  auto consider = [&](double n, double p) {
    if (n < 0 || p < 0) return;
    const double s = sse(n, p);
    if (s < best.sse) best = {s, n, p};
  };

  const double det = sw * swff - swf * swf;
  if (std::abs(det) > 1e-12 * std::max(1.0, sw * swff)) {
    consider((swff * swg - swf * swfg) / det, (sw * swfg - swf * swg) / det);
  }
  if (swff > 0) consider(0.0, std::max(0.0, swfg / swff));
  consider(std::max(0.0, swg / sw), 0.0);
  consider(0.0, 0.0);
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// Experimental semivariance

ExperimentalVariogram experimental_semivariance(std::span<const SiteValue> obs, double max_lag,
                                                std::size_t n_bins) {
  if (obs.size() < 2) throw InsufficientData("semivariance needs at least two observations");
  if (!(max_lag > 0.0)) throw InvalidParameter("max_lag must be positive");
  if (n_bins == 0) throw InvalidParameter("need at least one lag bin");

  const double width = max_lag / static_cast<double>(n_bins);
  std::vector<double> sums(n_bins, 0.0);
  std::vector<std::size_t> counts(n_bins, 0);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    for (std::size_t j = i + 1; j < obs.size(); ++j) {
      const double d = distance(obs[i].site, obs[j].site);
      if (d > max_lag) continue;
      const auto k = std::min(n_bins - 1, static_cast<std::size_t>(d / width));
      const double diff = obs[i].value - obs[j].value;
      sums[k] += 0.5 * diff * diff;
      ++counts[k];
    }
  }
  ExperimentalVariogram ev;
  for (std::size_t k = 0; k < n_bins; ++k) {
    if (counts[k] == 0) continue;
    ev.bins.push_back({(static_cast<double>(k) + 0.5) * width,
                       sums[k] / static_cast<double>(counts[k]), counts[k]});
  }
  return ev;
}

// ---------------------------------------------------------------------------
// Variogram models

std::string_view to_string(VariogramFamily f) {
  switch (f) {
    case VariogramFamily::Spherical: return "spherical";
    case VariogramFamily::Exponential: return "exponential";
    case VariogramFamily::Linear: return "linear";
  }
  return "?";
}

VariogramFamily parse_variogram_family(std::string_view text) {
  if (text == "spherical") return VariogramFamily::Spherical;
  if (text == "exponential") return VariogramFamily::Exponential;
  if (text == "linear") return VariogramFamily::Linear;
  throw InvalidParameter(fmt::format("unknown variogram family '{}'", text));
}

double VariogramModel::shape(double d) const {
  const double h = d / range;
  switch (family) {
    case VariogramFamily::Spherical:
      return h >= 1.0 ? 1.0 : 1.5 * h - 0.5 * h * h * h;
    case VariogramFamily::Exponential:
      // practical range: 95% of the sill at d == range
      return 1.0 - std::exp(-3.0 * h);
    case VariogramFamily::Linear:
      return std::min(h, 1.0);
  }
  return 0.0;
}

double VariogramModel::operator()(double d) const {
  if (d <= 0.0) return 0.0;
  return nugget + partial_sill * shape(d);
}

VariogramModel fit_variogram(const ExperimentalVariogram& ev, VariogramFamily family) {
  if (ev.bins.size() < 2) throw InsufficientData("variogram fit needs at least two lag bins");

  const std::size_t n = ev.bins.size();
  double scale = 0.0;
  double max_lag = 0.0;
  std::vector<double> lag(n), g(n), w(n), f(n);
  for (std::size_t k = 0; k < n; ++k) {
    lag[k] = ev.bins[k].lag_center;
    w[k] = static_cast<double>(ev.bins[k].pair_count);
    scale = std::max(scale, ev.bins[k].semivariance);
    max_lag = std::max(max_lag, lag[k]);
  }
  if (!(max_lag > 0.0)) throw InsufficientData("all lag bins at zero distance");

  const double r_lo = max_lag * 1e-3;
  const double r_hi = max_lag * 10.0;
  if (scale <= 0.0) return {family, 0.0, 0.0, r_lo};
  for (std::size_t k = 0; k < n; ++k) g[k] = ev.bins[k].semivariance / scale;

  VariogramModel probe{family, 0.0, 1.0, 1.0};
  auto fit_at = [&](double r) {
    probe.range = r;
    for (std::size_t k = 0; k < n; ++k) f[k] = probe.shape(lag[k]);
    return nnls2(f, g, w);
  };

  constexpr int kScan = 200;
  const double ratio = std::log(r_hi / r_lo);
  std::vector<double> grid(kScan);
  int best_i = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kScan; ++i) {
    grid[static_cast<std::size_t>(i)] = r_lo * std::exp(ratio * i / (kScan - 1));
    const double s = fit_at(grid[static_cast<std::size_t>(i)]).sse;
    if (s < best_sse) {
      best_sse = s;
      best_i = i;
    }
  }
  double best_r = grid[static_cast<std::size_t>(best_i)];
  const double a = grid[static_cast<std::size_t>(std::max(0, best_i - 1))];
  const double b = grid[static_cast<std::size_t>(std::min(kScan - 1, best_i + 1))];
  const auto [r_opt, sse_opt] = boost::math::tools::brent_find_minima(
      [&](double r) { return fit_at(r).sse; }, a, b, std::numeric_limits<double>::digits);
  if (sse_opt < best_sse) best_r = r_opt;

  const LinearFit lf = fit_at(best_r);
  if (lf.partial_sill <= 1e-12) return {family, lf.nugget * scale, 0.0, r_lo};
  return {family, lf.nugget * scale, lf.partial_sill * scale, best_r};
}

// ---------------------------------------------------------------------------
// Ordinary kriging

struct OrdinaryKriging::Impl {
  std::vector<Point> sites;
  std::vector<double> values;
  std::vector<std::vector<std::size_t>> members;
  std::size_t n_input = 0;
  VariogramModel model;
  double gamma_scale = 1.0;
  Eigen::MatrixXd system;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;

  double gamma(double d) const { return d <= kCoincident ? 0.0 : model(d) / gamma_scale; }
};

OrdinaryKriging::OrdinaryKriging(std::span<const SiteValue> obs, const VariogramModel& model)
    : impl_(std::make_unique<Impl>()) {
  if (obs.empty()) throw InsufficientData("kriging needs at least one observation");
  if (!(model.range > 0.0) || model.nugget < 0.0 || model.partial_sill < 0.0)
    throw InvalidParameter("invalid variogram model");

  auto& s = *impl_;
  s.n_input = obs.size();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    std::size_t k = 0;
    while (k < s.sites.size() && distance(s.sites[k], obs[i].site) > kCoincident) ++k;
    if (k == s.sites.size()) {
      s.sites.push_back(obs[i].site);
      s.values.push_back(0.0);
      s.members.emplace_back();
    }
    s.members[k].push_back(i);
    s.values[k] += obs[i].value;
  }
  for (std::size_t k = 0; k < s.sites.size(); ++k)
    s.values[k] /= static_cast<double>(s.members[k].size());

  // A field without spatial variance still needs an invertible system; any
  // valid model yields the same weights-sum-to-one estimate there.
  s.model = model;
  if (s.model.sill() <= 0.0) s.model = {model.family, 0.0, 1.0, model.range};
  s.gamma_scale = s.model.sill();

  const auto m = static_cast<Eigen::Index>(s.sites.size());
  s.system.resize(m + 1, m + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j)
      s.system(i, j) = i == j ? 0.0
                              : s.gamma(distance(s.sites[static_cast<std::size_t>(i)],
                                                 s.sites[static_cast<std::size_t>(j)]));
    s.system(i, m) = 1.0;
    s.system(m, i) = 1.0;
  }
  s.system(m, m) = 0.0;
  s.lu.compute(s.system);
  const double rcond = s.lu.rcond();
  if (!(rcond > 1e-14))
    throw NumericalSingularity(fmt::format("kriging system is singular (rcond {})", rcond));
}

OrdinaryKriging::~OrdinaryKriging() = default;
OrdinaryKriging::OrdinaryKriging(OrdinaryKriging&&) noexcept = default;
OrdinaryKriging& OrdinaryKriging::operator=(OrdinaryKriging&&) noexcept = default;

std::size_t OrdinaryKriging::merged_size() const { return impl_->sites.size(); }

KrigingResult OrdinaryKriging::predict(const Point& target) const {
  const auto& s = *impl_;
  const auto m = static_cast<Eigen::Index>(s.sites.size());
  Eigen::VectorXd rhs(m + 1);
  for (Eigen::Index i = 0; i < m; ++i)
    rhs(i) = s.gamma(distance(target, s.sites[static_cast<std::size_t>(i)]));
  rhs(m) = 1.0;

  Eigen::VectorXd x = s.lu.solve(rhs);
  const Eigen::VectorXd residual = rhs - s.system * x;
  x += s.lu.solve(residual);

  KrigingResult out;
  out.weights.assign(s.n_input, 0.0);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& group = s.members[static_cast<std::size_t>(i)];
    out.estimate += x(i) * s.values[static_cast<std::size_t>(i)];
    for (std::size_t idx : group) out.weights[idx] = x(i) / static_cast<double>(group.size());
  }
  if (out.estimate < 0.0) {
    out.estimate = 0.0;
    out.clamped = true;
  }
  return out;
}

KrigingResult krige(const Point& target, std::span<const SiteValue> obs,
                    const VariogramModel& model) {
  return OrdinaryKriging(obs, model).predict(target);
}

// ---------------------------------------------------------------------------
// Bucket estimation

std::string_view to_string(EstimateMethod m) {
  switch (m) {
    case EstimateMethod::Kriging: return "kriging";
    case EstimateMethod::FallbackMean: return "fallback_mean";
    case EstimateMethod::FallbackNearest: return "fallback_nearest";
  }
  return "?";
}

EstimateMethod parse_estimate_method(std::string_view text) {
  if (text == "kriging") return EstimateMethod::Kriging;
  if (text == "fallback_mean") return EstimateMethod::FallbackMean;
  if (text == "fallback_nearest") return EstimateMethod::FallbackNearest;
  throw FormatError(fmt::format("unknown estimate method '{}'", text));
}

namespace {

struct FieldOutcome {
  FieldDiagnostics diag;
  std::vector<double> values;  // per target
};

FieldOutcome estimate_field(std::span<const SiteValue> obs, std::span<const Point> targets,
                            double max_lag, const KrigingConfig& config) {
  FieldOutcome out;
  out.diag.n_obs = obs.size();
  out.values.resize(targets.size());

  if (obs.size() >= config.min_obs_for_kriging && obs.size() >= 2 && max_lag > 0.0) {
    try {
      out.diag.variogram = experimental_semivariance(obs, max_lag, config.lag_bins);
      const VariogramModel model = fit_variogram(out.diag.variogram, config.family);
      const OrdinaryKriging ok(obs, model);
      for (std::size_t t = 0; t < targets.size(); ++t) {
        const KrigingResult r = ok.predict(targets[t]);
        out.values[t] = r.estimate;
        if (r.clamped) ++out.diag.clamped_count;
      }
      out.diag.model = model;
      out.diag.method = EstimateMethod::Kriging;
      return out;
    } catch (const InsufficientData&) {
    } catch (const NumericalSingularity&) {
    }
  }

  out.diag.clamped_count = 0;
  if (config.fallback == FallbackRule::Nearest) {
    out.diag.method = EstimateMethod::FallbackNearest;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < obs.size(); ++i)
        if (squared_distance(targets[t], obs[i].site) < squared_distance(targets[t], obs[best].site))
          best = i;
      out.values[t] = obs[best].value;
    }
  } else {
    out.diag.method = EstimateMethod::FallbackMean;
    double sum = 0.0;
    for (const auto& o : obs) sum += o.value;
    std::fill(out.values.begin(), out.values.end(), sum / static_cast<double>(obs.size()));
  }
  return out;
}

double max_pair_distance(std::span<const SiteValue> obs) {
  double best = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i)
    for (std::size_t j = i + 1; j < obs.size(); ++j)
      best = std::max(best, distance(obs[i].site, obs[j].site));
  return best;
}

}  // namespace

BucketResult krige_field(const TimeslotKey& key, std::span<const TripObservation> bucket,
                         const FeederArea& feeder, const Hub& hub, const Grid& grid,
                         const KrigingConfig& config) {
  if (bucket.empty()) throw InvalidParameter("krige_field on an empty bucket");

  std::vector<SiteValue> waits, travels;
  waits.reserve(bucket.size());
  travels.reserve(bucket.size());
  for (const auto& o : bucket) {
    waits.push_back({o.site(), o.wait});
    travels.push_back({o.site(), o.travel});
  }
  std::vector<Point> targets;
  targets.reserve(feeder.cell_ids.size());
  for (CellId c : feeder.cell_ids) targets.push_back(grid.cell(c).centroid);

  // Half the feeder-area diameter.
  double max_lag = feeder.radius;
  if (!(max_lag > 0.0)) max_lag = max_pair_distance(waits) / 2;

  BucketResult result;
  result.key = key;
  auto w = estimate_field(waits, targets, max_lag, config);
  auto y = estimate_field(travels, targets, max_lag, config);
  result.wait = std::move(w.diag);
  result.travel = std::move(y.diag);

  EstimateMethod method = EstimateMethod::Kriging;
  if (result.wait.method != EstimateMethod::Kriging) method = result.wait.method;
  else if (result.travel.method != EstimateMethod::Kriging) method = result.travel.method;

  result.estimates.reserve(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t)
    result.estimates.push_back(
        {key, feeder.cell_ids[t], w.values[t], y.values[t], bucket.size(), method});

  // Stationarity diagnostic on travel times.
  std::vector<std::size_t> order(bucket.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return distance(bucket[a].site(), hub.location) < distance(bucket[b].site(), hub.location);
  });
  const std::size_t half = bucket.size() / 2;
  double near = 0.0, far = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) (i < half ? near : far) += bucket[order[i]].travel;
  result.stationarity.far_mean = far / static_cast<double>(order.size() - half);
  result.stationarity.near_mean =
      half > 0 ? near / static_cast<double>(half) : result.stationarity.far_mean;
  return result;
}

std::vector<BucketResult> krige_buckets_serial(std::span<const BucketInput> buckets,
                                               const Grid& grid, const KrigingConfig& config) {
  std::vector<BucketResult> out;
  out.reserve(buckets.size());
  for (const auto& b : buckets)
    out.push_back(krige_field(b.key, b.observations, *b.feeder, *b.hub, grid, config));
  return out;
}

std::vector<BucketResult> krige_buckets(std::span<const BucketInput> buckets, const Grid& grid,
                                        const KrigingConfig& config, int workers) {
  std::vector<BucketResult> out(buckets.size());
  std::exception_ptr failure;
  const int threads = workers > 0 ? workers : omp_get_max_threads();
  const auto n = static_cast<std::ptrdiff_t>(buckets.size());

#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto& b = buckets[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(i)] =
          krige_field(b.key, b.observations, *b.feeder, *b.hub, grid, config);
    } catch (...) {
#pragma omp critical(feedacc_krige_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

// ---------------------------------------------------------------------------
// Artifacts

void write_estimates(const std::filesystem::path& path, std::span<const BucketResult> results) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(fmt::format("cannot write '{}'", path.string()));
  write_csv_row(out, {"hub", "direction", "t_k", "cell_id", "w_hat", "y_hat", "n_obs", "method"});
  for (const auto& r : results)
    for (const auto& e : r.estimates)
      write_csv_row(out, {e.key.hub_id, std::string(to_string(e.key.direction)),
                          std::to_string(e.key.slot_start), std::to_string(e.centroid_id),
                          fmt::format("{}", e.w_hat), fmt::format("{}", e.y_hat),
                          std::to_string(e.n_obs), std::string(to_string(e.method))});
}

std::vector<FieldEstimate> read_estimates(const std::filesystem::path& path, Seconds slot_length) {
  const CsvTable t = read_csv(path);
  const auto c_hub = t.require("hub");
  const auto c_dir = t.require("direction");
  const auto c_tk = t.require("t_k");
  const auto c_cell = t.require("cell_id");
  const auto c_w = t.require("w_hat");
  const auto c_y = t.require("y_hat");
  const auto c_n = t.require("n_obs");
  const auto c_m = t.require("method");
  std::vector<FieldEstimate> out;
  out.reserve(t.rows().size());
  for (const auto& r : t.rows()) {
    FieldEstimate e;
    e.key = {r[c_hub], parse_direction(r[c_dir]), static_cast<Seconds>(parse_int(r[c_tk], "t_k")), slot_length};
    e.centroid_id = static_cast<CellId>(parse_int(r[c_cell], "cell_id"));
    e.w_hat = parse_double(r[c_w], "w_hat");
    e.y_hat = parse_double(r[c_y], "y_hat");
    e.n_obs = static_cast<std::size_t>(parse_int(r[c_n], "n_obs"));
    e.method = parse_estimate_method(r[c_m]);
    out.push_back(std::move(e));
  }
  return out;
}

void write_diagnostics(const std::filesystem::path& path, std::span<const BucketResult> results,
                       bool travel_field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(fmt::format("cannot write '{}'", path.string()));
  write_csv_row(out, {"hub", "direction", "t_k", "n_obs", "method", "nugget", "sill", "range",
                      "clamped_count"});
  for (const auto& r : results) {
    const FieldDiagnostics& d = travel_field ? r.travel : r.wait;
    CsvRow row{r.key.hub_id, std::string(to_string(r.key.direction)),
               std::to_string(r.key.slot_start), std::to_string(d.n_obs),
               std::string(to_string(d.method))};
    if (d.model) {
      row.push_back(fmt::format("{}", d.model->nugget));
      row.push_back(fmt::format("{}", d.model->sill()));
      row.push_back(fmt::format("{}", d.model->range));
    } else {
      row.insert(row.end(), {"", "", ""});
    }
    row.push_back(std::to_string(d.clamped_count));
    write_csv_row(out, row);
  }
}

void write_variogram_csv(const std::filesystem::path& path, const ExperimentalVariogram& ev) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(fmt::format("cannot write '{}'", path.string()));
  write_csv_row(out, {"lag_center", "semivariance", "pairs"});
  for (const auto& b : ev.bins)
    write_csv_row(out, {fmt::format("{}", b.lag_center), fmt::format("{}", b.semivariance),
                        std::to_string(b.pair_count)});
}

}  // namespace feedacc

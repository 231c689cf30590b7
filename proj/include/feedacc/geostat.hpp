#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "feedacc/geometry.hpp"
#include "feedacc/ingest.hpp"
#include "feedacc/tessellation.hpp"

namespace feedacc {

/// An observed value at a location (seconds for wait/travel fields).
struct SiteValue {
  Point site;
  double value = 0.0;
};

struct LagBin {
  double lag_center = 0.0;    // meters
  double semivariance = 0.0;  // mean of 0.5 (v_i - v_j)^2 over the bin's pairs
  std::size_t pair_count = 0;
};

struct ExperimentalVariogram {
  std::vector<LagBin> bins;  // strictly increasing lag_center, empty bins dropped
};

inline constexpr std::size_t kDefaultLagBins = 10;

/// Bins 0.5 (v_i - v_j)^2 over all unordered pairs with |x_i - x_j| <= max_lag
/// into `n_bins` equal-width bins; lag_center is the bin midpoint.
/// Throws InsufficientData for fewer than two observations.
ExperimentalVariogram experimental_semivariance(std::span<const SiteValue> obs, double max_lag,
                                                std::size_t n_bins = kDefaultLagBins);

enum class VariogramFamily { Spherical, Exponential, Linear };

std::string_view to_string(VariogramFamily f);
VariogramFamily parse_variogram_family(std::string_view text);

struct VariogramModel {
  VariogramFamily family = VariogramFamily::Spherical;
  double nugget = 0.0;
  double partial_sill = 0.0;
  double range = 1.0;

  double sill() const { return nugget + partial_sill; }
  /// gamma(d); zero at d == 0, nugget + partial_sill * shape(d / range) beyond.
  double operator()(double d) const;
  /// Normalized structure function in [0, 1], non-decreasing in d.
  double shape(double d) const;
};

/// Weighted least squares (weights = pair counts) fit of nugget, partial sill
/// and range with non-negativity bounds. Throws InsufficientData for fewer
/// than two bins.
VariogramModel fit_variogram(const ExperimentalVariogram& ev, VariogramFamily family);

struct KrigingResult {
  double estimate = 0.0;
  std::vector<double> weights;  // one per input observation, sum to 1
  bool clamped = false;         // negative estimate clamped to 0
};

/// Ordinary kriging system for a fixed observation set; factorized once and
/// reused for every target. Observations at coincident locations are merged
/// (averaged) before the solve; their merged weight is split evenly.
class OrdinaryKriging {
 public:
  OrdinaryKriging(std::span<const SiteValue> obs, const VariogramModel& model);
  ~OrdinaryKriging();
  OrdinaryKriging(OrdinaryKriging&&) noexcept;
  OrdinaryKriging& operator=(OrdinaryKriging&&) noexcept;

  KrigingResult predict(const Point& target) const;
  std::size_t merged_size() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

KrigingResult krige(const Point& target, std::span<const SiteValue> obs,
                    const VariogramModel& model);

enum class EstimateMethod { Kriging, FallbackMean, FallbackNearest };
std::string_view to_string(EstimateMethod m);
EstimateMethod parse_estimate_method(std::string_view text);

enum class FallbackRule { Mean, Nearest };

struct KrigingConfig {
  VariogramFamily family = VariogramFamily::Spherical;
  std::size_t min_obs_for_kriging = 5;
  std::size_t lag_bins = kDefaultLagBins;
  FallbackRule fallback = FallbackRule::Mean;
};

struct FieldEstimate {
  TimeslotKey key;
  CellId centroid_id = 0;
  double w_hat = 0.0;
  double y_hat = 0.0;
  std::size_t n_obs = 0;
  EstimateMethod method = EstimateMethod::Kriging;
};

/// Per-field (wait or travel) outcome of one bucket.
struct FieldDiagnostics {
  std::size_t n_obs = 0;
  EstimateMethod method = EstimateMethod::Kriging;
  std::optional<VariogramModel> model;
  ExperimentalVariogram variogram;
  std::size_t clamped_count = 0;
};

/// Travel-time stationarity check: mean of the observations nearer to the hub
/// than the median distance versus the mean of the farther half.
struct StationarityDiagnostic {
  double near_mean = 0.0;
  double far_mean = 0.0;
};

struct BucketResult {
  TimeslotKey key;
  std::vector<FieldEstimate> estimates;  // one per feeder cell, ascending id
  FieldDiagnostics wait;
  FieldDiagnostics travel;
  StationarityDiagnostic stationarity;
};

/// Kriges wait and travel fields of one bucket at every feeder-area centroid.
/// Degraded cases (too few observations, failed fit or singular system) fall
/// back per `config.fallback` and are recorded, never thrown.
BucketResult krige_field(const TimeslotKey& key, std::span<const TripObservation> bucket,
                         const FeederArea& feeder, const Hub& hub, const Grid& grid,
                         const KrigingConfig& config);

struct BucketInput {
  TimeslotKey key;
  std::span<const TripObservation> observations;
  const FeederArea* feeder = nullptr;
  const Hub* hub = nullptr;
};

/// Reference implementation: buckets processed one after another.
std::vector<BucketResult> krige_buckets_serial(std::span<const BucketInput> buckets,
                                               const Grid& grid, const KrigingConfig& config);
/// OpenMP implementation; output order and content match the serial one.
std::vector<BucketResult> krige_buckets(std::span<const BucketInput> buckets, const Grid& grid,
                                        const KrigingConfig& config, int workers = 0);

// Artifacts.
void write_estimates(const std::filesystem::path& path, std::span<const BucketResult> results);
std::vector<FieldEstimate> read_estimates(const std::filesystem::path& path, Seconds slot_length);
/// `hub,direction,t_k,n_obs,method,nugget,sill,range,clamped_count`, one file per field.
void write_diagnostics(const std::filesystem::path& path, std::span<const BucketResult> results,
                       bool travel_field);
void write_variogram_csv(const std::filesystem::path& path, const ExperimentalVariogram& ev);

}  // namespace feedacc

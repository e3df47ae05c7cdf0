#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "parkzone/civil_time.hpp"
#include "parkzone/ingest.hpp"

namespace parkzone {

enum class WeightMode {
  knn,
  global_distance,
  area_connections,
  area_distance,
  gmm_connections,
  gmm_distance,
};

/// "knn:5", "global_distance", ...
std::string mode_name(WeightMode mode, int knn_k = 0);
std::pair<WeightMode, int> parse_weight_mode(std::string_view text);
bool needs_labels(WeightMode mode);

/// Dense n x n spatial weights: nonnegative, zero diagonal.
class WeightMatrix {
 public:
  WeightMatrix(std::size_t n, WeightMode mode, int knn_k = 0);

  std::size_t size() const { return n_; }
  WeightMode mode() const { return mode_; }
  int knn_k() const { return knn_k_; }

  double operator()(std::size_t i, std::size_t j) const { return w_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double value);
  std::span<const double> row(std::size_t i) const { return {w_.data() + i * n_, n_}; }

  double total() const;
  /// Rows without any positive weight (singleton label groups).
  std::vector<std::size_t> zero_rows() const;
  /// (W + W^T) / 2
  WeightMatrix symmetrized() const;

 private:
  std::size_t n_;
  WeightMode mode_;
  int knn_k_;
  std::vector<double> w_;
};

struct WeightContext {
  int knn_k = 0;
  /// Zone or component label per block; required by the area and gmm modes.
  std::vector<int> labels;
};

/// Map arbitrary string labels to dense integers in first-seen order.
std::vector<int> encode_labels(std::span<const std::string> labels);

/// `ids` breaks kNN distance ties (lexicographic).
WeightMatrix build_weights(std::span<const LatLon> midpoints, std::span<const std::string> ids, WeightMode mode,
                           const WeightContext& context);

double morans_i(std::span<const double> occupancy, const WeightMatrix& weights);

enum class SignificanceMethod { analytic, permutation };

struct SignificanceConfig {
  SignificanceMethod method = SignificanceMethod::analytic;
  int permutations = 999;
  std::uint64_t seed = 0;
};

inline constexpr double kSignificanceLevel = 0.01;

struct MoranReport {
  double I = 0.0;
  double expected_I = 0.0;
  double z_score = 0.0;
  double p_value = 1.0;
  bool significant = false;
  std::string mode;
  std::string slice;
};

/// Analytic: normal approximation under the randomization assumption.
/// Permutation: two-sided tail of |I_perm - E[I]| with +1 smoothing.
MoranReport significance(std::span<const double> occupancy, const WeightMatrix& weights,
                         const SignificanceConfig& config);

struct WeightsSpec {
  WeightMode mode = WeightMode::knn;
  int knn_k = 5;
  std::vector<int> area_labels;                  // aligned with grid rows
  std::map<SliceKey, std::vector<int>> gmm_labels;  // per (weekday, hour)
};

struct SweepRow {
  HourStamp instance;
  MoranReport report;
};

struct SweepResult {
  std::string mode;
  std::vector<SweepRow> rows;
  std::vector<std::pair<HourStamp, std::string>> degenerate;
  std::size_t zero_row_instances = 0;  // instances whose weights had at least one all-zero row

  std::size_t significant_count() const;
  /// Percentage of non-degenerate instances with p < 0.01.
  double percent_significant() const;
};

/// Runs the significance test on every requested (date, hour) instance.
SweepResult significance_sweep(const OccupancyGrid& grid, std::span<const LatLon> midpoints,
                               const WeightsSpec& spec, std::span<const HourStamp> instances,
                               const SignificanceConfig& config);

/// `slice_date,slice_hour,mode,I,z,p,significant`
std::string sweep_to_csv(std::span<const SweepResult> results);

}  // namespace parkzone

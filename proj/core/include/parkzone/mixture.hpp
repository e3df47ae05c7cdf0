#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace parkzone {

/// latitude, longitude, occupancy
inline constexpr std::size_t kFeatureDims = 3;
using FeatureRow = std::array<double, kFeatureDims>;

inline constexpr double kVarianceFloor = 1e-6;
inline constexpr double kCollapseMassFraction = 1e-8;

/// Column-wise min/max used for min-max normalization.
struct NormParams {
  FeatureRow min{};
  FeatureRow max{};

  bool operator==(const NormParams&) const = default;

  /// Constant columns (max == min) normalize to 0.
  FeatureRow normalize(const FeatureRow& raw) const;
  FeatureRow denormalize(const FeatureRow& normalized) const;
};

/// n x 3 matrix of normalized features plus the parameters that produced it.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;

  /// Fit min/max on `raw` and normalize every column into [0, 1].
  static FeatureMatrix fit(std::span<const FeatureRow> raw);

  /// Normalize with fixed parameters; values may fall outside [0, 1].
  static FeatureMatrix with_params(std::span<const FeatureRow> raw, const NormParams& params);

  /// Wrap already-normalized rows.
  static FeatureMatrix from_normalized(std::vector<FeatureRow> rows, const NormParams& params);

  std::size_t rows() const { return data_.size(); }
  const FeatureRow& row(std::size_t i) const { return data_[i]; }
  std::span<const FeatureRow> data() const { return data_; }
  const NormParams& norm() const { return norm_; }

 private:
  std::vector<FeatureRow> data_;
  NormParams norm_;
};

/// Diagonal-covariance Gaussian mixture fitted on normalized features.
struct ZoneModel {
  int k = 0;
  std::vector<double> weights;    // k
  std::vector<FeatureRow> means;  // k
  std::vector<FeatureRow> variances;  // k, diagonal entries
  NormParams norm;
  double log_likelihood = 0.0;
  std::vector<int> assignments;
  std::uint64_t seed = 0;

  /// Throws invalid_model on shape mismatch, non-simplex weights or variances below the floor.
  void validate() const;
};

/// n x k posterior matrix; rows sum to one.
class Responsibilities {
 public:
  Responsibilities(std::size_t n, std::size_t k) : n_(n), k_(k), r_(n * k, 0.0) {}

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return k_; }
  double operator()(std::size_t i, std::size_t j) const { return r_[i * k_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return r_[i * k_ + j]; }
  std::span<const double> row(std::size_t i) const { return {r_.data() + i * k_, k_}; }

 private:
  std::size_t n_;
  std::size_t k_;
  std::vector<double> r_;
};

struct EmConfig {
  double epsilon = 1e-6;
  int max_iter = 500;
  int restarts = 10;
  std::uint64_t seed = 0;
};

/// log N(x | mean, diag(variance)) for d = 3.
double log_gaussian(const FeatureRow& x, const FeatureRow& mean, const FeatureRow& variance);

double log_likelihood(const FeatureMatrix& features, const ZoneModel& model);

Responsibilities e_step(const FeatureMatrix& features, const ZoneModel& model);

struct MStepResult {
  std::vector<double> weights;
  std::vector<FeatureRow> means;
  std::vector<FeatureRow> variances;
  /// Components whose responsibility mass fell below 1e-8 * n.
  std::vector<int> collapsed;
};

MStepResult m_step(const FeatureMatrix& features, const Responsibilities& responsibilities);

/// Per-restart diagnostics; `log_likelihood[0]` is the value at initialization.
struct RestartTrace {
  std::vector<double> log_likelihood;
  /// Iteration indices (into log_likelihood) right after a collapsed component was reseeded.
  std::vector<std::size_t> reinitialized_at;
  bool discarded = false;
  bool converged = false;
};

struct FitTrace {
  std::vector<RestartTrace> restarts;
  int best_restart = -1;
};

/// EM with `config.restarts` k-means++-seeded initializations; keeps the
/// restart with the highest final log likelihood.
ZoneModel em_fit(const FeatureMatrix& features, int k, const EmConfig& config, FitTrace* trace = nullptr);

/// Argmax-responsibility labels (ties go to the lowest index).
std::vector<int> hard_assignments(const Responsibilities& responsibilities);

/// Labels for new, already-normalized features under a fixed model.
std::vector<int> assign(const FeatureMatrix& features, const ZoneModel& model);

/// k * (2d + 1)
int degrees_of_freedom(int k);

/// -2 LL + ln(n) * nu
double bic(const ZoneModel& model, std::size_t n);

}  // namespace parkzone

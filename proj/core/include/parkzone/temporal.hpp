#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "parkzone/civil_time.hpp"
#include "parkzone/ingest.hpp"
#include "parkzone/kmeans.hpp"
#include "parkzone/mixture.hpp"

namespace parkzone {

// -- consistency -------------------------------------------------------------

struct AnchorResult {
  Date date;
  double percent = 0.0;  // mean agreement over the other dates
};

struct ConsistencyReport {
  SliceKey slice;
  std::vector<Date> dates;
  std::vector<AnchorResult> anchors;
  std::vector<std::pair<Date, std::string>> skipped_anchors;
  double mean = 0.0;
  /// Models fitted on each usable anchor date, aligned with `anchors`.
  std::vector<ZoneModel> anchor_models;
};

struct ConsistencyConfig {
  EmConfig em;
  std::optional<DateRange> range;
};

/// Percentage of positions where the two label vectors agree.
double label_agreement_percent(std::span<const int> anchor, std::span<const int> other);

/// Average of the per-comparison agreement percentages for one anchor.
double anchor_consistency(std::span<const int> anchor_labels, std::span<const std::vector<int>> comparison_labels);

/// Seed used for the anchor fit on `date`.
std::uint64_t anchor_seed(std::uint64_t base, Date date, int hour);

/// Repeatability of the mixture zones for one (weekday, hour): fit on each
/// anchor date, label every other matching date with the anchor model, and
/// average the agreement first over comparison dates, then over anchors.
ConsistencyReport consistency_metric(const OccupancyGrid& grid, std::span<const LatLon> midpoints,
                                     const SliceKey& slice, int k, const ConsistencyConfig& config);

/// Rows per weekday, one column per paid hour, plus `Daily` and `Hourly` margins.
std::string consistency_table_csv(std::span<const ConsistencyReport> reports);

// -- component centre dispersion ---------------------------------------------

struct CentroidDispersion {
  SliceKey slice;
  int k = 0;
  double mean_distance_m = 0.0;
};

/// Pools the (lat, lon) centres of every model's components, clusters them
/// with k-means and returns the mean haversine distance to the assigned centroid.
CentroidDispersion centroid_dispersion(std::span<const ZoneModel> models, int k, const KMeansConfig& config = {});

std::string dispersion_csv(std::span<const CentroidDispersion> rows);

// -- seasonal and price-change deltas ----------------------------------------

struct SeasonalDeltaRow {
  int hour = 0;
  double mean_increase_pct = 0.0;  // percentage points, among increasing blocks
  double mean_decrease_pct = 0.0;  // percentage points (positive), among decreasing blocks
  double pct_increasing = 0.0;
  std::size_t increasing = 0;
  std::size_t non_increasing = 0;
  std::size_t excluded = 0;
};

struct SeasonalDelta {
  std::vector<SeasonalDeltaRow> rows;
};

SeasonalDelta seasonal_delta(const OccupancyGrid& grid, const DateRange& season_a, const DateRange& season_b);
std::string seasonal_delta_csv(const SeasonalDelta& delta);

inline constexpr double kRelativeChangeFloor = 0.01;

struct OccupancyDiffRow {
  std::string zone;
  SliceKey slice;
  double relative_change_pct = 0.0;
  std::size_t blocks = 0;
  std::size_t flagged = 0;  // blocks whose baseline was raised to the floor
};

struct OccupancyDiff {
  std::vector<OccupancyDiffRow> rows;
  std::size_t excluded = 0;
};

/// Mean per-block relative change (b - a) / max(a, 0.01), per zone and slice.
OccupancyDiff occupancy_diff(const OccupancyGrid& grid, const DateRange& period_a, const DateRange& period_b,
                             std::span<const std::string> zone_labels);
std::string occupancy_diff_csv(const OccupancyDiff& diff);

// -- within-zone variance ----------------------------------------------------

using LabelsAt = std::function<std::span<const int>(const HourStamp&)>;

/// Mean over paid times of the size-weighted within-label population variance.
/// Singleton groups carry no variance and are left out.
double zone_variance(const OccupancyGrid& grid, std::span<const int> labels);
double zone_variance(const OccupancyGrid& grid, const LabelsAt& labels);

}  // namespace parkzone

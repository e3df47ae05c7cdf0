#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "parkzone/civil_time.hpp"
#include "parkzone/ingest.hpp"
#include "parkzone/mixture.hpp"

namespace parkzone {

/// Un-normalized (lat, lon, occupancy) rows, one per block.
std::vector<FeatureRow> raw_features(std::span<const LatLon> midpoints, std::span<const double> occupancy);

/// Features for one slice, normalized on that slice.
FeatureMatrix slice_features(std::span<const LatLon> midpoints, std::span<const double> occupancy);

struct SelectionConfig {
  int k_min = 2;
  int k_max = 10;
  EmConfig em;
  std::optional<DateRange> range;  // restrict slice means to these dates
};

struct KSelection {
  int k = 0;
  std::map<int, double> mean_bic;
  std::vector<SliceKey> slices;
  std::vector<ZoneModel> models;  // chosen k, aligned with `slices`
};

/// Seed used for the fit of one (slice, k) pair.
std::uint64_t slice_seed(std::uint64_t base, const SliceKey& key, int k);

/// Fits every k on every (weekday, hour) slice mean and keeps the k with the
/// lowest mean BIC (ties go to the smaller k).
KSelection select_k_detailed(const OccupancyGrid& grid, std::span<const LatLon> midpoints,
                             const SelectionConfig& config);

int select_k(const OccupancyGrid& grid, std::span<const BlockFace> blockfaces, const SelectionConfig& config);

}  // namespace parkzone

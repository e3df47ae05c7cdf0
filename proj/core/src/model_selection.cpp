#include "parkzone/model_selection.hpp"

#include <cmath>

#include <fmt/format.h>

#include "parkzone/error.hpp"
#include "parkzone/random.hpp"

namespace parkzone {

std::vector<FeatureRow> raw_features(std::span<const LatLon> midpoints, std::span<const double> occupancy) {
  if (midpoints.size() != occupancy.size()) {
    fail(ErrorKind::invalid_input, fmt::format("{} midpoints but {} occupancy values", midpoints.size(),
                                               occupancy.size()));
  }
  std::vector<FeatureRow> rows(midpoints.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (std::isnan(occupancy[i])) fail(ErrorKind::invalid_input, "missing occupancy value in slice");
    rows[i] = {midpoints[i].lat, midpoints[i].lon, occupancy[i]};
  }
  return rows;
}

FeatureMatrix slice_features(std::span<const LatLon> midpoints, std::span<const double> occupancy) {
  auto rows = raw_features(midpoints, occupancy);
  return FeatureMatrix::fit(rows);
}

std::uint64_t slice_seed(std::uint64_t base, const SliceKey& key, int k) {
  return derive_seed(base, {key.weekday, static_cast<std::uint64_t>(key.hour), static_cast<std::uint64_t>(k)});
}

KSelection select_k_detailed(const OccupancyGrid& grid, std::span<const LatLon> midpoints,
                             const SelectionConfig& config) {
  if (config.k_min < 1 || config.k_min > config.k_max) {
    fail(ErrorKind::invalid_config, fmt::format("empty k range [{}, {}]", config.k_min, config.k_max));
  }
  if (static_cast<std::size_t>(config.k_max) > grid.block_count()) {
    fail(ErrorKind::invalid_input,
         fmt::format("k_max = {} exceeds the {} block-faces available", config.k_max, grid.block_count()));
  }
  KSelection out;
  std::vector<FeatureMatrix> features;
  for (const auto& key : grid.slices()) {
    if (grid.times_matching(key, config.range).empty()) continue;
    out.slices.push_back(key);
    features.push_back(slice_features(midpoints, slice_mean(grid, key, config.range)));
  }
  if (out.slices.empty()) fail(ErrorKind::empty_slice, "no slices fall inside the selection range");

  double best_bic = 0.0;
  for (int k = config.k_min; k <= config.k_max; ++k) {
    std::vector<ZoneModel> models;
    double sum = 0.0;
    for (std::size_t s = 0; s < out.slices.size(); ++s) {
      EmConfig em = config.em;
      em.seed = slice_seed(config.em.seed, out.slices[s], k);
      try {
        models.push_back(em_fit(features[s], k, em));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::fit_failure) throw;
        fail(ErrorKind::fit_failure, fmt::format("slice {}: {}", slice_name(out.slices[s]), e.what()));
      }
      sum += bic(models.back(), features[s].rows());
    }
    const double mean = sum / static_cast<double>(out.slices.size());
    out.mean_bic[k] = mean;
    if (out.k == 0 || mean < best_bic) {
      out.k = k;
      best_bic = mean;
      out.models = std::move(models);
    }
  }
  return out;
}

int select_k(const OccupancyGrid& grid, std::span<const BlockFace> blockfaces, const SelectionConfig& config) {
  auto midpoints = grid_midpoints(grid, blockfaces);
  return select_k_detailed(grid, midpoints, config).k;
}

}  // namespace parkzone

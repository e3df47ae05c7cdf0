#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "parkzone/ingest.hpp"

namespace parkzone {

struct KMeansConfig {
  int restarts = 10;
  int max_iter = 300;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  std::vector<LatLon> centroids;
  std::vector<int> labels;
  double inertia = 0.0;
  /// Objective after each assignment step of the winning restart.
  std::vector<double> objective_trace;
};

/// Lloyd's algorithm in (lat, lon) degree space with k-means++ seeding;
/// the restart with the lowest inertia wins (ties: earliest restart).
KMeansResult kmeans(std::span<const LatLon> points, int k, const KMeansConfig& config = {});

}  // namespace parkzone

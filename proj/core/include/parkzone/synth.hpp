#pragma once

#include <cstdint>
#include <vector>

#include "parkzone/civil_time.hpp"
#include "parkzone/ingest.hpp"

namespace parkzone {

enum class ClusterLayout {
  /// Gaussian blobs on a ring; adjacent centres are `separation` stds apart.
  ring,
  /// Uniform positions in the bounding box, labelled by nearest of `clusters`
  /// random sites (a patchwork field).
  voronoi,
};

struct SynthSpec {
  int n_blocks = 200;
  LatLon bbox_min{47.6100, -122.3500};
  LatLon bbox_max{47.6200, -122.3350};
  int clusters = 3;
  ClusterLayout layout = ClusterLayout::ring;
  double cluster_std_deg = 0.0005;
  double separation = 10.0;
  /// One base occupancy per cluster; empty means evenly spaced in [0.2, 0.8].
  std::vector<double> base_occupancy;
  double noise_std = 0.05;  // independent per (block, date, hour)
  double block_std = 0.0;   // persistent per-block offset
  bool identical_weeks = false;
  int weeks = 13;
  Date start_date = Date{std::chrono::year{2017} / std::chrono::June / 5};
  PaidSchedule schedule;
  int supply_min = 6;
  int supply_max = 16;
  /// Chance that a block-hour receives a 10-minute burst far above supply.
  double overbook_probability = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
  std::vector<double> cluster_levels() const;
};

struct SynthData {
  std::vector<BlockFace> blockfaces;
  std::vector<Transaction> transactions;
  std::vector<int> labels;  // generating cluster per block
  PaidSchedule schedule;    // spec schedule with the generated date range filled in
  /// Hourly occupancy the transactions are built to reproduce.
  OccupancyGrid expected;
  std::size_t expected_clipped_cells = 0;
  std::size_t expected_clipped_minutes = 0;
};

SynthData generate(const SynthSpec& spec);

}  // namespace parkzone

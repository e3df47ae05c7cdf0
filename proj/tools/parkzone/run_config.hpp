#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "parkzone/civil_time.hpp"
#include "parkzone/mixture.hpp"
#include "parkzone/spatial.hpp"
#include "parkzone/synth.hpp"

namespace parkzone::cli {

struct PeriodPair {
  DateRange a;
  DateRange b;
};

/// Everything a pipeline run depends on. Loaded from one JSON document;
/// command-line flags override individual keys.
struct RunConfig {
  std::filesystem::path transactions;
  std::filesystem::path blockfaces;
  std::optional<std::filesystem::path> schedule_path;
  PaidSchedule schedule;
  std::filesystem::path out = "out";
  std::uint64_t seed = 0;
  int k_min = 2;
  int k_max = 10;
  EmConfig em;
  std::vector<std::string> weights{"knn:3",           "knn:5",           "knn:10",        "global_distance",
                                   "area_connections", "area_distance",   "gmm_connections", "gmm_distance"};
  SignificanceConfig significance;
  std::optional<DateRange> fit_range;
  std::optional<PeriodPair> seasons;
  std::optional<PeriodPair> price_periods;
  SynthSpec synth;

  /// Range and consistency checks that do not touch the filesystem.
  void validate() const;

  /// EM settings with the run seed folded in.
  EmConfig em_config() const;
};

/// Parse the JSON config; relative paths resolve against `base_dir`.
RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace parkzone::cli

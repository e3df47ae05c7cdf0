#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "parkzone/civil_time.hpp"

namespace parkzone {

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  bool operator==(const LatLon&) const = default;
};

/// One side of a street segment holding curbside spaces.
struct BlockFace {
  std::string id;
  LatLon end_a;
  LatLon end_b;
  int supply = 0;
  std::string paid_area;
  std::string neighborhood;

  /// Downstream features use the midpoint, never the endpoints.
  LatLon midpoint() const { return {(end_a.lat + end_b.lat) / 2.0, (end_a.lon + end_b.lon) / 2.0}; }
  void validate() const;
};

enum class PaymentSource { paystation, payphone };

struct Transaction {
  std::string block_id;
  MinuteStamp start = 0;
  int duration_minutes = 1;
  PaymentSource source = PaymentSource::paystation;
};

inline constexpr double kOccupancyClip = 1.5;
inline constexpr double kFeetPerSpace = 25.0;

/// Block-face x paid-hour matrix of occupancy fractions in [0, 1.5].
/// Cells absent from an imported grid file hold NaN.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(std::vector<std::string> block_ids, std::vector<HourStamp> timestamps);

  std::size_t block_count() const { return block_ids_.size(); }
  std::size_t time_count() const { return timestamps_.size(); }

  double at(std::size_t block, std::size_t time) const { return values_[block * timestamps_.size() + time]; }
  double& at(std::size_t block, std::size_t time) { return values_[block * timestamps_.size() + time]; }

  std::span<const double> row(std::size_t block) const {
    return {values_.data() + block * timestamps_.size(), timestamps_.size()};
  }
  std::vector<double> column(std::size_t time) const;

  const std::vector<std::string>& block_ids() const { return block_ids_; }
  const std::vector<HourStamp>& timestamps() const { return timestamps_; }

  std::optional<std::size_t> find_block(const std::string& id) const;
  std::optional<std::size_t> find_time(const HourStamp& stamp) const;

  /// Column indices whose (weekday, hour) equals `key`, optionally within `range`.
  std::vector<std::size_t> times_matching(const SliceKey& key,
                                          const std::optional<DateRange>& range = std::nullopt) const;
  std::vector<Date> dates() const;
  std::vector<SliceKey> slices() const;

  /// Restrict to the given rows (in the given order).
  OccupancyGrid select_blocks(std::span<const std::size_t> rows) const;

 private:
  std::vector<std::string> block_ids_;
  std::vector<HourStamp> timestamps_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> block_index_;
};

struct ExcludedBlock {
  std::string id;
  std::string reason;
};

struct IngestReport {
  std::size_t transactions_read = 0;
  std::size_t transactions_used = 0;
  std::size_t unresolved_transactions = 0;
  std::size_t outside_schedule_transactions = 0;
  std::size_t truncated_transactions = 0;
  std::size_t excluded_block_transactions = 0;
  std::vector<ExcludedBlock> excluded_blocks;
  std::size_t clipped_minutes = 0;
  std::size_t clipped_cells = 0;  // hourly cells containing at least one clipped minute
  std::size_t total_cells = 0;

  double clipped_cell_fraction() const {
    return total_cells == 0 ? 0.0 : static_cast<double>(clipped_cells) / static_cast<double>(total_cells);
  }
  std::string to_json() const;
};

struct GridResult {
  OccupancyGrid grid;
  IngestReport report;
};

/// Spaces in a curb of the given length, one per 25 ft.
int estimate_supply(double length_feet);

/// active / supply, clipped at 150%.
double minute_occupancy(long long active_count, int supply);

/// Per-minute active counts for one block's transactions over the paid window
/// of each date; laid out date-major, `schedule.window_minutes()` per date.
/// A transaction is active in minute m iff start <= m < start + duration,
/// truncated to the paid window of its start date.
std::vector<std::int32_t> active_minute_counts(std::span<const Transaction> transactions,
                                               std::span<const Date> dates,
                                               const PaidSchedule& schedule);

/// Paid dates covered by the schedule range, or by the transactions' span
/// when the schedule leaves the range open.
std::vector<Date> paid_dates(std::span<const Transaction> transactions, const PaidSchedule& schedule);

GridResult build_grid(std::span<const Transaction> transactions, std::span<const BlockFace> blockfaces,
                      const PaidSchedule& schedule);

/// Per-block mean over timestamps matching `key` (and `range`, if given).
std::vector<double> slice_mean(const OccupancyGrid& grid, const SliceKey& key,
                               const std::optional<DateRange>& range = std::nullopt);

/// Midpoints aligned with the grid's block order.
std::vector<LatLon> grid_midpoints(const OccupancyGrid& grid, std::span<const BlockFace> blockfaces);

std::vector<BlockFace> read_blockfaces(std::istream& in, const std::string& source = "blockfaces.csv");
std::vector<Transaction> read_transactions(std::istream& in, const std::string& source = "transactions.csv");
std::string blockfaces_to_csv(std::span<const BlockFace> blockfaces);
std::string transactions_to_csv(std::span<const Transaction> transactions);

std::string grid_to_csv(const OccupancyGrid& grid);
OccupancyGrid read_grid(std::istream& in, const std::string& source = "grid.csv");

}  // namespace parkzone

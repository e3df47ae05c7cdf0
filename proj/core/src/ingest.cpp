#include "parkzone/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "parkzone/csv.hpp"
#include "parkzone/error.hpp"

namespace parkzone {

void BlockFace::validate() const {
  for (const auto& p : {end_a, end_b}) {
    if (!(p.lat >= -90.0 && p.lat <= 90.0) || !(p.lon >= -180.0 && p.lon <= 180.0)) {
      fail(ErrorKind::invalid_input, fmt::format("block-face '{}' has out-of-range coordinates", id));
    }
  }
  if (supply < 0) fail(ErrorKind::invalid_input, fmt::format("block-face '{}' has negative supply", id));
}

OccupancyGrid::OccupancyGrid(std::vector<std::string> block_ids, std::vector<HourStamp> timestamps)
    : block_ids_(std::move(block_ids)),
      timestamps_(std::move(timestamps)),
      values_(block_ids_.size() * timestamps_.size(), std::numeric_limits<double>::quiet_NaN()) {
  if (!std::is_sorted(timestamps_.begin(), timestamps_.end()) ||
      std::adjacent_find(timestamps_.begin(), timestamps_.end()) != timestamps_.end()) {
    fail(ErrorKind::invalid_input, "grid timestamps must be strictly increasing");
  }
  for (std::size_t i = 0; i < block_ids_.size(); ++i) {
    if (!block_index_.emplace(block_ids_[i], i).second) {
      fail(ErrorKind::invalid_input, fmt::format("duplicate block id '{}'", block_ids_[i]));
    }
  }
}

std::vector<double> OccupancyGrid::column(std::size_t time) const {
  std::vector<double> out(block_count());
  for (std::size_t b = 0; b < block_count(); ++b) out[b] = at(b, time);
  return out;
}

std::optional<std::size_t> OccupancyGrid::find_block(const std::string& id) const {
  auto it = block_index_.find(id);
  if (it == block_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> OccupancyGrid::find_time(const HourStamp& stamp) const {
  auto it = std::lower_bound(timestamps_.begin(), timestamps_.end(), stamp);
  if (it == timestamps_.end() || *it != stamp) return std::nullopt;
  return static_cast<std::size_t>(it - timestamps_.begin());
}

std::vector<std::size_t> OccupancyGrid::times_matching(const SliceKey& key,
                                                       const std::optional<DateRange>& range) const {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < timestamps_.size(); ++t) {
    const auto& ts = timestamps_[t];
    if (ts.hour != key.hour || iso_weekday(ts.date) != key.weekday) continue;
    if (range && !range->contains(ts.date)) continue;
    out.push_back(t);
  }
  return out;
}

std::vector<Date> OccupancyGrid::dates() const {
  std::vector<Date> out;
  for (const auto& ts : timestamps_) {
    if (out.empty() || out.back() != ts.date) out.push_back(ts.date);
  }
  return out;
}

std::vector<SliceKey> OccupancyGrid::slices() const {
  std::set<SliceKey> keys;
  for (const auto& ts : timestamps_) keys.insert({iso_weekday(ts.date), ts.hour});
  return {keys.begin(), keys.end()};
}

OccupancyGrid OccupancyGrid::select_blocks(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (auto r : rows) ids.push_back(block_ids_.at(r));
  OccupancyGrid out(std::move(ids), timestamps_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(rows[i] * timestamps_.size()), timestamps_.size(),
                out.values_.begin() + static_cast<std::ptrdiff_t>(i * timestamps_.size()));
  }
  return out;
}

std::string IngestReport::to_json() const {
  nlohmann::ordered_json j;
  j["transactions_read"] = transactions_read;
  j["transactions_used"] = transactions_used;
  j["unresolved_transactions"] = unresolved_transactions;
  j["outside_schedule_transactions"] = outside_schedule_transactions;
  j["truncated_transactions"] = truncated_transactions;
  j["excluded_block_transactions"] = excluded_block_transactions;
  j["clipped_minutes"] = clipped_minutes;
  j["clipped_cells"] = clipped_cells;
  j["total_cells"] = total_cells;
  j["clipped_cell_fraction"] = clipped_cell_fraction();
  auto excluded = nlohmann::ordered_json::array();
  for (const auto& e : excluded_blocks) excluded.push_back({{"block_id", e.id}, {"reason", e.reason}});
  j["excluded_blocks"] = std::move(excluded);
  j["duplicate_policy"] = "every active transaction is counted; no deduplication of replicate payments";
  return j.dump(2) + "\n";
}

int estimate_supply(double length_feet) {
  if (!(length_feet > 0.0) || !std::isfinite(length_feet)) {
    fail(ErrorKind::invalid_input, fmt::format("curb length must be positive, got {}", length_feet));
  }
  return static_cast<int>(std::floor(length_feet / kFeetPerSpace));
}

double minute_occupancy(long long active_count, int supply) {
  if (supply <= 0) fail(ErrorKind::invalid_input, "occupancy is undefined for zero supply");
  if (active_count < 0) fail(ErrorKind::invalid_input, "negative active transaction count");
  return std::min(static_cast<double>(active_count) / static_cast<double>(supply), kOccupancyClip);
}

std::vector<Date> paid_dates(std::span<const Transaction> transactions, const PaidSchedule& schedule) {
  std::optional<Date> first = schedule.first_date;
  std::optional<Date> last = schedule.last_date;
  if (!first || !last) {
    std::optional<Date> lo, hi;
    for (const auto& tx : transactions) {
      Date d = date_of(tx.start);
      if (!lo || d < *lo) lo = d;
      if (!hi || d > *hi) hi = d;
    }
    if (!first) first = lo;
    if (!last) last = hi;
  }
  std::vector<Date> out;
  if (!first || !last) return out;
  for (Date d = *first; d <= *last; d += std::chrono::days{1}) {
    if (schedule.is_paid_day(d)) out.push_back(d);
  }
  return out;
}

namespace {

struct WindowedCounts {
  std::vector<std::int32_t> counts;
  std::size_t used = 0;
  std::size_t outside = 0;
  std::size_t truncated = 0;
};

WindowedCounts count_active(std::span<const Transaction> transactions, std::span<const Date> dates,
                            const PaidSchedule& schedule) {
  const auto window = static_cast<std::int64_t>(schedule.window_minutes());
  WindowedCounts out;
  std::vector<std::int32_t> diff(dates.size() * static_cast<std::size_t>(window) + 1, 0);
  for (const auto& tx : transactions) {
    if (tx.duration_minutes < 1) fail(ErrorKind::invalid_input, "transaction duration must be >= 1 minute");
    Date d = date_of(tx.start);
    auto it = std::lower_bound(dates.begin(), dates.end(), d);
    if (it == dates.end() || *it != d) {
      ++out.outside;
      continue;
    }
    const auto day = static_cast<std::int64_t>(it - dates.begin());
    const MinuteStamp open = start_of(d) + schedule.start_hour * 60;
    const MinuteStamp close = open + window;
    const MinuteStamp end = tx.start + tx.duration_minutes;
    const MinuteStamp s = std::max(tx.start, open);
    const MinuteStamp e = std::min(end, close);
    if (s >= e) {
      ++out.outside;
      continue;
    }
    if (end > close) ++out.truncated;
    ++out.used;
    diff[static_cast<std::size_t>(day * window + (s - open))] += 1;
    if (e < close) diff[static_cast<std::size_t>(day * window + (e - open))] -= 1;
  }
  out.counts.resize(diff.size() - 1);
  std::int32_t running = 0;
  for (std::size_t day = 0; day < dates.size(); ++day) {
    running = 0;
    for (std::int64_t m = 0; m < window; ++m) {
      auto idx = static_cast<std::size_t>(static_cast<std::int64_t>(day) * window + m);
      running += diff[idx];
      out.counts[idx] = running;
    }
  }
  return out;
}

}  // namespace

std::vector<std::int32_t> active_minute_counts(std::span<const Transaction> transactions,
                                               std::span<const Date> dates, const PaidSchedule& schedule) {
  return count_active(transactions, dates, schedule).counts;
}

GridResult build_grid(std::span<const Transaction> transactions, std::span<const BlockFace> blockfaces,
                      const PaidSchedule& schedule) {
  schedule.validate();
  GridResult result;
  auto& report = result.report;
  report.transactions_read = transactions.size();

  std::unordered_map<std::string, std::size_t> all_blocks;
  std::vector<std::size_t> included;  // indices into blockfaces
  for (std::size_t i = 0; i < blockfaces.size(); ++i) {
    const auto& bf = blockfaces[i];
    bf.validate();
    if (!all_blocks.emplace(bf.id, i).second) {
      fail(ErrorKind::invalid_input, fmt::format("duplicate block id '{}'", bf.id));
    }
    if (bf.supply <= 0) {
      report.excluded_blocks.push_back({bf.id, "zero or missing supply"});
    } else {
      included.push_back(i);
    }
  }

  std::vector<std::vector<Transaction>> per_block(blockfaces.size());
  std::vector<Transaction> resolved;
  for (const auto& tx : transactions) {
    auto it = all_blocks.find(tx.block_id);
    if (it == all_blocks.end()) {
      ++report.unresolved_transactions;
      continue;
    }
    per_block[it->second].push_back(tx);
  }
  for (const auto& txs : per_block) resolved.insert(resolved.end(), txs.begin(), txs.end());

  const auto dates = paid_dates(resolved, schedule);
  const int hours = schedule.hours_per_day();

  std::vector<HourStamp> stamps;
  stamps.reserve(dates.size() * static_cast<std::size_t>(hours));
  for (auto d : dates) {
    for (int h = schedule.start_hour; h < schedule.end_hour; ++h) stamps.push_back({d, h});
  }
  std::vector<std::string> ids;
  for (auto i : included) ids.push_back(blockfaces[i].id);
  result.grid = OccupancyGrid(std::move(ids), std::move(stamps));

  for (std::size_t i = 0; i < blockfaces.size(); ++i) {
    if (blockfaces[i].supply <= 0) report.excluded_block_transactions += per_block[i].size();
  }

  for (std::size_t row = 0; row < included.size(); ++row) {
    const auto& bf = blockfaces[included[row]];
    auto counted = count_active(per_block[included[row]], dates, schedule);
    report.transactions_used += counted.used;
    report.outside_schedule_transactions += counted.outside;
    report.truncated_transactions += counted.truncated;
    const long long supply = bf.supply;
    std::size_t col = 0;
    for (std::size_t day = 0; day < dates.size(); ++day) {
      for (int h = 0; h < hours; ++h, ++col) {
        const std::size_t base = day * static_cast<std::size_t>(schedule.window_minutes()) + static_cast<std::size_t>(h) * 60;
        // Mean of min(a / s, 1.5) over the hour, kept in integers as
        // sum(min(2a, 3s)) / (120 s) so the single division is exact-rounded.
        long long half_spaces = 0;
        bool clipped = false;
        for (std::size_t m = 0; m < 60; ++m) {
          const long long active = counted.counts[base + m];
          if (2 * active > 3 * supply) {
            ++report.clipped_minutes;
            clipped = true;
          }
          half_spaces += std::min(2 * active, 3 * supply);
        }
        if (clipped) ++report.clipped_cells;
        result.grid.at(row, col) = static_cast<double>(half_spaces) / static_cast<double>(120 * supply);
      }
    }
  }
  report.total_cells = result.grid.block_count() * result.grid.time_count();
  return result;
}

std::vector<double> slice_mean(const OccupancyGrid& grid, const SliceKey& key,
                               const std::optional<DateRange>& range) {
  auto cols = grid.times_matching(key, range);
  if (cols.empty()) {
    fail(ErrorKind::empty_slice, fmt::format("no timestamps match slice {}", slice_name(key)));
  }
  std::vector<double> out(grid.block_count());
  for (std::size_t b = 0; b < grid.block_count(); ++b) {
    double sum = 0.0;
    std::size_t count = 0;
    for (auto t : cols) {
      double v = grid.at(b, t);
      if (std::isnan(v)) continue;
      sum += v;
      ++count;
    }
    out[b] = count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(count);
  }
  return out;
}

std::vector<LatLon> grid_midpoints(const OccupancyGrid& grid, std::span<const BlockFace> blockfaces) {
  std::unordered_map<std::string, const BlockFace*> by_id;
  for (const auto& bf : blockfaces) by_id.emplace(bf.id, &bf);
  std::vector<LatLon> out;
  out.reserve(grid.block_count());
  for (const auto& id : grid.block_ids()) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      fail(ErrorKind::invalid_input, fmt::format("grid block '{}' has no block-face geometry", id));
    }
    out.push_back(it->second->midpoint());
  }
  return out;
}

std::vector<BlockFace> read_blockfaces(std::istream& in, const std::string& source) {
  csv::Reader reader(in, source);
  auto col = reader.require_columns(
      {"block_id", "lat_a", "lon_a", "lat_b", "lon_b", "supply", "paid_area", "neighborhood"});
  std::vector<BlockFace> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    BlockFace bf;
    bf.id = f[col[0]];
    if (bf.id.empty()) reader.error("empty block_id");
    bf.end_a = {csv::parse_double(f[col[1]], reader, "lat_a"), csv::parse_double(f[col[2]], reader, "lon_a")};
    bf.end_b = {csv::parse_double(f[col[3]], reader, "lat_b"), csv::parse_double(f[col[4]], reader, "lon_b")};
    // Missing supply is treated as zero; build_grid excludes and reports it.
    bf.supply = f[col[5]].empty() ? 0 : static_cast<int>(csv::parse_int(f[col[5]], reader, "supply"));
    bf.paid_area = f[col[6]];
    bf.neighborhood = f[col[7]];
    try {
      bf.validate();
    } catch (const Error& e) {
      reader.error(e.what());
    }
    out.push_back(std::move(bf));
  }
  return out;
}

std::vector<Transaction> read_transactions(std::istream& in, const std::string& source) {
  csv::Reader reader(in, source);
  auto col = reader.require_columns({"block_id", "start", "duration_minutes", "source"});
  std::vector<Transaction> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    Transaction tx;
    tx.block_id = f[col[0]];
    try {
      tx.start = parse_minute_stamp(f[col[1]]);
    } catch (const Error& e) {
      reader.error(e.what());
    }
    auto duration = csv::parse_int(f[col[2]], reader, "duration_minutes");
    if (duration < 1) reader.error("duration_minutes must be >= 1");
    tx.duration_minutes = static_cast<int>(duration);
    const auto& src = f[col[3]];
    if (src == "paystation") {
      tx.source = PaymentSource::paystation;
    } else if (src == "payphone") {
      tx.source = PaymentSource::payphone;
    } else {
      reader.error(fmt::format("unknown source '{}'", src));
    }
    out.push_back(std::move(tx));
  }
  return out;
}

std::string blockfaces_to_csv(std::span<const BlockFace> blockfaces) {
  std::string out = "block_id,lat_a,lon_a,lat_b,lon_b,supply,paid_area,neighborhood\n";
  for (const auto& bf : blockfaces) {
    out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{},{},{}\n", csv::escape(bf.id), bf.end_a.lat,
                       bf.end_a.lon, bf.end_b.lat, bf.end_b.lon, bf.supply, csv::escape(bf.paid_area),
                       csv::escape(bf.neighborhood));
  }
  return out;
}

std::string transactions_to_csv(std::span<const Transaction> transactions) {
  std::string out = "block_id,start,duration_minutes,source\n";
  for (const auto& tx : transactions) {
    Date d = date_of(tx.start);
    auto minute = tx.start - start_of(d);
    out += fmt::format("{},{}T{:02d}:{:02d},{},{}\n", csv::escape(tx.block_id), format_date(d), minute / 60,
                       minute % 60, tx.duration_minutes,
                       tx.source == PaymentSource::paystation ? "paystation" : "payphone");
  }
  return out;
}

std::string grid_to_csv(const OccupancyGrid& grid) {
  std::string out = "block_id,timestamp,occupancy\n";
  std::vector<std::string> stamps;
  stamps.reserve(grid.time_count());
  for (const auto& ts : grid.timestamps()) stamps.push_back(format_hour_stamp(ts));
  for (std::size_t b = 0; b < grid.block_count(); ++b) {
    auto id = csv::escape(grid.block_ids()[b]);
    for (std::size_t t = 0; t < grid.time_count(); ++t) {
      double v = grid.at(b, t);
      if (std::isnan(v)) continue;
      out += fmt::format("{},{},{:.6f}\n", id, stamps[t], v);
    }
  }
  return out;
}

OccupancyGrid read_grid(std::istream& in, const std::string& source) {
  csv::Reader reader(in, source);
  auto col = reader.require_columns({"block_id", "timestamp", "occupancy"});
  struct Cell {
    std::size_t block;
    HourStamp stamp;
    double value;
  };
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> index;
  std::set<HourStamp> stamps;
  std::vector<Cell> cells;
  std::vector<std::string> f;
  while (reader.next(f)) {
    auto [it, inserted] = index.emplace(f[col[0]], ids.size());
    if (inserted) ids.push_back(f[col[0]]);
    HourStamp stamp;
    try {
      stamp = parse_hour_stamp(f[col[1]]);
    } catch (const Error& e) {
      reader.error(e.what());
    }
    double v = csv::parse_double(f[col[2]], reader, "occupancy");
    if (v < 0.0 || v > kOccupancyClip + 1e-9) reader.error(fmt::format("occupancy {} outside [0, 1.5]", v));
    stamps.insert(stamp);
    cells.push_back({it->second, stamp, v});
  }
  OccupancyGrid grid(std::move(ids), {stamps.begin(), stamps.end()});
  for (const auto& c : cells) grid.at(c.block, *grid.find_time(c.stamp)) = c.value;
  return grid;
}

}  // namespace parkzone

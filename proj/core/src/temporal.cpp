#include "parkzone/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "parkzone/csv.hpp"
#include "parkzone/error.hpp"
#include "parkzone/geo.hpp"
#include "parkzone/model_selection.hpp"
#include "parkzone/random.hpp"

namespace parkzone {
namespace {

std::string hour_label(int hour) {
  const int h12 = hour % 12 == 0 ? 12 : hour % 12;
  return fmt::format("{}{}", h12, hour < 12 ? "AM" : "PM");
}

std::string cell(std::optional<double> v) { return v ? fmt::format("{:.1f}", *v) : std::string{}; }

double mean_of(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

/// Per-block mean over the given columns; NaN when a block has no data.
std::vector<double> block_means(const OccupancyGrid& grid, std::span<const std::size_t> cols) {
  std::vector<double> out(grid.block_count(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t b = 0; b < grid.block_count(); ++b) {
    double s = 0.0;
    std::size_t c = 0;
    for (auto t : cols) {
      const double v = grid.at(b, t);
      if (std::isnan(v)) continue;
      s += v;
      ++c;
    }
    if (c > 0) out[b] = s / static_cast<double>(c);
  }
  return out;
}

std::vector<std::size_t> columns_where(const OccupancyGrid& grid, const DateRange& range,
                                       const std::function<bool(const HourStamp&)>& pred) {
  std::vector<std::size_t> out;
  const auto& ts = grid.timestamps();
  for (std::size_t t = 0; t < ts.size(); ++t) {
    if (range.contains(ts[t].date) && pred(ts[t])) out.push_back(t);
  }
  return out;
}

}  // namespace

double label_agreement_percent(std::span<const int> anchor, std::span<const int> other) {
  if (anchor.size() != other.size() || anchor.empty()) {
    fail(ErrorKind::invalid_input, "label vectors must be non-empty and of equal length");
  }
  std::size_t same = 0;
  for (std::size_t i = 0; i < anchor.size(); ++i) same += anchor[i] == other[i] ? 1 : 0;
  return 100.0 * static_cast<double>(same) / static_cast<double>(anchor.size());
}

double anchor_consistency(std::span<const int> anchor_labels, std::span<const std::vector<int>> comparison_labels) {
  if (comparison_labels.empty()) fail(ErrorKind::invalid_input, "an anchor needs at least one comparison date");
  double s = 0.0;
  for (const auto& c : comparison_labels) s += label_agreement_percent(anchor_labels, c);
  return s / static_cast<double>(comparison_labels.size());
}

std::uint64_t anchor_seed(std::uint64_t base, Date date, int hour) {
  return derive_seed(base, {static_cast<std::uint64_t>(date.time_since_epoch().count()), static_cast<std::uint64_t>(hour),
                            0xA4C40ULL});
}

ConsistencyReport consistency_metric(const OccupancyGrid& grid, std::span<const LatLon> midpoints,
                                     const SliceKey& slice, int k, const ConsistencyConfig& config) {
  ConsistencyReport rep;
  rep.slice = slice;
  const auto cols = grid.times_matching(slice, config.range);
  if (cols.size() < 2) {
    fail(ErrorKind::empty_slice,
         fmt::format("slice {} has {} matching dates; consistency needs at least 2", slice_name(slice), cols.size()));
  }
  std::vector<std::vector<FeatureRow>> raw;
  for (auto t : cols) {
    rep.dates.push_back(grid.timestamps()[t].date);
    auto occ = grid.column(t);
    raw.push_back(raw_features(midpoints, occ));
  }

  for (std::size_t a = 0; a < cols.size(); ++a) {
    EmConfig em = config.em;
    em.seed = anchor_seed(config.em.seed, rep.dates[a], slice.hour);
    ZoneModel model;
    try {
      model = em_fit(FeatureMatrix::fit(raw[a]), k, em);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::fit_failure) throw;
      rep.skipped_anchors.emplace_back(rep.dates[a], e.what());
      continue;
    }
    std::vector<std::vector<int>> others;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c == a) continue;
      others.push_back(assign(FeatureMatrix::with_params(raw[c], model.norm), model));
    }
    rep.anchors.push_back({rep.dates[a], anchor_consistency(model.assignments, others)});
    rep.anchor_models.push_back(std::move(model));
  }
  if (rep.anchors.size() < 2) {
    fail(ErrorKind::fit_failure,
         fmt::format("slice {}: only {} usable anchor dates", slice_name(slice), rep.anchors.size()));
  }
  double s = 0.0;
  for (const auto& a : rep.anchors) s += a.percent;
  rep.mean = s / static_cast<double>(rep.anchors.size());
  return rep;
}

std::string consistency_table_csv(std::span<const ConsistencyReport> reports) {
  std::set<unsigned> days;
  std::set<int> hours;
  std::map<SliceKey, double> value;
  for (const auto& r : reports) {
    days.insert(r.slice.weekday);
    hours.insert(r.slice.hour);
    value[r.slice] = r.mean;
  }
  std::string out = "day";
  for (int h : hours) out += "," + hour_label(h);
  out += ",Daily\n";
  std::map<int, std::vector<double>> by_hour;
  for (unsigned d : days) {
    out += weekday_name(d);
    std::vector<double> row;
    for (int h : hours) {
      auto it = value.find({d, h});
      if (it == value.end()) {
        out += ",";
        continue;
      }
      row.push_back(it->second);
      by_hour[h].push_back(it->second);
      out += "," + cell(it->second);
    }
    out += "," + cell(row.empty() ? std::nullopt : std::optional<double>(mean_of(row))) + "\n";
  }
  out += "Hourly";
  for (int h : hours) {
    const auto& v = by_hour[h];
    out += "," + cell(v.empty() ? std::nullopt : std::optional<double>(mean_of(v)));
  }
  out += ",\n";
  return out;
}

CentroidDispersion centroid_dispersion(std::span<const ZoneModel> models, int k, const KMeansConfig& config) {
  if (models.size() < 2) fail(ErrorKind::invalid_input, "centroid dispersion needs at least two models");
  std::vector<LatLon> centres;
  for (const auto& m : models) {
    if (m.k != k) fail(ErrorKind::invalid_input, fmt::format("model with k = {} among models with k = {}", m.k, k));
    for (const auto& mu : m.means) {
      auto raw = m.norm.denormalize(mu);
      centres.push_back({raw[0], raw[1]});
    }
  }
  auto km = kmeans(centres, k, config);
  double total = 0.0;
  for (std::size_t i = 0; i < centres.size(); ++i) {
    total += haversine_meters(centres[i], km.centroids[static_cast<std::size_t>(km.labels[i])]);
  }
  return {{}, k, total / static_cast<double>(centres.size())};
}

std::string dispersion_csv(std::span<const CentroidDispersion> rows) {
  std::string out = "day,hour,k,mean_distance_m\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{:.3f}\n", weekday_name(r.slice.weekday), r.slice.hour, r.k, r.mean_distance_m);
  }
  return out;
}

SeasonalDelta seasonal_delta(const OccupancyGrid& grid, const DateRange& season_a, const DateRange& season_b) {
  if (season_a.first > season_a.last || season_b.first > season_b.last) {
    fail(ErrorKind::invalid_input, "season date ranges must be well ordered");
  }
  std::set<int> hours;
  for (const auto& ts : grid.timestamps()) {
    if (season_a.contains(ts.date) || season_b.contains(ts.date)) hours.insert(ts.hour);
  }
  if (hours.empty()) fail(ErrorKind::empty_slice, "no grid timestamps fall inside either season");
  SeasonalDelta out;
  for (int h : hours) {
    auto at_hour = [h](const HourStamp& s) { return s.hour == h; };
    auto a = block_means(grid, columns_where(grid, season_a, at_hour));
    auto b = block_means(grid, columns_where(grid, season_b, at_hour));
    SeasonalDeltaRow row;
    row.hour = h;
    double inc = 0.0, dec = 0.0;
    std::size_t decreasing = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::isnan(a[i]) || std::isnan(b[i])) {
        ++row.excluded;
        continue;
      }
      const double change = 100.0 * (b[i] - a[i]);
      if (change > 0.0) {
        ++row.increasing;
        inc += change;
      } else {
        ++row.non_increasing;
        if (change < 0.0) {
          ++decreasing;
          dec += -change;
        }
      }
    }
    const std::size_t included = row.increasing + row.non_increasing;
    row.mean_increase_pct = row.increasing ? inc / static_cast<double>(row.increasing) : 0.0;
    row.mean_decrease_pct = decreasing ? dec / static_cast<double>(decreasing) : 0.0;
    row.pct_increasing = included ? 100.0 * static_cast<double>(row.increasing) / static_cast<double>(included) : 0.0;
    out.rows.push_back(row);
  }
  return out;
}

std::string seasonal_delta_csv(const SeasonalDelta& delta) {
  std::string out = "hour,mean_increase_pct,mean_decrease_pct,pct_increasing,increasing,non_increasing,excluded\n";
  for (const auto& r : delta.rows) {
    out += fmt::format("{},{:.6f},{:.6f},{:.6f},{},{},{}\n", r.hour, r.mean_increase_pct, r.mean_decrease_pct,
                       r.pct_increasing, r.increasing, r.non_increasing, r.excluded);
  }
  return out;
}

OccupancyDiff occupancy_diff(const OccupancyGrid& grid, const DateRange& period_a, const DateRange& period_b,
                             std::span<const std::string> zone_labels) {
  if (zone_labels.size() != grid.block_count()) fail(ErrorKind::invalid_input, "one zone label per grid row required");
  if (period_a.first > period_a.last || period_b.first > period_b.last) {
    fail(ErrorKind::invalid_input, "period date ranges must be well ordered");
  }
  std::set<SliceKey> slices;
  for (const auto& ts : grid.timestamps()) {
    if (period_a.contains(ts.date) || period_b.contains(ts.date)) slices.insert({iso_weekday(ts.date), ts.hour});
  }
  if (slices.empty()) fail(ErrorKind::empty_slice, "no grid timestamps fall inside either period");
  std::set<std::string> zones(zone_labels.begin(), zone_labels.end());

  OccupancyDiff out;
  for (const auto& zone : zones) {
    for (const auto& key : slices) {
      auto match = [&key](const HourStamp& s) { return s.hour == key.hour && iso_weekday(s.date) == key.weekday; };
      auto a = block_means(grid, columns_where(grid, period_a, match));
      auto b = block_means(grid, columns_where(grid, period_b, match));
      OccupancyDiffRow row;
      row.zone = zone;
      row.slice = key;
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (zone_labels[i] != zone) continue;
        if (std::isnan(a[i]) || std::isnan(b[i])) {
          ++out.excluded;
          continue;
        }
        double base = a[i];
        if (base < kRelativeChangeFloor) {
          base = kRelativeChangeFloor;
          ++row.flagged;
        }
        s += (b[i] - a[i]) / base;
        ++row.blocks;
      }
      if (row.blocks == 0) continue;
      row.relative_change_pct = 100.0 * s / static_cast<double>(row.blocks);
      out.rows.push_back(row);
    }
  }
  return out;
}

std::string occupancy_diff_csv(const OccupancyDiff& diff) {
  std::string out = "zone,day,hour,relative_change_pct,blocks,flagged\n";
  for (const auto& r : diff.rows) {
    out += fmt::format("{},{},{},{:.6f},{},{}\n", csv::escape(r.zone), weekday_name(r.slice.weekday), r.slice.hour,
                       r.relative_change_pct, r.blocks, r.flagged);
  }
  return out;
}

double zone_variance(const OccupancyGrid& grid, std::span<const int> labels) {
  return zone_variance(grid, LabelsAt([labels](const HourStamp&) { return labels; }));
}

double zone_variance(const OccupancyGrid& grid, const LabelsAt& labels_at) {
  double total = 0.0;
  std::size_t slices = 0;
  for (std::size_t t = 0; t < grid.time_count(); ++t) {
    auto labels = labels_at(grid.timestamps()[t]);
    if (labels.empty()) continue;
    if (labels.size() != grid.block_count()) fail(ErrorKind::invalid_input, "one label per grid row required");
    std::map<int, std::vector<double>> groups;
    for (std::size_t b = 0; b < grid.block_count(); ++b) {
      const double v = grid.at(b, t);
      if (!std::isnan(v)) groups[labels[b]].push_back(v);
    }
    double weighted = 0.0;
    std::size_t members = 0;
    for (const auto& [label, values] : groups) {
      if (values.size() < 2) continue;
      const double m = mean_of(values);
      double ss = 0.0;
      for (double v : values) ss += (v - m) * (v - m);
      weighted += ss;  // size * population variance
      members += values.size();
    }
    if (members == 0) continue;
    total += weighted / static_cast<double>(members);
    ++slices;
  }
  if (slices == 0) fail(ErrorKind::invalid_input, "every label group is a singleton; within-zone variance undefined");
  return total / static_cast<double>(slices);
}

}  // namespace parkzone

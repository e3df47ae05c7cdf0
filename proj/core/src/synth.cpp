#include "parkzone/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "parkzone/error.hpp"
#include "parkzone/random.hpp"

namespace parkzone {
namespace {

/// Counter-based draws keyed by stream ids, so every cell is independent of
/// generation order.
double hashed_uniform(std::uint64_t seed, std::initializer_list<std::uint64_t> key) {
  return static_cast<double>(derive_seed(seed, key) >> 11) * 0x1.0p-53;
}

double hashed_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  const double u1 = 1.0 - hashed_uniform(seed, {a, b, c, d, 1});
  const double u2 = hashed_uniform(seed, {a, b, c, d, 2});
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

std::vector<double> SynthSpec::cluster_levels() const {
  if (!base_occupancy.empty()) return base_occupancy;
  std::vector<double> out;
  for (int c = 0; c < clusters; ++c) {
    out.push_back(clusters == 1 ? 0.5 : 0.2 + 0.6 * c / (clusters - 1));
  }
  return out;
}

void SynthSpec::validate() const {
  if (n_blocks < 2 || clusters < 1 || n_blocks < clusters) {
    fail(ErrorKind::invalid_config, "synth spec needs n_blocks >= max(2, clusters) and clusters >= 1");
  }
  if (!(cluster_std_deg > 0.0) || !(separation > 0.0)) {
    fail(ErrorKind::invalid_config, "cluster spread and separation must be positive");
  }
  if (!(noise_std >= 0.0) || !(block_std >= 0.0)) fail(ErrorKind::invalid_config, "noise must be nonnegative");
  if (!base_occupancy.empty() && base_occupancy.size() != static_cast<std::size_t>(clusters)) {
    fail(ErrorKind::invalid_config, "base_occupancy needs one entry per cluster");
  }
  for (double b : cluster_levels()) {
    if (!(b >= 0.0 && b <= kOccupancyClip)) {
      fail(ErrorKind::invalid_config, fmt::format("occupancy target {} outside [0, 1.5]", b));
    }
  }
  if (supply_min < 1 || supply_max < supply_min) {
    fail(ErrorKind::invalid_config, "supply range must satisfy 1 <= supply_min <= supply_max");
  }
  if (weeks < 1) fail(ErrorKind::invalid_config, "weeks must be >= 1");
  if (!(overbook_probability >= 0.0 && overbook_probability <= 1.0)) {
    fail(ErrorKind::invalid_config, "overbook_probability must be in [0, 1]");
  }
  if (!(bbox_min.lat < bbox_max.lat) || !(bbox_min.lon < bbox_max.lon)) {
    fail(ErrorKind::invalid_config, "bounding box must have min < max");
  }
  schedule.validate();
}

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  SynthData out;
  Rng rng(derive_seed(spec.seed, {0x5EEDULL}));
  const auto levels = spec.cluster_levels();
  const LatLon centre{(spec.bbox_min.lat + spec.bbox_max.lat) / 2.0, (spec.bbox_min.lon + spec.bbox_max.lon) / 2.0};
  auto in_box = [&](double u, double v) {
    return LatLon{spec.bbox_min.lat + u * (spec.bbox_max.lat - spec.bbox_min.lat),
                  spec.bbox_min.lon + v * (spec.bbox_max.lon - spec.bbox_min.lon)};
  };

  std::vector<LatLon> sites;
  if (spec.layout == ClusterLayout::ring) {
    const double spacing = spec.separation * spec.cluster_std_deg;
    const double radius = spec.clusters == 1 ? 0.0 : spacing / (2.0 * std::sin(std::numbers::pi / spec.clusters));
    for (int c = 0; c < spec.clusters; ++c) {
      const double angle = 2.0 * std::numbers::pi * c / spec.clusters;
      sites.push_back({centre.lat + radius * std::cos(angle), centre.lon + radius * std::sin(angle)});
    }
  } else {
    for (int c = 0; c < spec.clusters; ++c) {
      const double u = uniform01(rng);
      sites.push_back(in_box(u, uniform01(rng)));
    }
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<LatLon> mids(static_cast<std::size_t>(spec.n_blocks));
  for (int b = 0; b < spec.n_blocks; ++b) {
    int label = 0;
    LatLon mid;
    if (spec.layout == ClusterLayout::ring) {
      label = b % spec.clusters;
      mid = {sites[static_cast<std::size_t>(label)].lat + spec.cluster_std_deg * gauss(rng),
             sites[static_cast<std::size_t>(label)].lon + spec.cluster_std_deg * gauss(rng)};
    } else {
      const double u = uniform01(rng);
      mid = in_box(u, uniform01(rng));
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < spec.clusters; ++c) {
        const auto& s = sites[static_cast<std::size_t>(c)];
        const double d = (s.lat - mid.lat) * (s.lat - mid.lat) + (s.lon - mid.lon) * (s.lon - mid.lon);
        if (d < best) {
          best = d;
          label = c;
        }
      }
    }
    mids[static_cast<std::size_t>(b)] = mid;
    const double angle = std::numbers::pi * uniform01(rng);
    const double half = 0.0002;
    BlockFace bf;
    bf.id = fmt::format("B{:04d}", b);
    bf.end_a = {mid.lat - half * std::sin(angle), mid.lon - half * std::cos(angle)};
    bf.end_b = {mid.lat + half * std::sin(angle), mid.lon + half * std::cos(angle)};
    bf.supply = spec.supply_min + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(spec.supply_max - spec.supply_min + 1)));
    bf.neighborhood = "Synthtown";
    out.blockfaces.push_back(std::move(bf));
    out.labels.push_back(label);
  }
  // Paid areas: an arbitrary north/south bisection at the median latitude.
  {
    std::vector<double> lats;
    for (const auto& m : mids) lats.push_back(m.lat);
    std::nth_element(lats.begin(), lats.begin() + static_cast<std::ptrdiff_t>(lats.size() / 2), lats.end());
    const double median = lats[lats.size() / 2];
    for (std::size_t b = 0; b < mids.size(); ++b) out.blockfaces[b].paid_area = mids[b].lat < median ? "South" : "North";
  }
  std::vector<double> offsets(static_cast<std::size_t>(spec.n_blocks), 0.0);
  for (auto& o : offsets) o = spec.block_std * gauss(rng);

  out.schedule = spec.schedule;
  out.schedule.first_date = spec.start_date;
  out.schedule.last_date = spec.start_date + std::chrono::days{7 * spec.weeks - 1};

  std::vector<Date> dates;
  for (Date d = *out.schedule.first_date; d <= *out.schedule.last_date; d += std::chrono::days{1}) {
    if (out.schedule.is_paid_day(d)) dates.push_back(d);
  }
  std::vector<HourStamp> stamps;
  for (auto d : dates)
    for (int h = spec.schedule.start_hour; h < spec.schedule.end_hour; ++h) stamps.push_back({d, h});
  std::vector<std::string> ids;
  for (const auto& bf : out.blockfaces) ids.push_back(bf.id);
  out.expected = OccupancyGrid(std::move(ids), stamps);

  std::size_t counter = 0;
  for (std::size_t b = 0; b < out.blockfaces.size(); ++b) {
    const auto& bf = out.blockfaces[b];
    const long long supply = bf.supply;
    for (std::size_t t = 0; t < stamps.size(); ++t) {
      const auto& st = stamps[t];
      const auto day_key = spec.identical_weeks ? static_cast<std::uint64_t>(iso_weekday(st.date))
                                                : static_cast<std::uint64_t>(st.date.time_since_epoch().count());
      const double noise =
          spec.noise_std > 0.0 ? spec.noise_std * hashed_normal(spec.seed, b, day_key, static_cast<std::uint64_t>(st.hour), 7) : 0.0;
      const double target =
          std::clamp(levels[static_cast<std::size_t>(out.labels[b])] + offsets[b] + noise, 0.0, kOccupancyClip);
      const long long space_minutes = std::llround(target * 60.0 * static_cast<double>(supply));
      const long long full = space_minutes / 60;
      const int rem = static_cast<int>(space_minutes % 60);
      const bool overbooked = spec.overbook_probability > 0.0 &&
                              hashed_uniform(spec.seed, {b, day_key, static_cast<std::uint64_t>(st.hour), 11}) <
                                  spec.overbook_probability;
      const long long burst = overbooked ? static_cast<long long>(std::ceil(1.6 * static_cast<double>(supply))) : 0;

      const MinuteStamp start = start_of(st.date) + st.hour * 60;
      auto emit = [&](int duration) {
        out.transactions.push_back({bf.id, start, duration,
                                    (counter++ % 2 == 0) ? PaymentSource::paystation : PaymentSource::payphone});
      };
      for (long long s = 0; s < full; ++s) emit(60);
      if (rem > 0) emit(rem);
      for (long long s = 0; s < burst; ++s) emit(10);

      double sum = 0.0;
      bool clipped = false;
      for (int m = 0; m < 60; ++m) {
        const long long count = full + (m < rem ? 1 : 0) + (m < 10 ? burst : 0);
        double occ = static_cast<double>(count) / static_cast<double>(supply);
        if (occ > kOccupancyClip) {
          occ = kOccupancyClip;
          clipped = true;
          ++out.expected_clipped_minutes;
        }
        sum += occ;
      }
      if (clipped) ++out.expected_clipped_cells;
      out.expected.at(b, t) = sum / 60.0;
    }
  }
  return out;
}

}  // namespace parkzone

#include "parkzone/kmeans.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "parkzone/error.hpp"
#include "parkzone/geo.hpp"
#include "parkzone/random.hpp"

namespace parkzone {
namespace {

double sq(const LatLon& a, const LatLon& b) {
  const double dl = a.lat - b.lat;
  const double dn = a.lon - b.lon;
  return dl * dl + dn * dn;
}

}  // namespace

double haversine_meters(const LatLon& a, const LatLon& b) {
  constexpr double kRad = 3.14159265358979323846 / 180.0;
  const double dlat = (b.lat - a.lat) * kRad;
  const double dlon = (b.lon - a.lon) * kRad;
  const double s = std::sin(dlat / 2.0) * std::sin(dlat / 2.0) +
                   std::cos(a.lat * kRad) * std::cos(b.lat * kRad) * std::sin(dlon / 2.0) * std::sin(dlon / 2.0);
  return 2.0 * kEarthRadiusMeters * std::asin(std::min(1.0, std::sqrt(s)));
}

double degree_distance(const LatLon& a, const LatLon& b) { return std::sqrt(sq(a, b)); }

KMeansResult kmeans(std::span<const LatLon> points, int k, const KMeansConfig& config) {
  const std::size_t n = points.size();
  if (k < 1 || n < static_cast<std::size_t>(k)) {
    fail(ErrorKind::invalid_input, fmt::format("k-means needs 1 <= k <= n, got k = {}, n = {}", k, n));
  }
  if (config.restarts < 1 || config.max_iter < 1) fail(ErrorKind::invalid_config, "k-means needs restarts, max_iter >= 1");
  const auto kk = static_cast<std::size_t>(k);

  KMeansResult best;
  bool have_best = false;
  for (int restart = 0; restart < config.restarts; ++restart) {
    Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(restart)}));
    KMeansResult cur;
    cur.centroids.push_back(points[uniform_index(rng, n)]);
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    while (cur.centroids.size() < kk) {
      for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], sq(points[i], cur.centroids.back()));
      cur.centroids.push_back(points[weighted_index(rng, nearest)]);
    }
    cur.labels.assign(n, -1);
    for (int it = 0; it < config.max_iter; ++it) {
      bool changed = false;
      double objective = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        int arg = 0;
        double bd = sq(points[i], cur.centroids[0]);
        for (std::size_t c = 1; c < kk; ++c) {
          double d = sq(points[i], cur.centroids[c]);
          if (d < bd) {
            bd = d;
            arg = static_cast<int>(c);
          }
        }
        if (cur.labels[i] != arg) changed = true;
        cur.labels[i] = arg;
        objective += bd;
      }
      cur.objective_trace.push_back(objective);
      cur.inertia = objective;
      if (!changed) break;
      std::vector<LatLon> sums(kk);
      std::vector<std::size_t> counts(kk, 0);
      for (std::size_t i = 0; i < n; ++i) {
        auto c = static_cast<std::size_t>(cur.labels[i]);
        sums[c].lat += points[i].lat;
        sums[c].lon += points[i].lon;
        ++counts[c];
      }
      for (std::size_t c = 0; c < kk; ++c) {
        // An emptied cluster keeps its previous centroid.
        if (counts[c] == 0) continue;
        cur.centroids[c] = {sums[c].lat / static_cast<double>(counts[c]), sums[c].lon / static_cast<double>(counts[c])};
      }
    }
    // Final objective against the final centroids.
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) objective += sq(points[i], cur.centroids[static_cast<std::size_t>(cur.labels[i])]);
    if (objective < cur.inertia) cur.objective_trace.push_back(objective);
    cur.inertia = objective;
    if (!have_best || cur.inertia < best.inertia) {
      best = std::move(cur);
      have_best = true;
    }
  }
  return best;
}

}  // namespace parkzone

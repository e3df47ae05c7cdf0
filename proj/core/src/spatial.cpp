#include "parkzone/spatial.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "parkzone/error.hpp"
#include "parkzone/random.hpp"

namespace parkzone {
namespace {

struct Entry {
  std::size_t i;
  std::size_t j;
  double w;
};

std::vector<Entry> nonzeros(const WeightMatrix& w) {
  std::vector<Entry> out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (w(i, j) != 0.0) out.push_back({i, j, w(i, j)});
    }
  }
  return out;
}

double squared_degrees(const LatLon& a, const LatLon& b) {
  const double dl = a.lat - b.lat;
  const double dn = a.lon - b.lon;
  return dl * dl + dn * dn;
}

void check_values(std::span<const double> occupancy, const WeightMatrix& w) {
  if (occupancy.size() != w.size()) {
    fail(ErrorKind::invalid_input,
         fmt::format("{} occupancy values for a {}x{} weight matrix", occupancy.size(), w.size(), w.size()));
  }
  for (double v : occupancy) {
    if (!std::isfinite(v)) fail(ErrorKind::invalid_input, "non-finite occupancy value");
  }
  auto [lo, hi] = std::minmax_element(occupancy.begin(), occupancy.end());
  if (occupancy.empty() || *lo == *hi) fail(ErrorKind::degenerate_variance, "occupancy is constant");
}

struct Centered {
  std::vector<double> z;
  double m2 = 0.0;  // sum z^2
  double m4 = 0.0;  // sum z^4
};

Centered center(std::span<const double> o) {
  Centered c;
  const double mean = std::accumulate(o.begin(), o.end(), 0.0) / static_cast<double>(o.size());
  c.z.resize(o.size());
  for (std::size_t i = 0; i < o.size(); ++i) {
    c.z[i] = o[i] - mean;
    c.m2 += c.z[i] * c.z[i];
    c.m4 += c.z[i] * c.z[i] * c.z[i] * c.z[i];
  }
  return c;
}

double cross_product(const std::vector<Entry>& entries, std::span<const double> z) {
  double s = 0.0;
  for (const auto& e : entries) s += e.w * z[e.i] * z[e.j];
  return s;
}

std::string instance_name(const HourStamp& s) { return format_hour_stamp(s); }

}  // namespace

std::string mode_name(WeightMode mode, int knn_k) {
  switch (mode) {
    case WeightMode::knn: return fmt::format("knn:{}", knn_k);
    case WeightMode::global_distance: return "global_distance";
    case WeightMode::area_connections: return "area_connections";
    case WeightMode::area_distance: return "area_distance";
    case WeightMode::gmm_connections: return "gmm_connections";
    case WeightMode::gmm_distance: return "gmm_distance";
  }
  return "unknown";
}

std::pair<WeightMode, int> parse_weight_mode(std::string_view text) {
  if (text.rfind("knn", 0) == 0) {
    auto rest = text.substr(3);
    if (!rest.empty() && rest.front() == ':') rest.remove_prefix(1);
    int k = 0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), k);
    if (rest.empty() || ec != std::errc{} || ptr != rest.data() + rest.size() || k < 1) {
      fail(ErrorKind::invalid_config, fmt::format("weight mode '{}' needs a positive neighbor count, e.g. knn:5", text));
    }
    return {WeightMode::knn, k};
  }
  for (auto m : {WeightMode::global_distance, WeightMode::area_connections, WeightMode::area_distance,
                 WeightMode::gmm_connections, WeightMode::gmm_distance}) {
    if (text == mode_name(m)) return {m, 0};
  }
  fail(ErrorKind::invalid_config, fmt::format("unknown weight mode '{}'", text));
}

bool needs_labels(WeightMode mode) {
  return mode == WeightMode::area_connections || mode == WeightMode::area_distance ||
         mode == WeightMode::gmm_connections || mode == WeightMode::gmm_distance;
}

WeightMatrix::WeightMatrix(std::size_t n, WeightMode mode, int knn_k)
    : n_(n), mode_(mode), knn_k_(knn_k), w_(n * n, 0.0) {}

void WeightMatrix::set(std::size_t i, std::size_t j, double value) {
  if (i == j && value != 0.0) fail(ErrorKind::invalid_input, "spatial weights must have a zero diagonal");
  if (!(value >= 0.0) || !std::isfinite(value)) fail(ErrorKind::invalid_input, "spatial weights must be nonnegative");
  w_[i * n_ + j] = value;
}

double WeightMatrix::total() const { return std::accumulate(w_.begin(), w_.end(), 0.0); }

std::vector<std::size_t> WeightMatrix::zero_rows() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n_; ++i) {
    auto r = row(i);
    if (std::all_of(r.begin(), r.end(), [](double v) { return v == 0.0; })) out.push_back(i);
  }
  return out;
}

WeightMatrix WeightMatrix::symmetrized() const {
  WeightMatrix out(n_, mode_, knn_k_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) out.w_[i * n_ + j] = 0.5 * ((*this)(i, j) + (*this)(j, i));
  return out;
}

std::vector<int> encode_labels(std::span<const std::string> labels) {
  std::unordered_map<std::string, int> codes;
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    auto [it, inserted] = codes.emplace(l, static_cast<int>(codes.size()));
    out.push_back(it->second);
  }
  return out;
}

WeightMatrix build_weights(std::span<const LatLon> midpoints, std::span<const std::string> ids, WeightMode mode,
                           const WeightContext& context) {
  const std::size_t n = midpoints.size();
  if (n < 2) fail(ErrorKind::invalid_input, "spatial weights need at least two block-faces");
  if (ids.size() != n) fail(ErrorKind::invalid_input, "block ids and midpoints differ in length");
  const bool labelled = needs_labels(mode);
  if (labelled && context.labels.size() != n) {
    fail(ErrorKind::invalid_input, fmt::format("{} needs one label per block-face", mode_name(mode)));
  }
  WeightMatrix w(n, mode, mode == WeightMode::knn ? context.knn_k : 0);

  if (mode == WeightMode::knn) {
    const auto k = static_cast<std::size_t>(std::max(context.knn_k, 0));
    if (context.knn_k < 1 || k >= n) {
      fail(ErrorKind::invalid_input, fmt::format("knn needs 1 <= k < n, got k = {}, n = {}", context.knn_k, n));
    }
    std::vector<std::size_t> order;
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      order.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        order.push_back(j);
        dist[j] = squared_degrees(midpoints[i], midpoints[j]);
      }
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](std::size_t a, std::size_t b) {
                          if (dist[a] != dist[b]) return dist[a] < dist[b];
                          return ids[a] < ids[b];
                        });
      for (std::size_t r = 0; r < k; ++r) w.set(i, order[r], 1.0);
    }
    return w;
  }

  const bool connections = mode == WeightMode::area_connections || mode == WeightMode::gmm_connections;
  for (std::size_t i = 0; i < n; ++i) {
    auto eligible = [&](std::size_t j) { return j != i && (!labelled || context.labels[j] == context.labels[i]); };
    if (connections) {
      for (std::size_t j = 0; j < n; ++j)
        if (eligible(j)) w.set(i, j, 1.0);
      continue;
    }
    // Distance modes: closeness normalized over row i's eligible j's.
    double dmin = std::numeric_limits<double>::infinity();
    double dmax = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!eligible(j)) continue;
      const double d = std::sqrt(squared_degrees(midpoints[i], midpoints[j]));
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }
    if (dmax < 0.0) continue;  // singleton group: zero row
    for (std::size_t j = 0; j < n; ++j) {
      if (!eligible(j)) continue;
      const double d = std::sqrt(squared_degrees(midpoints[i], midpoints[j]));
      w.set(i, j, dmax > dmin ? (dmax - d) / (dmax - dmin) : 1.0);
    }
  }
  return w;
}

double morans_i(std::span<const double> occupancy, const WeightMatrix& weights) {
  check_values(occupancy, weights);
  const double s0 = weights.total();
  if (!(s0 > 0.0)) fail(ErrorKind::degenerate_weights, "spatial weights sum to zero");
  const auto c = center(occupancy);
  double num = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    auto r = weights.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * c.z[j];
    num += c.z[i] * acc;
  }
  return static_cast<double>(occupancy.size()) / s0 * num / c.m2;
}

MoranReport significance(std::span<const double> occupancy, const WeightMatrix& weights,
                         const SignificanceConfig& config) {
  MoranReport rep;
  rep.mode = mode_name(weights.mode(), weights.knn_k());
  rep.I = morans_i(occupancy, weights);
  const std::size_t n = occupancy.size();
  const double nn = static_cast<double>(n);
  rep.expected_I = -1.0 / (nn - 1.0);

  if (config.method == SignificanceMethod::analytic) {
    if (n < 4) fail(ErrorKind::invalid_input, "analytic Moran variance needs n >= 4");
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row_sum = 0.0, col_sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double wij = weights(i, j);
        const double wji = weights(j, i);
        s0 += wij;
        s1 += (wij + wji) * (wij + wji);
        row_sum += wij;
        col_sum += wji;
      }
      s2 += (row_sum + col_sum) * (row_sum + col_sum);
    }
    s1 *= 0.5;
    const auto c = center(occupancy);
    const double b2 = nn * c.m4 / (c.m2 * c.m2);
    const double num = nn * ((nn * nn - 3.0 * nn + 3.0) * s1 - nn * s2 + 3.0 * s0 * s0) -
                       b2 * ((nn * nn - nn) * s1 - 2.0 * nn * s2 + 6.0 * s0 * s0);
    const double second_moment = num / ((nn - 1.0) * (nn - 2.0) * (nn - 3.0) * s0 * s0);
    const double variance = second_moment - rep.expected_I * rep.expected_I;
    if (!(variance > 0.0)) fail(ErrorKind::degenerate_weights, "Moran's I has zero variance under randomization");
    rep.z_score = (rep.I - rep.expected_I) / std::sqrt(variance);
    rep.p_value = std::min(1.0, std::erfc(std::abs(rep.z_score) / std::sqrt(2.0)));
  } else {
    if (config.permutations < 100) {
      fail(ErrorKind::invalid_config, fmt::format("permutation test needs >= 100 permutations, got {}",
                                                  config.permutations));
    }
    const auto entries = nonzeros(weights);
    const auto c = center(occupancy);
    const double scale = nn / weights.total() / c.m2;
    const double observed = std::abs(rep.I - rep.expected_I);
    const double tol = 1e-12 * std::max(1.0, observed);
    std::vector<double> z = c.z;
    double sum = 0.0, sum_sq = 0.0;
    std::size_t extreme = 0;
    for (int p = 0; p < config.permutations; ++p) {
      Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(p)}));
      z = c.z;
      for (std::size_t i = n - 1; i > 0; --i) std::swap(z[i], z[uniform_index(rng, i + 1)]);
      const double ip = scale * cross_product(entries, z);
      sum += ip;
      sum_sq += ip * ip;
      if (std::abs(ip - rep.expected_I) >= observed - tol) ++extreme;
    }
    const double m = config.permutations;
    const double mean = sum / m;
    const double var = std::max(0.0, sum_sq / m - mean * mean);
    rep.z_score = var > 0.0 ? (rep.I - mean) / std::sqrt(var) : 0.0;
    rep.p_value = (static_cast<double>(extreme) + 1.0) / (m + 1.0);
  }
  rep.significant = rep.p_value < kSignificanceLevel;
  return rep;
}

std::size_t SweepResult::significant_count() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.report.significant; }));
}

double SweepResult::percent_significant() const {
  if (rows.empty()) return 0.0;
  return 100.0 * static_cast<double>(significant_count()) / static_cast<double>(rows.size());
}

SweepResult significance_sweep(const OccupancyGrid& grid, std::span<const LatLon> midpoints,
                               const WeightsSpec& spec, std::span<const HourStamp> instances,
                               const SignificanceConfig& config) {
  if (instances.empty()) fail(ErrorKind::invalid_input, "significance sweep needs at least one instance");
  if (midpoints.size() != grid.block_count()) fail(ErrorKind::invalid_input, "midpoints do not match grid rows");
  const auto& ids = grid.block_ids();
  SweepResult out;
  out.mode = mode_name(spec.mode, spec.knn_k);

  WeightContext ctx;
  ctx.knn_k = spec.knn_k;
  std::optional<WeightMatrix> fixed;
  std::map<SliceKey, WeightMatrix> per_slice;
  if (spec.mode == WeightMode::gmm_connections || spec.mode == WeightMode::gmm_distance) {
    for (const auto& [key, labels] : spec.gmm_labels) {
      ctx.labels = labels;
      per_slice.emplace(key, build_weights(midpoints, ids, spec.mode, ctx));
    }
  } else {
    if (needs_labels(spec.mode)) ctx.labels = spec.area_labels;
    fixed = build_weights(midpoints, ids, spec.mode, ctx);
  }

  for (const auto& inst : instances) {
    auto t = grid.find_time(inst);
    if (!t) {
      out.degenerate.emplace_back(inst, "instance not in grid");
      continue;
    }
    const WeightMatrix* w = nullptr;
    if (fixed) {
      w = &*fixed;
    } else {
      auto it = per_slice.find(SliceKey{iso_weekday(inst.date), inst.hour});
      if (it == per_slice.end()) {
        out.degenerate.emplace_back(inst, "no component labels for slice");
        continue;
      }
      w = &it->second;
    }
    if (!w->zero_rows().empty()) ++out.zero_row_instances;
    auto occupancy = grid.column(*t);
    SignificanceConfig cfg = config;
    cfg.seed = derive_seed(config.seed, {static_cast<std::uint64_t>(inst.date.time_since_epoch().count()),
                                         static_cast<std::uint64_t>(inst.hour)});
    try {
      auto rep = significance(occupancy, *w, cfg);
      rep.slice = instance_name(inst);
      out.rows.push_back({inst, std::move(rep)});
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::degenerate_variance || e.kind() == ErrorKind::degenerate_weights ||
          e.kind() == ErrorKind::invalid_input) {
        out.degenerate.emplace_back(inst, e.what());
      } else {
        throw;
      }
    }
  }
  return out;
}

std::string sweep_to_csv(std::span<const SweepResult> results) {
  std::string out = "slice_date,slice_hour,mode,I,z,p,significant\n";
  for (const auto& res : results) {
    for (const auto& row : res.rows) {
      out += fmt::format("{},{},{},{:.10g},{:.10g},{:.10g},{}\n", format_date(row.instance.date), row.instance.hour,
                         res.mode, row.report.I, row.report.z_score, row.report.p_value,
                         row.report.significant ? "true" : "false");
    }
  }
  return out;
}

}  // namespace parkzone

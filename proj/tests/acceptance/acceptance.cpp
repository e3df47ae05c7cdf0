// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "parkzone/commands.hpp"
#include "parkzone/error.hpp"
#include "parkzone/ingest.hpp"
#include "parkzone/mixture.hpp"
#include "parkzone/model_selection.hpp"
#include "parkzone/oracle.hpp"
#include "parkzone/random.hpp"
#include "parkzone/spatial.hpp"
#include "parkzone/synth.hpp"
#include "parkzone/temporal.hpp"

namespace fs = std::filesystem;
using namespace parkzone;

namespace {

// Tolerances and limits, pinned.
constexpr double kMoranOracleTol = 1e-12;
constexpr double kMoranExtremeTol = 1e-12;
constexpr double kCalibrationMeanTol = 0.05;
constexpr double kCalibrationVarLo = 0.9;
constexpr double kCalibrationVarHi = 1.1;
constexpr double kFalsePositiveLo = 0.005;
constexpr double kFalsePositiveHi = 0.015;
constexpr double kMonotoneTol = 1e-9;
constexpr double kRowSumTol = 1e-9;
constexpr double kWeightSumTol = 1e-12;
constexpr double kClosedFormTol = 1e-8;
constexpr int kSelectTrials = 20;
constexpr int kSelectRequired = 18;
constexpr double kGmmSweepMin = 95.0;
constexpr double kGlobalSweepMax = 60.0;
constexpr double kVarianceSeedFraction = 0.95;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;  // 0 = no runtime bound
  std::function<Outcome()> body;
};

std::vector<std::vector<double>> dense(const WeightMatrix& w) {
  std::vector<std::vector<double>> out(w.size(), std::vector<double>(w.size()));
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = 0; j < w.size(); ++j) out[i][j] = w(i, j);
  }
  return out;
}

std::vector<std::string> make_ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(fmt::format("B{:04d}", i));
  return ids;
}

/// Grid and midpoints for one generated season.
struct Season {
  SynthData data;
  OccupancyGrid grid;
  std::vector<LatLon> mids;
};

Season make_season(const SynthSpec& spec) {
  Season s;
  s.data = generate(spec);
  s.grid = build_grid(s.data.transactions, s.data.blockfaces, s.data.schedule).grid;
  s.mids = grid_midpoints(s.grid, s.data.blockfaces);
  return s;
}

/// Exact agreement up to a relabeling.
bool same_partition(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [x, fresh_x] = ab.emplace(a[i], b[i]);
    auto [y, fresh_y] = ba.emplace(b[i], a[i]);
    if (x->second != b[i] || y->second != a[i]) return false;
  }
  return true;
}

std::map<SliceKey, std::vector<int>> fit_slice_labels(const Season& s, int k, std::uint64_t seed) {
  SelectionConfig sc;
  sc.k_min = k;
  sc.k_max = k;
  sc.em.seed = seed;
  auto sel = select_k_detailed(s.grid, s.mids, sc);
  std::map<SliceKey, std::vector<int>> out;
  for (std::size_t i = 0; i < sel.slices.size(); ++i) out.emplace(sel.slices[i], sel.models[i].assignments);
  return out;
}

// 1 -------------------------------------------------------------------------
Outcome moran_oracle_equivalence() {
  Rng rng(derive_seed(101, {1}));
  const std::vector<std::string> modes = {"knn:3",          "global_distance", "area_connections",
                                          "area_distance",  "gmm_connections", "gmm_distance"};
  std::size_t compared = 0;
  double worst = 0.0;
  for (int instance = 0; instance < 1000; ++instance) {
    const std::size_t n = 4 + uniform_index(rng, 47);
    std::vector<LatLon> pts(n);
    std::vector<double> occ(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      pts[i] = {47.6 + 0.01 * uniform01(rng), -122.34 + 0.01 * uniform01(rng)};
      occ[i] = 1.5 * uniform01(rng);
      labels[i] = static_cast<int>(i % 3 == 0 ? 0 : uniform_index(rng, 3));
    }
    auto ids = make_ids(n);
    for (const auto& text : modes) {
      auto [mode, knn_k] = parse_weight_mode(text);
      WeightContext ctx{knn_k, labels};
      auto w = build_weights(pts, ids, mode, ctx);
      const double produced = morans_i(occ, w);
      const double expected = oracle::morans_i(occ, dense(w));
      worst = std::max(worst, std::abs(produced - expected));
      ++compared;
    }
  }
  return {worst <= kMoranOracleTol, fmt::format("{} comparisons, max |diff| = {:.3e}", compared, worst)};
}

// 2 -------------------------------------------------------------------------
Outcome moran_extremes() {
  const std::size_t n = 12;
  WeightMatrix ring(n, WeightMode::knn, 2);
  std::vector<double> alternating(n);
  for (std::size_t i = 0; i < n; ++i) {
    ring.set(i, (i + 1) % n, 1.0);
    ring.set(i, (i + n - 1) % n, 1.0);
    alternating[i] = i % 2 == 0 ? 1.0 : -1.0;
  }
  const double ring_i = morans_i(alternating, ring);

  std::vector<LatLon> pts;
  std::vector<int> labels;
  std::vector<double> occ;
  for (std::size_t i = 0; i < 10; ++i) {
    const bool left = i < 5;
    pts.push_back({47.61 + 0.001 * static_cast<double>(i), -122.34});
    labels.push_back(left ? 0 : 1);
    occ.push_back(left ? 0.3 : 0.9);
  }
  WeightContext ctx{0, labels};
  const double block_i = morans_i(occ, build_weights(pts, make_ids(10), WeightMode::area_connections, ctx));
  const bool pass = std::abs(ring_i + 1.0) <= kMoranExtremeTol && std::abs(block_i - 1.0) <= kMoranExtremeTol;
  return {pass, fmt::format("ring I = {:.15f}, two-block I = {:.15f}", ring_i, block_i)};
}

// 3 -------------------------------------------------------------------------
Outcome analytic_calibration() {
  const std::size_t n = 100;
  const int layouts = 10;
  const int per_layout = 1000;
  std::vector<double> z;
  std::size_t positives = 0;
  for (int layout = 0; layout < layouts; ++layout) {
    Rng rng(derive_seed(303, {static_cast<std::uint64_t>(layout)}));
    std::vector<LatLon> pts(n);
    std::vector<double> occ(n);
    for (std::size_t i = 0; i < n; ++i) {
      pts[i] = {47.6 + 0.01 * uniform01(rng), -122.34 + 0.01 * uniform01(rng)};
      occ[i] = uniform01(rng);
    }
    auto w = build_weights(pts, make_ids(n), WeightMode::knn, WeightContext{5, {}});
    SignificanceConfig cfg;
    for (int t = 0; t < per_layout; ++t) {
      std::shuffle(occ.begin(), occ.end(), rng);
      auto rep = significance(occ, w, cfg);
      z.push_back(rep.z_score);
      if (rep.significant) ++positives;
    }
  }
  const double m = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(z.size());
  double var = 0.0;
  for (double v : z) var += (v - m) * (v - m);
  var /= static_cast<double>(z.size() - 1);
  const double fpr = static_cast<double>(positives) / static_cast<double>(z.size());
  const bool pass = std::abs(m) <= kCalibrationMeanTol && var >= kCalibrationVarLo && var <= kCalibrationVarHi &&
                    fpr >= kFalsePositiveLo && fpr <= kFalsePositiveHi;
  return {pass, fmt::format("{} instances: mean z = {:+.4f}, var z = {:.4f}, FPR = {:.4f}", z.size(), m, var, fpr)};
}

// 4 -------------------------------------------------------------------------
Outcome em_monotonicity() {
  std::size_t fits = 0, steps = 0, reseeds = 0;
  double worst_drop = 0.0, worst_row = 0.0, worst_pi = 0.0;
  for (int k = 2; k <= 6; ++k) {
    for (int rep = 0; rep < 20; ++rep) {
      SynthSpec spec;
      spec.weeks = 1;
      spec.clusters = 1 + rep % 4;
      spec.seed = derive_seed(404, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(rep)});
      auto data = generate(spec);
      auto mids = grid_midpoints(data.expected, data.blockfaces);
      auto occ = data.expected.column(static_cast<std::size_t>(rep) % data.expected.time_count());
      auto features = slice_features(mids, occ);
      EmConfig cfg;
      cfg.seed = spec.seed;
      FitTrace trace;
      auto model = em_fit(features, k, cfg, &trace);
      ++fits;
      for (const auto& r : trace.restarts) {
        reseeds += r.reinitialized_at.size();
        for (std::size_t t = 1; t < r.log_likelihood.size(); ++t) {
          if (std::find(r.reinitialized_at.begin(), r.reinitialized_at.end(), t) != r.reinitialized_at.end()) {
            continue;
          }
          ++steps;
          worst_drop = std::max(worst_drop, r.log_likelihood[t - 1] - r.log_likelihood[t]);
        }
      }
      auto resp = e_step(features, model);
      for (std::size_t i = 0; i < resp.rows(); ++i) {
        double s = 0.0;
        for (double v : resp.row(i)) s += v;
        worst_row = std::max(worst_row, std::abs(s - 1.0));
      }
      worst_pi = std::max(worst_pi, std::abs(std::accumulate(model.weights.begin(), model.weights.end(), 0.0) - 1.0));
    }
  }
  const bool pass = worst_drop <= kMonotoneTol && worst_row <= kRowSumTol && worst_pi <= kWeightSumTol;
  return {pass, fmt::format("{} fits, {} EM steps, {} reseeds; max LL drop {:.3e}, max |row-1| {:.3e}, max |sum pi-1| "
                            "{:.3e}",
                            fits, steps, reseeds, std::max(worst_drop, 0.0), worst_row, worst_pi)};
}

// 5 -------------------------------------------------------------------------
Outcome closed_form_single_component() {
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    Rng rng(derive_seed(505, {static_cast<std::uint64_t>(rep)}));
    const std::size_t n = 20 + uniform_index(rng, 200);
    std::vector<FeatureRow> rows(n);
    for (auto& r : rows) r = {uniform01(rng), uniform01(rng), uniform01(rng)};
    auto features = FeatureMatrix::from_normalized(rows, NormParams{{0, 0, 0}, {1, 1, 1}});
    EmConfig cfg;
    cfg.seed = rep;
    auto model = em_fit(features, 1, cfg);
    for (std::size_t d = 0; d < kFeatureDims; ++d) {
      std::vector<double> col;
      for (const auto& r : rows) col.push_back(r[d]);
      const double mu = oracle::mean(col);
      std::vector<double> sq;
      for (double v : col) sq.push_back((v - mu) * (v - mu));
      const double var = std::max(oracle::mean(sq), kVarianceFloor);
      worst = std::max({worst, std::abs(model.means[0][d] - mu), std::abs(model.variances[0][d] - var)});
    }
  }
  return {worst <= kClosedFormTol, fmt::format("20 fits, max |diff| = {:.3e}", worst)};
}

// 6 -------------------------------------------------------------------------
Outcome cluster_recovery() {
  int recovered = 0, chosen3 = 0;
  std::map<int, int> histogram;
  for (int trial = 0; trial < kSelectTrials; ++trial) {
    SynthSpec spec;
    spec.clusters = 3;
    spec.separation = 10.0;
    spec.weeks = 1;
    spec.schedule.start_hour = 10;
    spec.schedule.end_hour = 12;
    spec.seed = derive_seed(606, {static_cast<std::uint64_t>(trial)});
    auto season = make_season(spec);

    const SliceKey probe{3, 10};
    auto features = slice_features(season.mids, slice_mean(season.grid, probe));
    EmConfig em;
    em.seed = spec.seed;
    auto model = em_fit(features, 3, em);
    if (same_partition(model.assignments, season.data.labels)) ++recovered;

    SelectionConfig sc;
    sc.k_min = 2;
    sc.k_max = 8;
    sc.em.seed = spec.seed;
    const int k = select_k(season.grid, season.data.blockfaces, sc);
    ++histogram[k];
    if (k == 3) ++chosen3;
  }
  std::string hist;
  for (auto [k, c] : histogram) hist += fmt::format(" k={}:{}", k, c);
  const bool pass = recovered == kSelectTrials && chosen3 >= kSelectRequired;
  return {pass, fmt::format("labels recovered {}/{}; select_k = 3 in {}/{} trials (need {});{}", recovered,
                            kSelectTrials, chosen3, kSelectTrials, kSelectRequired, hist)};
}

// 7 -------------------------------------------------------------------------
Outcome consistency_identity() {
  SynthSpec spec;
  spec.identical_weeks = true;
  spec.weeks = 3;
  spec.n_blocks = 120;
  spec.seed = 707;
  auto season = make_season(spec);
  std::vector<ConsistencyReport> reports;
  ConsistencyConfig cfg;
  cfg.em.seed = spec.seed;
  for (const auto& key : season.grid.slices()) {
    reports.push_back(consistency_metric(season.grid, season.mids, key, 3, cfg));
  }
  const std::string table = consistency_table_csv(reports);
  std::istringstream in(table);
  std::string line;
  std::getline(in, line);
  std::size_t cells = 0, off = 0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    while (std::getline(row, cell, ',')) {
      ++cells;
      if (cell != "100.0") ++off;
    }
  }

  const std::vector<int> a = {0, 0, 0, 1, 1, 1, 2, 2, 2, 2};
  std::vector<int> b = a;
  b[4] = 2;
  const std::vector<std::vector<int>> vs_b = {b};
  const std::vector<std::vector<int>> vs_a = {a};
  const double flip = (anchor_consistency(a, vs_b) + anchor_consistency(b, vs_a)) / 2.0;

  const bool pass = cells > 0 && off == 0 && flip == 90.0;
  return {pass, fmt::format("{} table cells, {} not 100.0; one-flip instance = {:.17g}", cells, off, flip)};
}

// 8 -------------------------------------------------------------------------
Outcome sweep_property() {
  SynthSpec clustered;
  clustered.n_blocks = 200;
  clustered.weeks = 13;
  clustered.seed = 808;
  auto season = make_season(clustered);
  const std::size_t instances = season.grid.time_count();

  WeightsSpec gmm;
  gmm.mode = WeightMode::gmm_connections;
  gmm.gmm_labels = fit_slice_labels(season, 3, clustered.seed);
  SignificanceConfig sig;
  auto gmm_sweep = significance_sweep(season.grid, season.mids, gmm, season.grid.timestamps(), sig);

  std::vector<double> global_pct;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthSpec field;
    field.n_blocks = 200;
    field.weeks = 13;
    field.layout = ClusterLayout::voronoi;
    field.clusters = 40;
    field.base_occupancy.clear();
    Rng rng(derive_seed(818, {seed}));
    for (int c = 0; c < field.clusters; ++c) field.base_occupancy.push_back(0.2 + 0.6 * uniform01(rng));
    field.noise_std = 0.15;
    field.seed = derive_seed(819, {seed});
    auto hetero = make_season(field);
    WeightsSpec global;
    global.mode = WeightMode::global_distance;
    auto sweep = significance_sweep(hetero.grid, hetero.mids, global, hetero.grid.timestamps(), sig);
    global_pct.push_back(sweep.percent_significant());
  }
  const double global_mean = std::accumulate(global_pct.begin(), global_pct.end(), 0.0) / global_pct.size();
  std::string per_field;
  for (double p : global_pct) per_field += fmt::format(" {:.1f}", p);

  const bool pass = gmm_sweep.percent_significant() >= kGmmSweepMin && global_mean <= kGlobalSweepMax;
  return {pass, fmt::format("gmm_connections {:.2f}% of {} instances; global_distance on heterogeneous fields "
                            "{:.2f}% (per field:{})",
                            gmm_sweep.percent_significant(), instances, global_mean, per_field)};
}

// 9 -------------------------------------------------------------------------
Outcome zone_variance_ordering() {
  const int seeds = 20;
  int lower = 0;
  double gmm_sum = 0.0, bisect_sum = 0.0;
  for (int s = 0; s < seeds; ++s) {
    SynthSpec spec;
    spec.n_blocks = 200;
    spec.weeks = 13;
    spec.seed = derive_seed(909, {static_cast<std::uint64_t>(s)});
    auto season = make_season(spec);
    auto labels = fit_slice_labels(season, 3, spec.seed);
    const std::vector<int> none;
    LabelsAt at = [&](const HourStamp& t) -> std::span<const int> {
      auto it = labels.find({iso_weekday(t.date), t.hour});
      return it == labels.end() ? std::span<const int>(none) : std::span<const int>(it->second);
    };
    std::map<std::string, std::string> area_of;
    for (const auto& bf : season.data.blockfaces) area_of.emplace(bf.id, bf.paid_area);
    std::vector<std::string> halves;
    for (const auto& id : season.grid.block_ids()) halves.push_back(area_of.at(id));
    const double gv = zone_variance(season.grid, at);
    const double bv = zone_variance(season.grid, encode_labels(halves));
    gmm_sum += gv;
    bisect_sum += bv;
    if (gv < bv) ++lower;
  }
  const bool pass = lower >= static_cast<int>(std::ceil(kVarianceSeedFraction * seeds));
  return {pass, fmt::format("GMM zones lower in {}/{} seeds; mean variance {:.5f} (GMM) vs {:.5f} (bisection)", lower,
                            seeds, gmm_sum / seeds, bisect_sum / seeds)};
}

// 10 ------------------------------------------------------------------------
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out.emplace(fs::relative(e.path(), root).generic_string(), ss.str());
  }
  return out;
}

Outcome end_to_end_determinism() {
  const fs::path base = fs::path(PARKZONE_SCRATCH_DIR) / "acceptance_determinism";
  fs::remove_all(base);
  std::vector<std::map<std::string, std::string>> trees;
  std::ostringstream log;
  for (const char* run : {"run_a", "run_b"}) {
    const fs::path dir = base / run;
    fs::create_directories(dir);
    std::ofstream(dir / "config.json") << R"({
  "transactions": "out/transactions.csv",
  "blockfaces": "out/blockfaces.csv",
  "out": "out",
  "seed": 1010,
  "k_min": 2,
  "k_max": 4,
  "em": {"restarts": 4},
  "significance": "permutation",
  "permutations": 199,
  "seasons": {"a": ["2017-06-05", "2017-06-17"], "b": ["2017-06-19", "2017-07-01"]},
  "price_periods": {"a": ["2017-06-05", "2017-06-17"], "b": ["2017-06-19", "2017-07-01"]},
  "synth": {"n_blocks": 80, "weeks": 4}
}
)";
    const std::string cfg = (dir / "config.json").string();
    for (const char* cmd : {"synth", "ingest", "fit", "report", "export-geojson"}) {
      const char* argv[] = {"parkzone", cmd, "--config", cfg.c_str()};
      const int rc = cli::run(4, argv, log, log);
      if (rc != 0) return {false, fmt::format("{} {} exited {}: {}", run, cmd, rc, log.str())};
    }
    trees.push_back(snapshot(dir / "out"));
  }
  std::size_t differing = 0;
  for (const auto& [name, bytes] : trees[0]) {
    auto it = trees[1].find(name);
    if (it == trees[1].end() || it->second != bytes) ++differing;
  }
  const bool pass = trees[0].size() == trees[1].size() && differing == 0 && !trees[0].empty();
  return {pass, fmt::format("{} files per run, {} differing", trees[0].size(), differing)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "Moran's I oracle equivalence", 10.0, moran_oracle_equivalence},
      {2, "Moran extremes", 0.0, moran_extremes},
      {3, "analytic significance calibration", 60.0, analytic_calibration},
      {4, "EM monotonicity", 0.0, em_monotonicity},
      {5, "closed-form k=1", 0.0, closed_form_single_component},
      {6, "cluster recovery and k selection", 120.0, cluster_recovery},
      {7, "consistency metric identity", 0.0, consistency_identity},
      {8, "sweep significance property", 300.0, sweep_property},
      {9, "zone-variance ordering", 0.0, zone_variance_ordering},
      {10, "end-to-end determinism", 0.0, end_to_end_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += fmt::format("; exceeded {:.0f} s budget", c.budget_s);
    }
    if (!o.pass) ++failures;
    std::cout << fmt::format("{} [{:2d}] {}: {} ({:.1f} s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail, secs)
              << std::flush;
  }
  std::cout << "SKIP [11] replication on the public Seattle dataset: optional, non-gating; no dataset in this "
               "workspace\n";
  std::cout << fmt::format("{} of {} gating criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

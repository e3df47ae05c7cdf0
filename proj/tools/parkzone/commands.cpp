#include "parkzone/commands.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "parkzone/atomic_file.hpp"
#include "parkzone/error.hpp"
#include "parkzone/ingest.hpp"
#include "parkzone/model_io.hpp"
#include "parkzone/model_selection.hpp"
#include "parkzone/random.hpp"
#include "parkzone/spatial.hpp"
#include "parkzone/synth.hpp"
#include "parkzone/temporal.hpp"

namespace parkzone::cli {
namespace fs = std::filesystem;

namespace {

template <class Body>
int guarded(std::ostream& log, std::string_view command, Body&& body) {
  try {
    return body();
  } catch (const Error& e) {
    log << "parkzone " << command << ": " << e.what() << '\n';
    return e.is_input_error() ? kExitInputError : kExitComputeError;
  } catch (const std::exception& e) {
    log << "parkzone " << command << ": " << e.what() << '\n';
    return kExitComputeError;
  }
}

std::vector<BlockFace> load_blockfaces(const fs::path& path) {
  if (path.empty()) fail(ErrorKind::invalid_config, "no blockfaces file configured");
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, fmt::format("cannot open '{}'", path.string()));
  return read_blockfaces(in, path.filename().string());
}

std::vector<Transaction> load_transactions(const fs::path& path) {
  if (path.empty()) fail(ErrorKind::invalid_config, "no transactions file configured");
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, fmt::format("cannot open '{}'", path.string()));
  return read_transactions(in, path.filename().string());
}

fs::path grid_path(const RunConfig& c) { return c.out / "grid.csv"; }
fs::path models_dir(const RunConfig& c) { return c.out / "models"; }
fs::path model_path(const RunConfig& c, const SliceKey& key) { return models_dir(c) / (slice_name(key) + ".json"); }
fs::path reports_dir(const RunConfig& c) { return c.out / "reports"; }

OccupancyGrid load_grid(const RunConfig& c) {
  auto path = grid_path(c);
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, fmt::format("cannot open '{}'; run `parkzone ingest` first", path.string()));
  return read_grid(in, path.filename().string());
}

int load_selected_k(const RunConfig& c) {
  auto path = c.out / "selection.json";
  try {
    return nlohmann::json::parse(read_file(path)).at("k").get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::vector<HourStamp> instances_in(const OccupancyGrid& grid, const std::optional<DateRange>& range) {
  std::vector<HourStamp> out;
  for (const auto& ts : grid.timestamps()) {
    if (!range || range->contains(ts.date)) out.push_back(ts);
  }
  return out;
}

std::vector<const BlockFace*> align_blockfaces(const OccupancyGrid& grid, const std::vector<BlockFace>& bfs) {
  std::map<std::string, const BlockFace*> by_id;
  for (const auto& bf : bfs) by_id.emplace(bf.id, &bf);
  std::vector<const BlockFace*> out;
  for (const auto& id : grid.block_ids()) {
    auto it = by_id.find(id);
    if (it == by_id.end()) fail(ErrorKind::invalid_input, fmt::format("grid block '{}' missing from block-faces", id));
    out.push_back(it->second);
  }
  return out;
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

int cmd_ingest(const RunConfig& config, std::ostream& log) {
  return guarded(log, "ingest", [&] {
    config.validate();
    auto blockfaces = load_blockfaces(config.blockfaces);
    auto transactions = load_transactions(config.transactions);
    auto result = build_grid(transactions, blockfaces, config.schedule);
    write_file_atomic(grid_path(config), grid_to_csv(result.grid));
    write_file_atomic(config.out / "ingest_report.json", result.report.to_json());
    log << fmt::format("ingest: {} block-faces x {} paid hours; {} excluded; clipped cells {:.4f}%\n",
                       result.grid.block_count(), result.grid.time_count(), result.report.excluded_blocks.size(),
                       100.0 * result.report.clipped_cell_fraction());
    return kExitOk;
  });
}

int cmd_fit(const RunConfig& config, std::ostream& log) {
  return guarded(log, "fit", [&] {
    config.validate();
    auto grid = load_grid(config);
    auto blockfaces = load_blockfaces(config.blockfaces);
    auto mids = grid_midpoints(grid, blockfaces);
    SelectionConfig sc;
    sc.k_min = config.k_min;
    sc.k_max = config.k_max;
    sc.em = config.em_config();
    sc.range = config.fit_range;
    auto sel = select_k_detailed(grid, mids, sc);

    std::error_code ec;
    fs::remove_all(models_dir(config), ec);
    for (std::size_t s = 0; s < sel.slices.size(); ++s) {
      SliceModel sm{sel.slices[s], grid.block_ids(), sel.models[s]};
      write_file_atomic(model_path(config, sel.slices[s]), model_to_json(sm));
    }
    std::string summary = fmt::format("{{\n  \"k\": {},\n  \"searched\": {},\n  \"k_range\": [{}, {}],\n  \"mean_bic\": {{",
                                      sel.k, config.k_min != config.k_max ? "true" : "false", config.k_min,
                                      config.k_max);
    bool first = true;
    for (const auto& [k, v] : sel.mean_bic) {
      summary += fmt::format("{}\"{}\": {}", first ? "" : ", ", k, num(v));
      first = false;
    }
    summary += "},\n  \"slices\": [";
    for (std::size_t s = 0; s < sel.slices.size(); ++s) {
      summary += fmt::format("{}\"{}\"", s ? ", " : "", slice_name(sel.slices[s]));
    }
    summary += "]\n}\n";
    write_file_atomic(config.out / "selection.json", summary);
    log << fmt::format("fit: k = {} over {} slices\n", sel.k, sel.slices.size());
    return kExitOk;
  });
}

int cmd_report(const RunConfig& config, std::ostream& log) {
  return guarded(log, "report", [&] {
    config.validate();
    auto grid = load_grid(config);
    auto blockfaces = load_blockfaces(config.blockfaces);
    auto mids = grid_midpoints(grid, blockfaces);
    auto aligned = align_blockfaces(grid, blockfaces);
    const int k = load_selected_k(config);
    std::vector<std::string> problems;

    std::map<SliceKey, SliceModel> models;
    for (const auto& key : grid.slices()) {
      try {
        auto sm = model_from_json(read_file(model_path(config, key)));
        if (sm.block_ids != grid.block_ids()) fail(ErrorKind::invalid_input, "block order differs from grid");
        models.emplace(key, std::move(sm));
      } catch (const Error& e) {
        problems.push_back(fmt::format("model {}: {}", slice_name(key), e.what()));
      }
    }

    std::vector<ConsistencyReport> consistency;
    std::vector<CentroidDispersion> dispersion;
    for (const auto& key : grid.slices()) {
      try {
        auto rep = consistency_metric(grid, mids, key, k, {config.em_config(), config.fit_range});
        for (const auto& [date, why] : rep.skipped_anchors) {
          problems.push_back(fmt::format("consistency {} anchor {} skipped: {}", slice_name(key), format_date(date), why));
        }
        KMeansConfig km;
        km.seed = derive_seed(config.seed, {key.weekday, static_cast<std::uint64_t>(key.hour), 0x4B4DULL});
        auto disp = centroid_dispersion(rep.anchor_models, k, km);
        disp.slice = key;
        dispersion.push_back(disp);
        rep.anchor_models.clear();
        consistency.push_back(std::move(rep));
      } catch (const Error& e) {
        problems.push_back(fmt::format("consistency {}: {}", slice_name(key), e.what()));
      }
    }
    write_file_atomic(reports_dir(config) / "consistency.csv", consistency_table_csv(consistency));
    write_file_atomic(reports_dir(config) / "dispersion.csv", dispersion_csv(dispersion));

    std::vector<std::string> paid_areas;
    for (const auto* bf : aligned) paid_areas.push_back(bf->paid_area);
    const auto area_labels = encode_labels(paid_areas);
    std::map<SliceKey, std::vector<int>> gmm_labels;
    for (const auto& [key, sm] : models) gmm_labels.emplace(key, sm.model.assignments);

    const auto instances = instances_in(grid, config.fit_range);
    std::vector<SweepResult> sweeps;
    std::string summary = "mode,instances,significant,degenerate,zero_row_instances,percent_significant\n";
    for (const auto& text : config.weights) {
      auto [mode, knn_k] = parse_weight_mode(text);
      WeightsSpec spec;
      spec.mode = mode;
      spec.knn_k = knn_k;
      spec.area_labels = area_labels;
      spec.gmm_labels = gmm_labels;
      try {
        auto res = significance_sweep(grid, mids, spec, instances, config.significance);
        summary += fmt::format("{},{},{},{},{},{:.4f}\n", res.mode, res.rows.size(), res.significant_count(),
                               res.degenerate.size(), res.zero_row_instances, res.percent_significant());
        sweeps.push_back(std::move(res));
      } catch (const Error& e) {
        problems.push_back(fmt::format("sweep {}: {}", text, e.what()));
      }
    }
    write_file_atomic(reports_dir(config) / "moran_sweep.csv", sweep_to_csv(sweeps));
    write_file_atomic(reports_dir(config) / "moran_summary.csv", summary);

    std::string variance = "labels,mean_variance\n";
    try {
      const std::vector<int> none;
      LabelsAt gmm_at = [&](const HourStamp& s) -> std::span<const int> {
        auto it = gmm_labels.find({iso_weekday(s.date), s.hour});
        return it == gmm_labels.end() ? std::span<const int>(none) : std::span<const int>(it->second);
      };
      variance += fmt::format("gmm,{}\n", num(zone_variance(grid, gmm_at)));
    } catch (const Error& e) {
      problems.push_back(fmt::format("zone variance (gmm): {}", e.what()));
    }
    try {
      variance += fmt::format("paid_area,{}\n", num(zone_variance(grid, area_labels)));
    } catch (const Error& e) {
      problems.push_back(fmt::format("zone variance (paid_area): {}", e.what()));
    }
    write_file_atomic(reports_dir(config) / "zone_variance.csv", variance);

    if (config.seasons) {
      try {
        write_file_atomic(reports_dir(config) / "seasonal_delta.csv",
                          seasonal_delta_csv(seasonal_delta(grid, config.seasons->a, config.seasons->b)));
      } catch (const Error& e) {
        problems.push_back(fmt::format("seasonal delta: {}", e.what()));
      }
    }
    if (config.price_periods) {
      try {
        write_file_atomic(reports_dir(config) / "occupancy_diff.csv",
                          occupancy_diff_csv(occupancy_diff(grid, config.price_periods->a, config.price_periods->b,
                                                            paid_areas)));
      } catch (const Error& e) {
        problems.push_back(fmt::format("occupancy diff: {}", e.what()));
      }
    }

    std::string problem_text;
    for (const auto& p : problems) problem_text += p + "\n";
    write_file_atomic(reports_dir(config) / "problems.txt", problem_text);
    if (!problems.empty()) {
      log << problem_text;
      log << fmt::format("report: {} problem(s); see reports/problems.txt\n", problems.size());
      return kExitComputeError;
    }
    log << fmt::format("report: {} slices, {} sweeps\n", consistency.size(), sweeps.size());
    return kExitOk;
  });
}

int cmd_export_geojson(const RunConfig& config, std::ostream& log) {
  return guarded(log, "export-geojson", [&] {
    config.validate();
    auto grid = load_grid(config);
    auto blockfaces = load_blockfaces(config.blockfaces);
    auto aligned = align_blockfaces(grid, blockfaces);
    std::size_t written = 0;
    for (const auto& key : grid.slices()) {
      auto path = model_path(config, key);
      if (!fs::exists(path)) continue;
      auto sm = model_from_json(read_file(path));
      if (sm.block_ids != grid.block_ids()) {
        fail(ErrorKind::invalid_input, fmt::format("model {} block order differs from grid", slice_name(key)));
      }
      auto occupancy = slice_mean(grid, key, config.fit_range);
      nlohmann::ordered_json fc;
      fc["type"] = "FeatureCollection";
      fc["name"] = slice_name(key);
      auto features = nlohmann::ordered_json::array();
      for (std::size_t b = 0; b < aligned.size(); ++b) {
        const auto& bf = *aligned[b];
        nlohmann::ordered_json f;
        f["type"] = "Feature";
        f["geometry"] = {{"type", "LineString"},
                         {"coordinates", {{bf.end_a.lon, bf.end_a.lat}, {bf.end_b.lon, bf.end_b.lat}}}};
        f["properties"] = {{"block_id", bf.id},
                           {"label", sm.model.assignments.at(b)},
                           {"occupancy", occupancy[b]},
                           {"paid_area", bf.paid_area},
                           {"slice", slice_name(key)}};
        features.push_back(std::move(f));
      }
      fc["features"] = std::move(features);
      write_file_atomic(config.out / "geojson" / (slice_name(key) + ".geojson"), fc.dump(2) + "\n");
      ++written;
    }
    if (written == 0) fail(ErrorKind::invalid_input, "no fitted models found; run `parkzone fit` first");
    log << fmt::format("export-geojson: {} feature collections\n", written);
    return kExitOk;
  });
}

int cmd_synth(const RunConfig& config, std::ostream& log) {
  return guarded(log, "synth", [&] {
    SynthSpec spec = config.synth;
    spec.seed = config.seed;
    spec.schedule = config.schedule;
    auto data = generate(spec);
    write_file_atomic(config.out / "blockfaces.csv", blockfaces_to_csv(data.blockfaces));
    write_file_atomic(config.out / "transactions.csv", transactions_to_csv(data.transactions));
    write_file_atomic(config.out / "schedule.txt", data.schedule.to_text());
    std::string labels = "block_id,label\n";
    for (std::size_t b = 0; b < data.blockfaces.size(); ++b) {
      labels += fmt::format("{},{}\n", data.blockfaces[b].id, data.labels[b]);
    }
    write_file_atomic(config.out / "labels.csv", labels);
    nlohmann::ordered_json truth;
    truth["expected_clipped_cells"] = data.expected_clipped_cells;
    truth["expected_clipped_minutes"] = data.expected_clipped_minutes;
    truth["total_cells"] = data.expected.block_count() * data.expected.time_count();
    write_file_atomic(config.out / "synth_truth.json", truth.dump(2) + "\n");
    log << fmt::format("synth: {} block-faces, {} transactions\n", data.blockfaces.size(), data.transactions.size());
    return kExitOk;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Demand-homogeneous curbside parking zones from transaction data"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir, transactions, blockfaces, schedule, weights, sig;
  std::optional<int> k_min, k_max, permutations;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "Base random seed");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--k-min", k_min, "Smallest component count searched");
  app.add_option("--k-max", k_max, "Largest component count searched");
  app.add_option("--weights", weights, "Comma-separated weight modes, e.g. knn:5,gmm_connections");
  app.add_option("--sig", sig, "Significance method")->check(CLI::IsMember({"analytic", "permutation"}));
  app.add_option("--permutations", permutations, "Permutations for the permutation test");
  app.add_option("--transactions", transactions, "transactions.csv path");
  app.add_option("--blockfaces", blockfaces, "blockfaces.csv path");
  app.add_option("--schedule", schedule, "Paid schedule file");

  auto* ingest = app.add_subcommand("ingest", "Build the hourly occupancy grid");
  auto* fit = app.add_subcommand("fit", "Select k by mean BIC and fit one model per slice");
  auto* report = app.add_subcommand("report", "Consistency, Moran sweeps, variance and delta reports");
  auto* geojson = app.add_subcommand("export-geojson", "Write block-face zones as GeoJSON");
  auto* synth = app.add_subcommand("synth", "Generate a synthetic input set");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  RunConfig config;
  try {
    if (!config_path.empty()) config = load_config(config_path);
    if (seed) config.seed = *seed;
    if (!out_dir.empty()) config.out = out_dir;
    if (k_min) config.k_min = *k_min;
    if (k_max) config.k_max = *k_max;
    if (!weights.empty()) {
      config.weights.clear();
      std::stringstream ss(weights);
      for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) config.weights.push_back(item);
      }
    }
    if (!sig.empty()) {
      config.significance.method = sig == "analytic" ? SignificanceMethod::analytic : SignificanceMethod::permutation;
    }
    if (permutations) config.significance.permutations = *permutations;
    if (!transactions.empty()) config.transactions = transactions;
    if (!blockfaces.empty()) config.blockfaces = blockfaces;
    if (!schedule.empty()) {
      config.schedule_path = schedule;
      config.schedule = PaidSchedule::load(schedule);
    }
    config.significance.seed = config.seed;
    config.validate();
  } catch (const Error& e) {
    err << "parkzone: " << e.what() << '\n';
    return kExitInputError;
  }

  if (ingest->parsed()) return cmd_ingest(config, err);
  if (fit->parsed()) return cmd_fit(config, err);
  if (report->parsed()) return cmd_report(config, err);
  if (geojson->parsed()) return cmd_export_geojson(config, err);
  if (synth->parsed()) return cmd_synth(config, err);
  return kExitInputError;
}

}  // namespace parkzone::cli

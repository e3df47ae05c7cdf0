#include "parkzone/run_config.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include "parkzone/atomic_file.hpp"
#include "parkzone/error.hpp"

namespace parkzone::cli {
namespace {

using nlohmann::json;

DateRange parse_range(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) {
    fail(ErrorKind::invalid_config, fmt::format("'{}' must be a [first, last] date pair", what));
  }
  DateRange r{parse_date(j[0].get<std::string>()), parse_date(j[1].get<std::string>())};
  if (r.first > r.last) fail(ErrorKind::invalid_config, fmt::format("'{}' range is not well ordered", what));
  return r;
}

PeriodPair parse_pair(const json& j, const char* what) {
  if (!j.is_object() || !j.contains("a") || !j.contains("b")) {
    fail(ErrorKind::invalid_config, fmt::format("'{}' needs 'a' and 'b' date ranges", what));
  }
  return {parse_range(j["a"], what), parse_range(j["b"], what)};
}

LatLon parse_point(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

void parse_synth(const json& j, SynthSpec& s) {
  if (j.contains("n_blocks")) s.n_blocks = j["n_blocks"].get<int>();
  if (j.contains("bbox")) {
    s.bbox_min = parse_point(j["bbox"].at(0));
    s.bbox_max = parse_point(j["bbox"].at(1));
  }
  if (j.contains("clusters")) s.clusters = j["clusters"].get<int>();
  if (j.contains("layout")) {
    auto layout = j["layout"].get<std::string>();
    if (layout == "ring") {
      s.layout = ClusterLayout::ring;
    } else if (layout == "voronoi") {
      s.layout = ClusterLayout::voronoi;
    } else {
      fail(ErrorKind::invalid_config, fmt::format("unknown synth layout '{}'", layout));
    }
  }
  if (j.contains("cluster_std_deg")) s.cluster_std_deg = j["cluster_std_deg"].get<double>();
  if (j.contains("separation")) s.separation = j["separation"].get<double>();
  if (j.contains("base_occupancy")) s.base_occupancy = j["base_occupancy"].get<std::vector<double>>();
  if (j.contains("noise_std")) s.noise_std = j["noise_std"].get<double>();
  if (j.contains("block_std")) s.block_std = j["block_std"].get<double>();
  if (j.contains("identical_weeks")) s.identical_weeks = j["identical_weeks"].get<bool>();
  if (j.contains("weeks")) s.weeks = j["weeks"].get<int>();
  if (j.contains("start_date")) s.start_date = parse_date(j["start_date"].get<std::string>());
  if (j.contains("supply")) {
    s.supply_min = j["supply"].at(0).get<int>();
    s.supply_max = j["supply"].at(1).get<int>();
  }
  if (j.contains("overbook_probability")) s.overbook_probability = j["overbook_probability"].get<double>();
}

}  // namespace

void RunConfig::validate() const {
  if (k_min < 1 || k_max > 50 || k_min > k_max) {
    fail(ErrorKind::invalid_config, fmt::format("k range [{}, {}] must lie within [1, 50] and be non-empty", k_min, k_max));
  }
  if (em.restarts < 1 || em.max_iter < 1 || !(em.epsilon >= 0.0)) {
    fail(ErrorKind::invalid_config, "em needs restarts >= 1, max_iter >= 1 and epsilon >= 0");
  }
  for (const auto& w : weights) parse_weight_mode(w);
  if (significance.method == SignificanceMethod::permutation && significance.permutations < 100) {
    fail(ErrorKind::invalid_config, "permutation test needs at least 100 permutations");
  }
  schedule.validate();
}

EmConfig RunConfig::em_config() const {
  EmConfig e = em;
  e.seed = seed;
  return e;
}

RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  RunConfig c;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  try {
    auto j = json::parse(json_text);
    if (!j.is_object()) fail(ErrorKind::invalid_config, "config must be a JSON object");
    if (j.contains("transactions")) c.transactions = resolve(j["transactions"].get<std::string>());
    if (j.contains("blockfaces")) c.blockfaces = resolve(j["blockfaces"].get<std::string>());
    if (j.contains("schedule")) {
      c.schedule_path = resolve(j["schedule"].get<std::string>());
      c.schedule = PaidSchedule::load(c.schedule_path->string());
    }
    if (j.contains("out")) c.out = resolve(j["out"].get<std::string>());
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("k_min")) c.k_min = j["k_min"].get<int>();
    if (j.contains("k_max")) c.k_max = j["k_max"].get<int>();
    if (j.contains("em")) {
      const auto& em = j["em"];
      if (em.contains("epsilon")) c.em.epsilon = em["epsilon"].get<double>();
      if (em.contains("max_iter")) c.em.max_iter = em["max_iter"].get<int>();
      if (em.contains("restarts")) c.em.restarts = em["restarts"].get<int>();
    }
    if (j.contains("weights")) c.weights = j["weights"].get<std::vector<std::string>>();
    if (j.contains("significance")) {
      auto m = j["significance"].get<std::string>();
      if (m == "analytic") {
        c.significance.method = SignificanceMethod::analytic;
      } else if (m == "permutation") {
        c.significance.method = SignificanceMethod::permutation;
      } else {
        fail(ErrorKind::invalid_config, fmt::format("unknown significance method '{}'", m));
      }
    }
    if (j.contains("permutations")) c.significance.permutations = j["permutations"].get<int>();
    if (j.contains("fit_range")) c.fit_range = parse_range(j["fit_range"], "fit_range");
    if (j.contains("seasons")) c.seasons = parse_pair(j["seasons"], "seasons");
    if (j.contains("price_periods")) c.price_periods = parse_pair(j["price_periods"], "price_periods");
    if (j.contains("synth")) parse_synth(j["synth"], c.synth);
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_config, fmt::format("config: {}", e.what()));
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return parse_config(read_file(path), base);
}

}  // namespace parkzone::cli

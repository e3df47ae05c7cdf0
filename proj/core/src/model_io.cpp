#include "parkzone/model_io.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include "parkzone/error.hpp"

namespace parkzone {
namespace {

std::string number(double v) { return fmt::format("{:.17g}", v); }

std::string row(const FeatureRow& r) { return fmt::format("[{}, {}, {}]", number(r[0]), number(r[1]), number(r[2])); }

std::string json_string(std::string_view s) { return nlohmann::json(std::string(s)).dump(); }

FeatureRow read_row(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != kFeatureDims) fail(ErrorKind::parse, "model row must have 3 entries");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

std::string model_to_json(const SliceModel& sm) {
  const auto& m = sm.model;
  std::string out = "{\n";
  if (sm.slice) {
    out += fmt::format("  \"slice\": {{\"day\": \"{}\", \"hour\": {}}},\n", weekday_name(sm.slice->weekday),
                       sm.slice->hour);
  }
  out += fmt::format("  \"k\": {},\n", m.k);
  out += fmt::format("  \"seed\": {},\n", m.seed);
  out += fmt::format("  \"log_likelihood\": {},\n", number(m.log_likelihood));
  out += "  \"weights\": [";
  for (std::size_t j = 0; j < m.weights.size(); ++j) out += (j ? ", " : "") + number(m.weights[j]);
  out += "],\n  \"means\": [";
  for (std::size_t j = 0; j < m.means.size(); ++j) out += (j ? ", " : "") + row(m.means[j]);
  out += "],\n  \"variances\": [";
  for (std::size_t j = 0; j < m.variances.size(); ++j) out += (j ? ", " : "") + row(m.variances[j]);
  out += "],\n";
  out += fmt::format("  \"norm_params\": {{\"min\": {}, \"max\": {}}},\n", row(m.norm.min), row(m.norm.max));
  out += "  \"block_ids\": [";
  for (std::size_t i = 0; i < sm.block_ids.size(); ++i) out += (i ? ", " : "") + json_string(sm.block_ids[i]);
  out += "],\n  \"assignments\": [";
  for (std::size_t i = 0; i < m.assignments.size(); ++i) out += fmt::format("{}{}", i ? ", " : "", m.assignments[i]);
  out += "]\n}\n";
  return out;
}

SliceModel model_from_json(std::string_view text) {
  SliceModel sm;
  try {
    auto j = nlohmann::json::parse(text);
    if (j.contains("slice")) {
      sm.slice = SliceKey{parse_weekday(j["slice"]["day"].get<std::string>()), j["slice"]["hour"].get<int>()};
    }
    auto& m = sm.model;
    m.k = j.at("k").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.log_likelihood = j.at("log_likelihood").get<double>();
    m.weights = j.at("weights").get<std::vector<double>>();
    for (const auto& r : j.at("means")) m.means.push_back(read_row(r));
    for (const auto& r : j.at("variances")) m.variances.push_back(read_row(r));
    m.norm.min = read_row(j.at("norm_params").at("min"));
    m.norm.max = read_row(j.at("norm_params").at("max"));
    sm.block_ids = j.at("block_ids").get<std::vector<std::string>>();
    m.assignments = j.at("assignments").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, fmt::format("model JSON: {}", e.what()));
  }
  sm.model.validate();
  if (!sm.model.assignments.empty() && sm.model.assignments.size() != sm.block_ids.size()) {
    fail(ErrorKind::parse, "model JSON: assignments and block_ids differ in length");
  }
  return sm;
}

}  // namespace parkzone

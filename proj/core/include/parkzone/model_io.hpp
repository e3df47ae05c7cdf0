#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parkzone/civil_time.hpp"
#include "parkzone/mixture.hpp"

namespace parkzone {

/// A fitted model together with the slice and block order it belongs to.
struct SliceModel {
  std::optional<SliceKey> slice;
  std::vector<std::string> block_ids;
  ZoneModel model;
};

/// JSON with every real written to 17 significant digits so that reading it
/// back reproduces the model bit for bit.
std::string model_to_json(const SliceModel& model);
SliceModel model_from_json(std::string_view text);

}  // namespace parkzone

#pragma once

#include <filesystem>
#include <string_view>

namespace parkzone {

/// Writes `contents` to a sibling temporary file and renames it over `path`,
/// creating parent directories as needed.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace parkzone

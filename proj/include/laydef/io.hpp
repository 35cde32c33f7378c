#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace laydef {

// Current time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

/// Throws NotFoundError when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over path.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Parses a whole JSON file; errors become ParseError.
nlohmann::ordered_json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& j);

}  // namespace laydef

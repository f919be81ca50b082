#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace cellseg {

/// Writes to `<path>.tmp` then renames over `path`. Creates parent directories.
/// Throws IoFailure.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j);

std::vector<std::byte> read_binary(const std::filesystem::path& path);  // throws IoFailure
std::string read_text(const std::filesystem::path& path);               // throws IoFailure
nlohmann::json read_json(const std::filesystem::path& path);  // throws IoFailure / ParseError

}  // namespace cellseg

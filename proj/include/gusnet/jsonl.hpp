#pragma once

#include <filesystem>
#include <vector>

#include "json.hpp"

namespace gusnet {

// Blank lines are skipped. Throws ConfigError with the line number on a
// parse failure.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace gusnet

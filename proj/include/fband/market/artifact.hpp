#pragma once

// JSON persistence of per-day band artifacts (schema version 1).

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fband/market/backtest.hpp"

namespace fband::market {

nlohmann::json artifact_to_json(const DayArtifact& artifact);
/// Throws ParseError naming the offending field.
DayArtifact artifact_from_json(const nlohmann::json& j);

/// Writes <dir>/<YYYY-MM-DD>.json for every artifact. index.json is reserved
/// for the directory summary and skipped when reading.
void write_artifacts(const std::filesystem::path& dir, const std::vector<DayArtifact>& artifacts,
                     const std::string& config_hash = "");
DayArtifact read_artifact(const std::filesystem::path& path);
std::vector<DayArtifact> read_artifact_dir(const std::filesystem::path& dir);

}  // namespace fband::market

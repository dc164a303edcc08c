#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "shortmr/curation.hpp"
#include "shortmr/rankstats.hpp"
#include "shortmr/training.hpp"

namespace shortmr::io {

// JSON report builders. Serialization is deterministic (nlohmann orders keys
// lexicographically), so identical runs produce byte-identical files.
// Undefined metrics serialize as null. The schemas under schemas/ document
// the shapes; validate_* enforce them on every emitted report.

nlohmann::json eval_to_json(const EvalReport& rep);
nlohmann::json delta_to_json(const DeltaReport& rep);
nlohmann::json audit_to_json(const AuditReport& rep);
nlohmann::json composition_to_json(const CompositionTable& table);
nlohmann::json rank_report_to_json(const RankReport& rep,
                                   const std::vector<std::string>& region_names);
nlohmann::json stability_to_json(
    const std::map<std::string, std::vector<std::pair<int, double>>>& curves);

void validate_eval_json(const nlohmann::json& j);
void validate_delta_json(const nlohmann::json& j);
void validate_audit_json(const nlohmann::json& j);
void validate_rank_report_json(const nlohmann::json& j);
void validate_stability_json(const nlohmann::json& j);

// dump(2) plus a trailing newline, parents created; write is atomic enough
// for single-writer run directories.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace shortmr::io

#pragma once

// JudgmentTable persistence.
//
// JSONL: an optional header line {"format":"probcoh.judgments/1","catalog":[...]}
// followed by one Judgment object per line. Files without a header are read
// against a caller-supplied catalog.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "probcoh/model.hpp"

namespace probcoh {

inline constexpr std::string_view kJudgmentFormat = "probcoh.judgments/1";

nlohmann::ordered_json judgment_to_json(const Judgment& j);
// Throws ValidationError naming the offending field.
Judgment judgment_from_json(const nlohmann::json& obj);

std::string table_to_jsonl(const JudgmentTable& table, bool with_catalog_header = true);
// Errors carry "line N:" context. fallback_catalog is used when the text
// has no header line.
JudgmentTable table_from_jsonl(std::string_view text, const std::vector<EventPair>& fallback_catalog);

void save_table(const std::filesystem::path& path, const JudgmentTable& table);
JudgmentTable load_table(const std::filesystem::path& path, const std::vector<EventPair>& fallback_catalog);

// Columns: pair_id,query,value,rep_index,temperature,source,agent_or_model
std::string table_to_csv(const JudgmentTable& table);

// Shortest round-trip decimal for a double (same rendering as the JSON writer).
std::string format_number(double x);

} // namespace probcoh

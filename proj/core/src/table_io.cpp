#include "probcoh/table_io.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "probcoh/csv.hpp"
#include "probcoh/error.hpp"
#include "probcoh/io.hpp"

namespace probcoh {

namespace {

const nlohmann::json& require(const nlohmann::json& obj, const char* field) {
    auto it = obj.find(field);
    if (it == obj.end()) throw ValidationError(fmt::format("missing field '{}'", field));
    return *it;
}

double require_number(const nlohmann::json& obj, const char* field) {
    const auto& v = require(obj, field);
    if (!v.is_number()) throw ValidationError(fmt::format("field '{}' is not a number", field));
    return v.get<double>();
}

std::string require_string(const nlohmann::json& obj, const char* field) {
    const auto& v = require(obj, field);
    if (!v.is_string()) throw ValidationError(fmt::format("field '{}' is not a string", field));
    return v.get<std::string>();
}

std::optional<std::string> optional_string(const nlohmann::json& obj, const char* field) {
    auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ValidationError(fmt::format("field '{}' is not a string", field));
    return it->get<std::string>();
}

} // namespace

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return nlohmann::json(x).dump();
}

nlohmann::ordered_json judgment_to_json(const Judgment& j) {
    nlohmann::ordered_json obj;
    obj["pair_id"] = j.pair_id;
    obj["query"] = std::string(to_string(j.query));
    obj["value"] = j.value;
    obj["rep_index"] = j.rep_index;
    obj["condition"] = {
        {"temperature", j.condition.temperature},
        {"source", std::string(to_string(j.condition.source))},
        {"agent_or_model", j.condition.agent_or_model},
    };
    if (j.raw_text) obj["raw_text"] = *j.raw_text;
    if (j.timestamp) obj["timestamp"] = *j.timestamp;
    return obj;
}

Judgment judgment_from_json(const nlohmann::json& obj) {
    if (!obj.is_object()) throw ValidationError("judgment is not a JSON object");
    Judgment j;
    j.pair_id = require_string(obj, "pair_id");
    j.query = parse_query(require_string(obj, "query"));
    j.value = require_number(obj, "value");
    const auto& rep = require(obj, "rep_index");
    if (!rep.is_number_unsigned()) throw ValidationError("field 'rep_index' is not a nonnegative integer");
    j.rep_index = rep.get<std::uint32_t>();
    const auto& cond = require(obj, "condition");
    if (!cond.is_object()) throw ValidationError("field 'condition' is not an object");
    j.condition.temperature = require_number(cond, "temperature");
    if (!(j.condition.temperature >= 0.0)) throw ValidationError("temperature must be nonnegative");
    j.condition.source = parse_source(require_string(cond, "source"));
    j.condition.agent_or_model = require_string(cond, "agent_or_model");
    j.raw_text = optional_string(obj, "raw_text");
    j.timestamp = optional_string(obj, "timestamp");
    return j;
}

std::string table_to_jsonl(const JudgmentTable& table, bool with_catalog_header) {
    std::string out;
    if (with_catalog_header) {
        nlohmann::ordered_json header;
        header["format"] = std::string(kJudgmentFormat);
        header["catalog"] = nlohmann::ordered_json::array();
        for (const auto& p : table.catalog()) {
            header["catalog"].push_back({{"id", p.id},
                                         {"category", std::string(to_string(p.category))},
                                         {"text_a", p.text_a},
                                         {"text_b", p.text_b}});
        }
        out += header.dump();
        out += '\n';
    }
    for (const auto& j : table.judgments()) {
        out += judgment_to_json(j).dump();
        out += '\n';
    }
    return out;
}

JudgmentTable table_from_jsonl(std::string_view text, const std::vector<EventPair>& fallback_catalog) {
    std::vector<Judgment> judgments;
    std::optional<std::vector<EventPair>> catalog;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        try {
            const auto obj = nlohmann::json::parse(line);
            if (obj.is_object() && obj.contains("format")) {
                if (line_no != 1 && !judgments.empty()) {
                    throw ValidationError("header line must precede judgments");
                }
                if (obj["format"] != kJudgmentFormat) {
                    throw ValidationError(fmt::format("unsupported format {}", obj["format"].dump()));
                }
                std::vector<EventPair> pairs;
                for (const auto& p : obj.at("catalog")) {
                    pairs.push_back({require_string(p, "id"), parse_category(require_string(p, "category")),
                                     require_string(p, "text_a"), require_string(p, "text_b")});
                }
                catalog = std::move(pairs);
                continue;
            }
            judgments.push_back(judgment_from_json(obj));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(fmt::format("line {}: malformed JSON: {}", line_no, e.what()));
        } catch (const ValidationError& e) {
            throw ValidationError(fmt::format("line {}: {}", line_no, e.what()));
        }
    }
    return {catalog ? std::move(*catalog) : fallback_catalog, std::move(judgments)};
}

void save_table(const std::filesystem::path& path, const JudgmentTable& table) {
    io::write_file(path, table_to_jsonl(table));
}

JudgmentTable load_table(const std::filesystem::path& path, const std::vector<EventPair>& fallback_catalog) {
    const std::string text = io::read_file(path);
    try {
        return table_from_jsonl(text, fallback_catalog);
    } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("{}:{}", path.string(), e.what()));
    }
}

std::string table_to_csv(const JudgmentTable& table) {
    std::string out = "pair_id,query,value,rep_index,temperature,source,agent_or_model\n";
    for (const auto& j : table.judgments()) {
        out += csv::join({j.pair_id, std::string(to_string(j.query)), format_number(j.value),
                          std::to_string(j.rep_index), format_number(j.condition.temperature),
                          std::string(to_string(j.condition.source)), j.condition.agent_or_model});
        out += '\n';
    }
    return out;
}

} // namespace probcoh

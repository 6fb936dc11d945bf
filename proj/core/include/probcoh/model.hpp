#pragma once

// Shared domain types: event pairs, the six query forms, coherent atomic
// distributions and judgment records.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "probcoh/random.hpp"

namespace probcoh {

enum class Category : std::uint8_t { weather, politics };

std::string_view to_string(Category c) noexcept;
Category parse_category(std::string_view s);

struct EventPair {
    std::string id;
    Category category = Category::weather;
    std::string text_a;
    std::string text_b;

    bool operator==(const EventPair&) const = default;
};

// The six queried events, in their fixed serialization order.
enum class QueryKind : std::uint8_t { A, B, AandB, AandNotB, BandNotA, AorB };

inline constexpr std::array<QueryKind, 6> kAllQueries = {
    QueryKind::A,        QueryKind::B,        QueryKind::AandB,
    QueryKind::AandNotB, QueryKind::BandNotA, QueryKind::AorB,
};

std::string_view to_string(QueryKind q) noexcept;
// Throws ValidationError for unknown names.
QueryKind parse_query(std::string_view s);
constexpr std::size_t index_of(QueryKind q) noexcept { return static_cast<std::size_t>(q); }

inline constexpr double kSimplexTolerance = 1e-12;

// Probabilities of the atoms A&B, A&~B, ~A&B, ~A&~B.
class AtomicDistribution {
public:
    // Throws ValidationError unless the four values are nonnegative and sum to 1.
    AtomicDistribution(double p_ab, double p_anb, double p_nab, double p_nanb);

    static AtomicDistribution uniform() { return {0.25, 0.25, 0.25, 0.25}; }

    double p_ab() const noexcept { return p_[0]; }
    double p_anb() const noexcept { return p_[1]; }
    double p_nab() const noexcept { return p_[2]; }
    double p_nanb() const noexcept { return p_[3]; }
    const std::array<double, 4>& atoms() const noexcept { return p_; }

    bool operator==(const AtomicDistribution&) const = default;

private:
    std::array<double, 4> p_;
};

double event_probability(const AtomicDistribution& dist, QueryKind q) noexcept;

// Symmetric Dirichlet(concentration) draw over the four atoms.
AtomicDistribution random_coherent_distribution(StreamRng& rng, double concentration = 1.0);

enum class Source : std::uint8_t { live, replay, simulated };

std::string_view to_string(Source s) noexcept;
Source parse_source(std::string_view s);

struct Condition {
    double temperature = 1.0;  // compared exactly; this is configuration
    Source source = Source::simulated;
    std::string agent_or_model;

    bool operator==(const Condition&) const = default;
    auto operator<=>(const Condition&) const = default;
};

// Short human-readable label, e.g. "gpt-4@T1/live".
std::string condition_label(const Condition& c);

struct Judgment {
    std::string pair_id;
    QueryKind query = QueryKind::A;
    double value = 0.0;
    std::uint32_t rep_index = 0;
    Condition condition;
    std::optional<std::string> raw_text;
    std::optional<std::string> timestamp;  // ISO-8601 UTC, e.g. 2025-01-01T00:00:00Z

    bool operator==(const Judgment&) const = default;
};

// A collection of judgments together with the catalog they refer to. The
// table itself does not enforce completeness or key uniqueness; use
// validate_table to audit those.
class JudgmentTable {
public:
    JudgmentTable() = default;
    JudgmentTable(std::vector<EventPair> catalog, std::vector<Judgment> judgments);

    const std::vector<EventPair>& catalog() const noexcept { return catalog_; }
    const std::vector<Judgment>& judgments() const noexcept { return judgments_; }
    bool empty() const noexcept { return judgments_.empty(); }
    std::size_t size() const noexcept { return judgments_.size(); }

    const EventPair* find_pair(std::string_view id) const noexcept;
    // Distinct conditions in first-appearance order.
    std::vector<Condition> conditions() const;
    // Judgments with the given condition; catalog is kept.
    JudgmentTable filter(const Condition& c) const;

    bool operator==(const JudgmentTable&) const = default;

private:
    std::vector<EventPair> catalog_;
    std::vector<Judgment> judgments_;
};

struct TableDesign {
    std::vector<QueryKind> queries{kAllQueries.begin(), kAllQueries.end()};
    // Fixed repetition count, or infer per condition as max(rep_index) + 1.
    std::optional<std::uint32_t> reps;
};

struct CellKey {
    std::string pair_id;
    QueryKind query = QueryKind::A;
    std::uint32_t rep_index = 0;
    std::string condition;  // condition_label

    bool operator==(const CellKey&) const = default;
};

struct ValidationReport {
    std::vector<CellKey> missing;
    std::vector<CellKey> duplicates;
    std::vector<CellKey> out_of_range;      // value outside [0,1] or non-finite
    std::vector<CellKey> rep_out_of_range;  // rep_index >= design reps
    std::vector<std::string> unknown_pairs;

    bool complete() const noexcept {
        return missing.empty() && duplicates.empty() && out_of_range.empty() &&
               rep_out_of_range.empty() && unknown_pairs.empty();
    }
    // "complete" or one line per problem.
    std::string summary() const;
};

ValidationReport validate_table(const JudgmentTable& table, const TableDesign& design = {});

} // namespace probcoh

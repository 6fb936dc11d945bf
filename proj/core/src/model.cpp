#include "probcoh/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "probcoh/error.hpp"

namespace probcoh {

std::string_view to_string(Category c) noexcept {
    switch (c) {
    case Category::weather: return "weather";
    case Category::politics: return "politics";
    }
    return "?";
}

Category parse_category(std::string_view s) {
    if (s == "weather") return Category::weather;
    if (s == "politics") return Category::politics;
    throw ValidationError(fmt::format("unknown category '{}'", s));
}

std::string_view to_string(QueryKind q) noexcept {
    switch (q) {
    case QueryKind::A: return "A";
    case QueryKind::B: return "B";
    case QueryKind::AandB: return "AandB";
    case QueryKind::AandNotB: return "AandNotB";
    case QueryKind::BandNotA: return "BandNotA";
    case QueryKind::AorB: return "AorB";
    }
    return "?";
}

QueryKind parse_query(std::string_view s) {
    for (QueryKind q : kAllQueries) {
        if (to_string(q) == s) return q;
    }
    throw ValidationError(fmt::format("unknown query kind '{}'", s));
}

std::string_view to_string(Source s) noexcept {
    switch (s) {
    case Source::live: return "live";
    case Source::replay: return "replay";
    case Source::simulated: return "simulated";
    }
    return "?";
}

Source parse_source(std::string_view s) {
    if (s == "live") return Source::live;
    if (s == "replay") return Source::replay;
    if (s == "simulated") return Source::simulated;
    throw ValidationError(fmt::format("unknown source '{}'", s));
}

AtomicDistribution::AtomicDistribution(double p_ab, double p_anb, double p_nab, double p_nanb)
    : p_{p_ab, p_anb, p_nab, p_nanb} {
    double sum = 0.0;
    for (double p : p_) {
        if (!std::isfinite(p) || p < 0.0) {
            throw ValidationError(fmt::format("atom probability {} is not a nonnegative number", p));
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
        throw ValidationError(fmt::format("atom probabilities sum to {}, expected 1", sum));
    }
}

double event_probability(const AtomicDistribution& d, QueryKind q) noexcept {
    double p = 0.0;
    switch (q) {
    case QueryKind::A: p = d.p_ab() + d.p_anb(); break;
    case QueryKind::B: p = d.p_ab() + d.p_nab(); break;
    case QueryKind::AandB: p = d.p_ab(); break;
    case QueryKind::AandNotB: p = d.p_anb(); break;
    case QueryKind::BandNotA: p = d.p_nab(); break;
    // Sum of the three atoms rather than 1 - p_nanb, so that identities such
    // as P(A) + P(B&~A) - P(A|B) cancel exactly in floating point.
    case QueryKind::AorB: p = d.p_ab() + d.p_anb() + d.p_nab(); break;
    }
    return std::clamp(p, 0.0, 1.0);
}

AtomicDistribution random_coherent_distribution(StreamRng& rng, double concentration) {
    if (!(concentration > 0.0) || !std::isfinite(concentration)) {
        throw ValidationError(fmt::format("concentration must be positive, got {}", concentration));
    }
    std::array<double, 4> g{};
    double total = 0.0;
    do {
        total = 0.0;
        for (double& x : g) {
            x = rng.gamma(concentration);
            total += x;
        }
    } while (!(total > 0.0));
    for (double& x : g) x /= total;
    // Put the rounding residue on the largest atom so the sum is 1 to within an ulp.
    const auto largest = std::max_element(g.begin(), g.end());
    double rest = 0.0;
    for (auto it = g.begin(); it != g.end(); ++it) {
        if (it != largest) rest += *it;
    }
    *largest = std::max(0.0, 1.0 - rest);
    return {g[0], g[1], g[2], g[3]};
}

std::string condition_label(const Condition& c) {
    const std::string who = c.agent_or_model.empty() ? std::string("unnamed") : c.agent_or_model;
    return fmt::format("{}@T{}/{}", who, c.temperature, to_string(c.source));
}

JudgmentTable::JudgmentTable(std::vector<EventPair> catalog, std::vector<Judgment> judgments)
    : catalog_(std::move(catalog)), judgments_(std::move(judgments)) {}

const EventPair* JudgmentTable::find_pair(std::string_view id) const noexcept {
    for (const auto& p : catalog_) {
        if (p.id == id) return &p;
    }
    return nullptr;
}

std::vector<Condition> JudgmentTable::conditions() const {
    std::vector<Condition> out;
    for (const auto& j : judgments_) {
        if (std::find(out.begin(), out.end(), j.condition) == out.end()) {
            out.push_back(j.condition);
        }
    }
    return out;
}

JudgmentTable JudgmentTable::filter(const Condition& c) const {
    std::vector<Judgment> kept;
    std::copy_if(judgments_.begin(), judgments_.end(), std::back_inserter(kept),
                 [&](const Judgment& j) { return j.condition == c; });
    return {catalog_, std::move(kept)};
}

std::string ValidationReport::summary() const {
    if (complete()) return "complete";
    std::string out;
    auto cell = [](const CellKey& k) {
        return fmt::format("pair={} query={} rep={} condition={}", k.pair_id, to_string(k.query),
                           k.rep_index, k.condition);
    };
    for (const auto& id : unknown_pairs) out += fmt::format("unknown pair: {}\n", id);
    for (const auto& k : missing) out += "missing: " + cell(k) + "\n";
    for (const auto& k : duplicates) out += "duplicate: " + cell(k) + "\n";
    for (const auto& k : out_of_range) out += "value out of range: " + cell(k) + "\n";
    for (const auto& k : rep_out_of_range) out += "rep out of range: " + cell(k) + "\n";
    return out;
}

ValidationReport validate_table(const JudgmentTable& table, const TableDesign& design) {
    ValidationReport report;
    using Key = std::tuple<std::string, std::size_t, std::uint32_t>;

    std::set<std::string> unknown;
    std::vector<Condition> conditions = table.conditions();
    if (conditions.empty()) conditions.push_back(Condition{});

    for (const Condition& cond : conditions) {
        const std::string label = condition_label(cond);
        std::map<Key, int> seen;
        std::uint32_t max_rep = 0;
        bool any = false;
        for (const auto& j : table.judgments()) {
            if (!(j.condition == cond)) continue;
            any = true;
            max_rep = std::max(max_rep, j.rep_index);
            CellKey key{j.pair_id, j.query, j.rep_index, label};
            if (table.find_pair(j.pair_id) == nullptr) unknown.insert(j.pair_id);
            if (!std::isfinite(j.value) || j.value < 0.0 || j.value > 1.0) {
                report.out_of_range.push_back(key);
            }
            if (design.reps && j.rep_index >= *design.reps) {
                report.rep_out_of_range.push_back(key);
            }
            if (++seen[{j.pair_id, index_of(j.query), j.rep_index}] == 2) {
                report.duplicates.push_back(std::move(key));
            }
        }
        const std::uint32_t reps = design.reps ? *design.reps : (any ? max_rep + 1 : 1);
        for (const auto& pair : table.catalog()) {
            for (QueryKind q : design.queries) {
                for (std::uint32_t r = 0; r < reps; ++r) {
                    if (!seen.contains({pair.id, index_of(q), r})) {
                        report.missing.push_back({pair.id, q, r, label});
                    }
                }
            }
        }
    }
    report.unknown_pairs.assign(unknown.begin(), unknown.end());
    return report;
}

} // namespace probcoh

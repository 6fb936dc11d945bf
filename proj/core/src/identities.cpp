#include "probcoh/identities.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "probcoh/csv.hpp"
#include "probcoh/error.hpp"
#include "probcoh/io.hpp"
#include "probcoh/stats.hpp"
#include "probcoh/table_io.hpp"

namespace probcoh {

IdentityDefinition::IdentityDefinition(std::string name, std::vector<IdentityTerm> terms)
    : name_(std::move(name)), terms_(std::move(terms)) {
    if (name_.empty()) throw ValidationError("identity with empty name");
    if (terms_.size() < 2) {
        throw ValidationError(fmt::format("identity {} needs at least two terms", name_));
    }
    std::set<QueryKind> seen;
    for (const auto& t : terms_) {
        if (t.coefficient == 0) {
            throw ValidationError(fmt::format("identity {} has a zero coefficient", name_));
        }
        if (!seen.insert(t.query).second) {
            throw ValidationError(
                fmt::format("identity {} uses query {} more than once", name_, to_string(t.query)));
        }
    }
}

const std::vector<IdentityDefinition>& builtin_identities() {
    using Q = QueryKind;
    static const std::vector<IdentityDefinition> defs = [] {
        std::vector<IdentityDefinition> out = {
            {"Z1", {{1, Q::A}, {1, Q::B}, {-1, Q::AandB}, {-1, Q::AorB}}},
            {"Z2", {{1, Q::A}, {1, Q::BandNotA}, {-1, Q::B}, {-1, Q::AandNotB}}},
            {"Z3", {{1, Q::A}, {1, Q::BandNotA}, {-1, Q::AorB}}},
            {"Z4", {{1, Q::B}, {1, Q::AandNotB}, {-1, Q::AorB}}},
            {"Z5", {{1, Q::AandB}, {1, Q::AandNotB}, {-1, Q::A}}},
            {"Z6", {{1, Q::AandB}, {1, Q::BandNotA}, {-1, Q::B}}},
            {"Z7", {{1, Q::AandNotB}, {1, Q::BandNotA}, {1, Q::AandB}, {-1, Q::AorB}}},
            {"Z8", {{1, Q::AandNotB}, {1, Q::BandNotA}, {2, Q::AandB}, {-1, Q::A}, {-1, Q::B}}},
        };
        for (const auto& d : out) check_zero_under_coherence(d);
        return out;
    }();
    return defs;
}

void check_zero_under_coherence(const IdentityDefinition& def, std::size_t samples, double tolerance) {
    StreamRng rng = StreamKey(0x5eed).add("coherence-check").rng();
    for (std::size_t i = 0; i < samples; ++i) {
        const AtomicDistribution dist = random_coherent_distribution(rng, 1.0);
        QueryValues v;
        for (QueryKind q : kAllQueries) v[index_of(q)] = event_probability(dist, q);
        const double z = evaluate_identity(def, v);
        if (!(std::abs(z) <= tolerance)) {
            throw ValidationError(fmt::format(
                "identity {} is not zero under coherence: evaluates to {} on atoms ({}, {}, {}, {})",
                def.name(), z, dist.p_ab(), dist.p_anb(), dist.p_nab(), dist.p_nanb()));
        }
    }
}

namespace {

int parse_coefficient(const std::string& s) {
    std::size_t used = 0;
    int value = 0;
    try {
        value = std::stoi(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) {
        throw ValidationError(fmt::format("coefficient '{}' is not an integer", s));
    }
    return value;
}

} // namespace

std::vector<IdentityDefinition> parse_identities_csv(std::string_view text) {
    std::vector<IdentityDefinition> out;
    for (const auto& row : csv::parse(text)) {
        const auto& f = row.fields;
        if (!f.empty() && f[0] == "name") continue;
        try {
            if (f.size() < 3 || (f.size() - 1) % 2 != 0) {
                throw ValidationError("expected name followed by (coefficient, query) pairs");
            }
            std::vector<IdentityTerm> terms;
            for (std::size_t i = 1; i + 1 < f.size(); i += 2) {
                terms.push_back({parse_coefficient(f[i]), parse_query(f[i + 1])});
            }
            out.emplace_back(f[0], std::move(terms));
        } catch (const ValidationError& e) {
            throw ValidationError(fmt::format("line {}: {}", row.line, e.what()));
        }
    }
    if (out.empty()) throw ValidationError("no identity definitions found");
    return out;
}

std::vector<IdentityDefinition> parse_identities_json(std::string_view text) {
    std::vector<IdentityDefinition> out;
    try {
        const auto doc = nlohmann::json::parse(text);
        if (!doc.is_array()) throw ValidationError("identity file must hold a JSON array");
        for (const auto& item : doc) {
            std::vector<IdentityTerm> terms;
            for (const auto& t : item.at("terms")) {
                if (!t.at("coefficient").is_number_integer()) {
                    throw ValidationError("coefficient must be an integer");
                }
                terms.push_back({t.at("coefficient").get<int>(), parse_query(t.at("query").get<std::string>())});
            }
            out.emplace_back(item.at("name").get<std::string>(), std::move(terms));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(fmt::format("malformed identity JSON: {}", e.what()));
    }
    if (out.empty()) throw ValidationError("no identity definitions found");
    return out;
}

std::vector<IdentityDefinition> load_identities(const std::filesystem::path& path) {
    const std::string text = io::read_file(path);
    try {
        auto defs = path.extension() == ".json" ? parse_identities_json(text) : parse_identities_csv(text);
        std::set<std::string> names;
        for (const auto& d : defs) {
            if (!names.insert(d.name()).second) {
                throw ValidationError(fmt::format("duplicate identity name {}", d.name()));
            }
            check_zero_under_coherence(d);
        }
        return defs;
    } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

std::string identities_to_csv(const std::vector<IdentityDefinition>& defs) {
    std::string out;
    for (const auto& d : defs) {
        csv::Row row{d.name()};
        for (const auto& t : d.terms()) {
            row.push_back(std::to_string(t.coefficient));
            row.emplace_back(to_string(t.query));
        }
        out += csv::join(row) + "\n";
    }
    return out;
}

nlohmann::ordered_json identities_to_json(const std::vector<IdentityDefinition>& defs) {
    auto out = nlohmann::ordered_json::array();
    for (const auto& d : defs) {
        nlohmann::ordered_json item;
        item["name"] = d.name();
        item["k"] = imbalance(d);
        item["terms"] = nlohmann::ordered_json::array();
        for (const auto& t : d.terms()) {
            item["terms"].push_back({{"coefficient", t.coefficient}, {"query", std::string(to_string(t.query))}});
        }
        out.push_back(std::move(item));
    }
    return out;
}

QueryValues make_query_values(double a, double b, double a_and_b, double a_and_not_b,
                              double b_and_not_a, double a_or_b) {
    return {a, b, a_and_b, a_and_not_b, b_and_not_a, a_or_b};
}

double evaluate_identity(const IdentityDefinition& def, const QueryValues& values) {
    double z = 0.0;
    for (const auto& t : def.terms()) {
        const auto& v = values[index_of(t.query)];
        if (!v) {
            throw MissingJudgmentError("", std::string(to_string(t.query)), -1,
                                       fmt::format("identity {} needs a judgment for query {}", def.name(),
                                                   to_string(t.query)));
        }
        z += static_cast<double>(t.coefficient) * *v;
    }
    return z;
}

int imbalance(const IdentityDefinition& def) noexcept {
    int k = 0;
    for (const auto& t : def.terms()) k += t.coefficient;
    return k;
}

double predicted_deviation(const IdentityDefinition& def, const SamplerParams& params) {
    params.validate();
    const double n = static_cast<double>(params.n);
    return static_cast<double>(imbalance(def)) * (params.beta / (n + 2.0 * params.beta));
}

double predicted_deviation_ptn(const IdentityDefinition& def, const PTNParams& params) {
    params.validate();
    return static_cast<double>(imbalance(def)) * params.d;
}

std::string_view to_string(CiMethod m) noexcept {
    return m == CiMethod::student_t ? "student_t" : "bootstrap";
}

std::string_view to_string(RepPooling p) noexcept {
    return p == RepPooling::average_within_pair ? "average_within_pair" : "pool_all";
}

CiMethod parse_ci_method(std::string_view s) {
    if (s == "student_t" || s == "t") return CiMethod::student_t;
    if (s == "bootstrap") return CiMethod::bootstrap;
    throw ValidationError(fmt::format("unknown CI method '{}'", s));
}

RepPooling parse_rep_pooling(std::string_view s) {
    if (s == "average_within_pair" || s == "average") return RepPooling::average_within_pair;
    if (s == "pool_all" || s == "pool") return RepPooling::pool_all;
    throw ValidationError(fmt::format("unknown repetition pooling '{}'", s));
}

const IdentitySummary* IdentityReport::find(std::string_view name) const noexcept {
    for (const auto& s : identities) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

IdentityReport aggregate_report(const std::vector<IdentityDefinition>& defs, const JudgmentTable& table,
                                const AggregateOptions& options) {
    const auto conditions = table.conditions();
    if (conditions.size() > 1) {
        throw ValidationError("aggregate_report needs a single-condition table; use aggregate_by_condition");
    }
    IdentityReport report;
    report.condition = conditions.empty() ? Condition{} : conditions.front();
    report.ci = options.ci;
    report.pooling = options.pooling;

    // pair -> rep -> six values
    std::map<std::string, std::map<std::uint32_t, QueryValues>> cells;
    for (const auto& j : table.judgments()) {
        cells[j.pair_id][j.rep_index][index_of(j.query)] = j.value;
    }

    for (const auto& def : defs) {
        IdentitySummary summary;
        summary.name = def.name();
        summary.k = imbalance(def);
        std::vector<double> pair_means;
        std::vector<double> pooled;

        for (const auto& pair : table.catalog()) {
            auto pit = cells.find(pair.id);
            if (pit == cells.end()) {
                if (options.missing == MissingPolicy::error) {
                    throw MissingJudgmentError(pair.id, "", -1,
                                               fmt::format("identity {}: no judgments for pair {}", def.name(), pair.id));
                }
                summary.exclusions.push_back(fmt::format("pair {}: no judgments", pair.id));
                continue;
            }
            PairIdentityValues pv;
            pv.pair_id = pair.id;
            for (const auto& [rep, values] : pit->second) {
                try {
                    pv.values.push_back(evaluate_identity(def, values));
                    pv.reps.push_back(rep);
                } catch (const MissingJudgmentError& e) {
                    if (options.missing == MissingPolicy::error) {
                        throw MissingJudgmentError(
                            pair.id, e.query(), rep,
                            fmt::format("identity {}: pair {} rep {} is missing query {}", def.name(), pair.id,
                                        rep, e.query()));
                    }
                    summary.exclusions.push_back(
                        fmt::format("pair {} rep {}: missing query {}", pair.id, rep, e.query()));
                }
            }
            if (pv.values.empty()) {
                summary.exclusions.push_back(fmt::format("pair {}: no complete repetitions", pair.id));
                continue;
            }
            pv.pair_mean = stats::mean(pv.values);
            pair_means.push_back(pv.pair_mean);
            pooled.insert(pooled.end(), pv.values.begin(), pv.values.end());
            summary.per_pair.push_back(std::move(pv));
        }

        summary.n_pairs = summary.per_pair.size();
        if (summary.n_pairs == 0) {
            throw ValidationError(fmt::format("identity {}: no pair has a complete repetition", def.name()));
        }
        const std::vector<double>& sample =
            options.pooling == RepPooling::average_within_pair ? pair_means : pooled;
        summary.mean = stats::mean(sample);
        stats::Interval ci;
        if (options.ci == CiMethod::student_t) {
            ci = stats::student_t_interval(sample, options.level);
        } else {
            const std::uint64_t seed = StreamKey(options.bootstrap_seed).add(def.name()).value();
            ci = stats::bootstrap_percentile_interval(sample, options.bootstrap_resamples, seed, options.level);
        }
        summary.ci_low = ci.low;
        summary.ci_high = ci.high;
        report.identities.push_back(std::move(summary));
    }
    return report;
}

std::vector<IdentityReport> aggregate_by_condition(const std::vector<IdentityDefinition>& defs,
                                                   const JudgmentTable& table, const AggregateOptions& options) {
    std::vector<IdentityReport> out;
    for (const auto& c : table.conditions()) {
        out.push_back(aggregate_report(defs, table.filter(c), options));
    }
    if (out.empty()) throw ValidationError("judgment table is empty");
    return out;
}

std::string reports_to_csv(const std::vector<IdentityReport>& reports) {
    std::string out = "identity,mean,ci_low,ci_high,k,n_pairs,condition\n";
    for (const auto& r : reports) {
        const std::string label = condition_label(r.condition);
        for (const auto& s : r.identities) {
            out += csv::join({s.name, format_number(s.mean), format_number(s.ci_low), format_number(s.ci_high),
                              std::to_string(s.k), std::to_string(s.n_pairs), label});
            out += '\n';
        }
    }
    return out;
}

nlohmann::ordered_json reports_plot_json(const std::vector<IdentityReport>& reports) {
    auto finite_or_null = [](double x) -> nlohmann::ordered_json {
        if (std::isfinite(x)) return x;
        return nullptr;
    };
    nlohmann::ordered_json plot;
    plot["kind"] = "bar";
    plot["title"] = "Probabilistic identities";
    plot["x_label"] = "identity";
    plot["y_label"] = "mean deviation from zero";
    plot["reference_line"] = 0.0;
    plot["series"] = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json series;
        series["condition"] = condition_label(r.condition);
        series["temperature"] = r.condition.temperature;
        series["ci_method"] = std::string(to_string(r.ci));
        series["bars"] = nlohmann::ordered_json::array();
        for (const auto& s : r.identities) {
            series["bars"].push_back({{"identity", s.name},
                                      {"k", s.k},
                                      {"mean", s.mean},
                                      {"ci_low", finite_or_null(s.ci_low)},
                                      {"ci_high", finite_or_null(s.ci_high)},
                                      {"n_pairs", s.n_pairs}});
        }
        plot["series"].push_back(std::move(series));
    }
    return plot;
}

} // namespace probcoh

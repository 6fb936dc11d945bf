#pragma once

// Probabilistic identities: signed integer combinations of the six query
// probabilities that vanish for every coherent judge.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "probcoh/model.hpp"
#include "probcoh/sampler_params.hpp"

namespace probcoh {

struct IdentityTerm {
    int coefficient = 1;
    QueryKind query = QueryKind::A;

    bool operator==(const IdentityTerm&) const = default;
};

class IdentityDefinition {
public:
    // Throws ValidationError for fewer than two terms, a zero coefficient,
    // or a repeated query. Zero-under-coherence is checked separately by
    // check_zero_under_coherence (loaders always run it).
    IdentityDefinition(std::string name, std::vector<IdentityTerm> terms);

    const std::string& name() const noexcept { return name_; }
    const std::vector<IdentityTerm>& terms() const noexcept { return terms_; }

    bool operator==(const IdentityDefinition&) const = default;

private:
    std::string name_;
    std::vector<IdentityTerm> terms_;
};

// Z1..Z8.
//   k = 0: Z1 = A + B - AandB - AorB,            Z2 = A + BandNotA - B - AandNotB
//   k = 1: Z3 = A + BandNotA - AorB,             Z4 = B + AandNotB - AorB
//          Z5 = AandB + AandNotB - A,            Z6 = AandB + BandNotA - B
//   k = 2: Z7 = AandNotB + BandNotA + AandB - AorB
//          Z8 = AandNotB + BandNotA + 2 AandB - A - B
const std::vector<IdentityDefinition>& builtin_identities();

inline constexpr std::size_t kCoherenceCheckSamples = 1000;
inline constexpr double kCoherenceTolerance = 1e-9;

// Evaluates the identity on seeded random coherent distributions and throws
// ValidationError if any evaluation exceeds the tolerance in magnitude.
void check_zero_under_coherence(const IdentityDefinition& def,
                                std::size_t samples = kCoherenceCheckSamples,
                                double tolerance = kCoherenceTolerance);

// CSV lines: name,coefficient,query[,coefficient,query...]; an optional
// header line starting with "name" is skipped.
std::vector<IdentityDefinition> parse_identities_csv(std::string_view text);
// JSON: [{"name": "Z1", "terms": [{"coefficient": 1, "query": "A"}, ...]}, ...]
std::vector<IdentityDefinition> parse_identities_json(std::string_view text);
// Dispatches on extension (.json vs anything else) and runs the coherence check.
std::vector<IdentityDefinition> load_identities(const std::filesystem::path& path);

std::string identities_to_csv(const std::vector<IdentityDefinition>& defs);
nlohmann::ordered_json identities_to_json(const std::vector<IdentityDefinition>& defs);

// The six query values for one pair and one repetition; absent entries are nullopt.
using QueryValues = std::array<std::optional<double>, 6>;

QueryValues make_query_values(double a, double b, double a_and_b, double a_and_not_b,
                              double b_and_not_a, double a_or_b);

// Sum of coefficient * value in term order. Throws MissingJudgmentError
// naming the first absent query.
double evaluate_identity(const IdentityDefinition& def, const QueryValues& values);

// Signed coefficient sum.
int imbalance(const IdentityDefinition& def) noexcept;

// Expected identity value under the Bayesian Sampler: k * beta / (N + 2 beta).
double predicted_deviation(const IdentityDefinition& def, const SamplerParams& params);

// Expected identity value under PT+N with read-noise d: k * d.
double predicted_deviation_ptn(const IdentityDefinition& def, const PTNParams& params);

enum class CiMethod : std::uint8_t { student_t, bootstrap };
enum class RepPooling : std::uint8_t { average_within_pair, pool_all };
enum class MissingPolicy : std::uint8_t { error, exclude };

std::string_view to_string(CiMethod m) noexcept;
std::string_view to_string(RepPooling p) noexcept;
CiMethod parse_ci_method(std::string_view s);
RepPooling parse_rep_pooling(std::string_view s);

struct AggregateOptions {
    CiMethod ci = CiMethod::student_t;
    RepPooling pooling = RepPooling::average_within_pair;
    MissingPolicy missing = MissingPolicy::error;
    double level = 0.95;
    std::size_t bootstrap_resamples = 10000;
    std::uint64_t bootstrap_seed = 0;
};

struct PairIdentityValues {
    std::string pair_id;
    std::vector<std::uint32_t> reps;
    std::vector<double> values;  // one per repetition
    double pair_mean = 0.0;
};

struct IdentitySummary {
    std::string name;
    int k = 0;
    std::vector<PairIdentityValues> per_pair;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n_pairs = 0;
    std::vector<std::string> exclusions;
};

struct IdentityReport {
    Condition condition;
    CiMethod ci = CiMethod::student_t;
    RepPooling pooling = RepPooling::average_within_pair;
    std::vector<IdentitySummary> identities;

    const IdentitySummary* find(std::string_view name) const noexcept;
};

// All judgments in the table must share one condition. Per identity: one
// value per (pair, repetition), averaged within pair, then the across-pair
// mean and confidence interval. Pairs are visited in catalog order.
IdentityReport aggregate_report(const std::vector<IdentityDefinition>& defs, const JudgmentTable& table,
                                const AggregateOptions& options = {});

// One report per distinct condition, in first-appearance order.
std::vector<IdentityReport> aggregate_by_condition(const std::vector<IdentityDefinition>& defs,
                                                   const JudgmentTable& table,
                                                   const AggregateOptions& options = {});

// Columns: identity,mean,ci_low,ci_high,k,n_pairs,condition
std::string reports_to_csv(const std::vector<IdentityReport>& reports);

// Bar chart with error bars: one series per condition, one bar per identity.
nlohmann::ordered_json reports_plot_json(const std::vector<IdentityReport>& reports);

} // namespace probcoh

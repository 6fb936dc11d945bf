#include "probcoh/simulators.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "probcoh/csv.hpp"
#include "probcoh/error.hpp"
#include "probcoh/table_io.hpp"

namespace probcoh {

void SamplerParams::validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw ValidationError(fmt::format("Bayesian Sampler beta must be positive, got {}", beta));
    }
}

void PTNParams::validate() const {
    if (n < 1) throw ValidationError("PT+N needs at least one sample (N >= 1)");
    if (!(d >= 0.0 && d <= 0.5)) {
        throw ValidationError(fmt::format("PT+N noise d must lie in [0, 0.5], got {}", d));
    }
}

namespace {

void check_theta(double theta) {
    if (!(theta >= 0.0 && theta <= 1.0)) {
        throw ValidationError(fmt::format("underlying probability {} outside [0, 1]", theta));
    }
}

} // namespace

double bs_judge(double theta, const SamplerParams& params, StreamRng& rng) {
    check_theta(theta);
    params.validate();
    const auto x = static_cast<double>(rng.binomial(params.n, theta));
    return (x + params.beta) / (static_cast<double>(params.n) + 2.0 * params.beta);
}

double bs_mean(double theta, const SamplerParams& params) {
    check_theta(theta);
    params.validate();
    const double n = static_cast<double>(params.n);
    return (n * theta + params.beta) / (n + 2.0 * params.beta);
}

double bs_variance(double theta, const SamplerParams& params) {
    check_theta(theta);
    params.validate();
    const double n = static_cast<double>(params.n);
    const double denom = n + 2.0 * params.beta;
    return n * theta * (1.0 - theta) / (denom * denom);
}

double ptn_mean(double theta, const PTNParams& params) {
    check_theta(theta);
    params.validate();
    return theta * (1.0 - 2.0 * params.d) + params.d;
}

double ptn_judge(double theta, const PTNParams& params, StreamRng& rng) {
    const double p = std::clamp(ptn_mean(theta, params), 0.0, 1.0);
    return static_cast<double>(rng.binomial(params.n, p)) / static_cast<double>(params.n);
}

std::string agent_name(const Agent& agent) {
    struct Visitor {
        std::string operator()(const CoherentAgent&) const { return "coherent"; }
        std::string operator()(const BayesianSamplerAgent& a) const {
            return fmt::format("bayesian_sampler(N={},beta={})", a.params.n, a.params.beta);
        }
        std::string operator()(const PTNAgent& a) const {
            return fmt::format("ptn(N={},d={})", a.params.n, a.params.d);
        }
    };
    return std::visit(Visitor{}, agent);
}

void validate_agent(const Agent& agent) {
    if (const auto* bs = std::get_if<BayesianSamplerAgent>(&agent)) bs->params.validate();
    if (const auto* pt = std::get_if<PTNAgent>(&agent)) pt->params.validate();
}

double agent_judge(const Agent& agent, double theta, StreamRng& rng) {
    struct Visitor {
        double theta;
        StreamRng& rng;
        double operator()(const CoherentAgent&) const {
            check_theta(theta);
            return theta;
        }
        double operator()(const BayesianSamplerAgent& a) const { return bs_judge(theta, a.params, rng); }
        double operator()(const PTNAgent& a) const { return ptn_judge(theta, a.params, rng); }
    };
    return std::visit(Visitor{theta, rng}, agent);
}

StreamRng judgment_stream(std::uint64_t seed, std::string_view pair_id, QueryKind q, std::uint32_t rep) {
    return StreamKey(seed).add("judgment").add(pair_id).add(static_cast<std::uint64_t>(index_of(q))).add(rep).rng();
}

std::map<std::string, AtomicDistribution> random_thetas(const std::vector<EventPair>& catalog,
                                                        std::uint64_t seed, double concentration) {
    std::map<std::string, AtomicDistribution> out;
    for (const auto& pair : catalog) {
        StreamRng rng = StreamKey(seed).add("theta").add(pair.id).rng();
        out.insert_or_assign(pair.id, random_coherent_distribution(rng, concentration));
    }
    return out;
}

std::map<std::string, AtomicDistribution> parse_thetas_csv(std::string_view text) {
    const auto rows = csv::parse(text);
    const csv::Row header = {"pair_id", "p_ab", "p_anb", "p_nab", "p_nanb"};
    if (rows.empty() || rows.front().fields != header) {
        throw ValidationError("theta CSV header must be pair_id,p_ab,p_anb,p_nab,p_nanb");
    }
    std::map<std::string, AtomicDistribution> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        try {
            if (r.fields.size() != 5) throw ValidationError("expected 5 fields");
            std::array<double, 4> p{};
            for (std::size_t k = 0; k < 4; ++k) {
                std::size_t used = 0;
                p[k] = std::stod(r.fields[k + 1], &used);
                if (used != r.fields[k + 1].size()) throw ValidationError("trailing characters in number");
            }
            if (!out.insert_or_assign(r.fields[0], AtomicDistribution(p[0], p[1], p[2], p[3])).second) {
                throw ValidationError(fmt::format("duplicate pair_id {}", r.fields[0]));
            }
        } catch (const ValidationError& e) {
            throw ValidationError(fmt::format("line {}: {}", r.line, e.what()));
        } catch (const std::logic_error&) {
            throw ValidationError(fmt::format("line {}: invalid number", r.line));
        }
    }
    return out;
}

std::string thetas_to_csv(const std::vector<EventPair>& catalog,
                          const std::map<std::string, AtomicDistribution>& thetas) {
    std::string out = "pair_id,p_ab,p_anb,p_nab,p_nanb\n";
    for (const auto& pair : catalog) {
        auto it = thetas.find(pair.id);
        if (it == thetas.end()) continue;
        const auto& d = it->second;
        out += csv::join({pair.id, format_number(d.p_ab()), format_number(d.p_anb()), format_number(d.p_nab()),
                          format_number(d.p_nanb())});
        out += '\n';
    }
    return out;
}

JudgmentTable simulate_experiment(const SimulationConfig& config, const std::vector<EventPair>& catalog,
                                  const std::map<std::string, AtomicDistribution>& thetas) {
    if (config.reps == 0) throw ValidationError("simulation needs at least one repetition");
    validate_agent(config.agent);
    const Condition condition{config.temperature, Source::simulated, agent_name(config.agent)};

    std::vector<Judgment> judgments;
    judgments.reserve(catalog.size() * kAllQueries.size() * config.reps);
    for (const auto& pair : catalog) {
        auto it = thetas.find(pair.id);
        if (it == thetas.end()) {
            throw ValidationError(fmt::format("no underlying distribution for pair {}", pair.id));
        }
        for (QueryKind q : kAllQueries) {
            const double theta = event_probability(it->second, q);
            for (std::uint32_t rep = 0; rep < config.reps; ++rep) {
                StreamRng rng = judgment_stream(config.seed, pair.id, q, rep);
                Judgment j;
                j.pair_id = pair.id;
                j.query = q;
                j.value = agent_judge(config.agent, theta, rng);
                j.rep_index = rep;
                j.condition = condition;
                judgments.push_back(std::move(j));
            }
        }
    }
    return {catalog, std::move(judgments)};
}

} // namespace probcoh

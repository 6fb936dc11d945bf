#pragma once

// Generative agents that answer the six queries from a coherent underlying
// distribution, and an experiment simulator that mirrors the elicitation
// design (pairs x queries x repetitions).

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "probcoh/model.hpp"
#include "probcoh/random.hpp"
#include "probcoh/sampler_params.hpp"

namespace probcoh {

// Bayesian Sampler judgment: x ~ Bin(N, theta), returns (x + beta) / (N + 2 beta).
double bs_judge(double theta, const SamplerParams& params, StreamRng& rng);

// (N theta + beta) / (N + 2 beta)
double bs_mean(double theta, const SamplerParams& params);

// N theta (1 - theta) / (N + 2 beta)^2
double bs_variance(double theta, const SamplerParams& params);

// PT+N judgment: each sample is misread with probability d, so
// x ~ Bin(N, theta (1 - 2d) + d) and the judgment is x / N.
// This functional form is the standard PT+N formulation, adopted here; it
// is not derived from the Bayesian Sampler.
double ptn_judge(double theta, const PTNParams& params, StreamRng& rng);

// theta (1 - 2d) + d
double ptn_mean(double theta, const PTNParams& params);

// Answers every query with the exact underlying probability.
struct CoherentAgent {};

struct BayesianSamplerAgent {
    SamplerParams params;
};

struct PTNAgent {
    PTNParams params;
};

using Agent = std::variant<CoherentAgent, BayesianSamplerAgent, PTNAgent>;

// e.g. "coherent", "bayesian_sampler(N=10,beta=1)", "ptn(N=20,d=0.1)"
std::string agent_name(const Agent& agent);
// Throws ValidationError on invalid parameters.
void validate_agent(const Agent& agent);

double agent_judge(const Agent& agent, double theta, StreamRng& rng);

struct SimulationConfig {
    Agent agent = CoherentAgent{};
    std::uint32_t reps = 1;
    std::uint64_t seed = 0;
    double temperature = 1.0;  // recorded in each judgment's condition
};

// Stream key for one judgment; depends only on (seed, pair, query, rep).
StreamRng judgment_stream(std::uint64_t seed, std::string_view pair_id, QueryKind q, std::uint32_t rep);

// One random coherent distribution per pair, each from its own keyed stream.
std::map<std::string, AtomicDistribution> random_thetas(const std::vector<EventPair>& catalog,
                                                        std::uint64_t seed, double concentration = 1.0);

// CSV with header pair_id,p_ab,p_anb,p_nab,p_nanb.
std::map<std::string, AtomicDistribution> parse_thetas_csv(std::string_view text);
std::string thetas_to_csv(const std::vector<EventPair>& catalog,
                          const std::map<std::string, AtomicDistribution>& thetas);

// Judgments ordered by (catalog pair, query, rep). Throws ValidationError if
// a catalog pair has no theta or reps == 0.
JudgmentTable simulate_experiment(const SimulationConfig& config, const std::vector<EventPair>& catalog,
                                  const std::map<std::string, AtomicDistribution>& thetas);

} // namespace probcoh

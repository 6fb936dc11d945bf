#include <benchmark/benchmark.h>

#include "probcoh/catalog.hpp"
#include "probcoh/elicitation.hpp"
#include "probcoh/identities.hpp"
#include "probcoh/meanvar.hpp"
#include "probcoh/simulators.hpp"
#include "probcoh/table_io.hpp"

using namespace probcoh;

namespace {

JudgmentTable design(std::uint32_t reps) {
    const auto& catalog = builtin_catalog();
    return simulate_experiment({BayesianSamplerAgent{{10, 1.0}}, reps, 1, 1.0}, catalog,
                               random_thetas(catalog, 1));
}

} // namespace

static void BM_Binomial(benchmark::State& state) {
    StreamRng rng(1);
    const auto n = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(rng.binomial(n, 0.37));
}
BENCHMARK(BM_Binomial)->Arg(10)->Arg(100)->Arg(10000);

static void BM_BsJudge(benchmark::State& state) {
    StreamRng rng(2);
    const SamplerParams p{10, 1.0};
    for (auto _ : state) benchmark::DoNotOptimize(bs_judge(0.3, p, rng));
}
BENCHMARK(BM_BsJudge);

static void BM_EvaluateIdentities(benchmark::State& state) {
    const auto values = make_query_values(0.4, 0.5, 0.2, 0.2, 0.3, 0.7);
    const auto& defs = builtin_identities();
    for (auto _ : state) {
        for (const auto& d : defs) benchmark::DoNotOptimize(evaluate_identity(d, values));
    }
}
BENCHMARK(BM_EvaluateIdentities);

static void BM_SimulateDesign(benchmark::State& state) {
    const auto reps = static_cast<std::uint32_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(design(reps));
    state.SetItemsProcessed(state.iterations() * 24 * 6 * reps);
}
BENCHMARK(BM_SimulateDesign)->Arg(5)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_AggregateReport(benchmark::State& state) {
    const auto table = design(static_cast<std::uint32_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(aggregate_report(builtin_identities(), table));
}
BENCHMARK(BM_AggregateReport)->Arg(5)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_BootstrapReport(benchmark::State& state) {
    const auto table = design(5);
    AggregateOptions o;
    o.ci = CiMethod::bootstrap;
    o.bootstrap_resamples = 10000;
    for (auto _ : state) benchmark::DoNotOptimize(aggregate_report(builtin_identities(), table, o));
}
BENCHMARK(BM_BootstrapReport)->Unit(benchmark::kMillisecond);

static void BM_MeanVarFit(benchmark::State& state) {
    const auto points = mean_variance_points(design(100)).points;
    for (auto _ : state) {
        const auto fit = fit_inverted_u(points);
        benchmark::DoNotOptimize(recover_params_meanvar(fit));
    }
}
BENCHMARK(BM_MeanVarFit);

static void BM_BetaInversion(benchmark::State& state) {
    const auto coef = inverted_u_coefficients(10, 1.0);
    QuadraticFit fit;
    fit.a = coef.a;
    fit.c = coef.c;
    for (auto _ : state) benchmark::DoNotOptimize(recover_params_meanvar(fit));
}
BENCHMARK(BM_BetaInversion);

static void BM_TableJsonlRoundTrip(benchmark::State& state) {
    const auto table = design(5);
    for (auto _ : state) benchmark::DoNotOptimize(table_from_jsonl(table_to_jsonl(table), {}));
}
BENCHMARK(BM_TableJsonlRoundTrip)->Unit(benchmark::kMillisecond);

static void BM_Fingerprint(benchmark::State& state) {
    ProviderConfig p;
    p.endpoint_url = "https://api.openai.com/v1";
    p.model_name = "gpt-4";
    const auto bundle = render_prompt(builtin_catalog()[0], QueryKind::AorB);
    std::uint32_t rep = 0;
    for (auto _ : state) benchmark::DoNotOptimize(request_fingerprint(p, bundle, rep++));
}
BENCHMARK(BM_Fingerprint);

BENCHMARK_MAIN();

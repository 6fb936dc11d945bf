#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "probcoh/catalog.hpp"
#include "probcoh/elicitation.hpp"
#include "probcoh/error.hpp"
#include "probcoh/identities.hpp"
#include "probcoh/io.hpp"
#include "probcoh/meanvar.hpp"
#include "probcoh/report.hpp"
#include "probcoh/simulators.hpp"
#include "probcoh/table_io.hpp"
#include "probcoh/version.hpp"

namespace fs = std::filesystem;

namespace probcoh::cli {

namespace {

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    bool print_identities = false;
    bool print_templates = false;
};

struct SimulateOptions {
    std::string agent = "bayesian_sampler";
    std::uint32_t n = 10;
    double beta = 1.0;
    double d = 0.1;
    std::uint32_t pairs = 24;
    std::string catalog;
    std::string thetas;
    double concentration = 1.0;
    std::uint32_t reps = 5;
    double temperature = 1.0;
    std::string out;
};

struct ElicitOptions {
    std::string endpoint = "https://api.openai.com/v1";
    std::string model;
    double temperature = 1.0;
    std::uint32_t reps = 5;
    std::string catalog;
    std::string cache;
    std::string out;
    std::string replay;
    std::string exclusions;
    std::string api_key_env = "OPENAI_API_KEY";
    int max_retries = 5;
    double timeout_s = 30.0;
    double rate_limit = 60.0;
    int max_parallel = 4;
    std::uint32_t reask = 0;
    std::string templates;
    bool no_collapse = false;
};

struct AnalysisOptions {
    std::string in;
    std::string catalog;
    std::string identities;
    std::string ci = "student_t";
    std::string pooling = "average_within_pair";
    std::size_t resamples = 10000;
    bool allow_missing = false;
    std::string condition;
    std::string weighting = "none";
    std::string method = "meanvar";
    std::optional<double> n_hint;
};

class Runner {
public:
    Runner(const Environment& env, const GlobalOptions& global) : env_(env), global_(global) {}

    fs::path out_dir() const { return fs::path(global_.out_dir); }

    fs::path resolve_out(const std::string& explicit_path, std::string_view default_name) const {
        return explicit_path.empty() ? out_dir() / default_name : fs::path(explicit_path);
    }

    std::vector<EventPair> catalog_from(const std::string& path) const {
        return path.empty() ? builtin_catalog() : load_catalog_csv(path);
    }

    JudgmentTable load_input(const AnalysisOptions& o) const {
        const fs::path in = resolve_out(o.in, files::judgments);
        JudgmentTable table = load_table(in, catalog_from(o.catalog));
        if (!o.condition.empty()) {
            std::optional<Condition> match;
            for (const auto& c : table.conditions()) {
                if (condition_label(c) == o.condition) match = c;
            }
            if (!match) throw ValidationError(fmt::format("{}: no judgments with condition '{}'", in.string(), o.condition));
            table = table.filter(*match);
        }
        return table;
    }

    void check_table(const JudgmentTable& table, bool allow_missing, const fs::path& source) const {
        ValidationReport report = validate_table(table);
        if (allow_missing) report.missing.clear();
        if (!report.complete()) {
            throw ValidationError(fmt::format("{}: table failed validation:\n{}", source.string(), report.summary()));
        }
    }

    AggregateOptions aggregate_options(const AnalysisOptions& o) const {
        AggregateOptions a;
        a.ci = parse_ci_method(o.ci);
        a.pooling = parse_rep_pooling(o.pooling);
        a.missing = o.allow_missing ? MissingPolicy::exclude : MissingPolicy::error;
        a.bootstrap_resamples = o.resamples;
        a.bootstrap_seed = global_.seed;
        return a;
    }

    std::vector<IdentityDefinition> identity_defs(const AnalysisOptions& o) const {
        return o.identities.empty() ? builtin_identities() : load_identities(o.identities);
    }

    void simulate(const SimulateOptions& o) {
        std::vector<EventPair> catalog = catalog_from(o.catalog);
        if (o.catalog.empty()) {
            if (o.pairs == 0 || o.pairs > catalog.size()) {
                throw ValidationError(fmt::format("--pairs must be in [1, {}]", catalog.size()));
            }
            catalog.resize(o.pairs);
        }
        std::map<std::string, AtomicDistribution> thetas =
            o.thetas.empty() ? random_thetas(catalog, global_.seed, o.concentration)
                             : parse_thetas_csv(io::read_file(o.thetas));

        SimulationConfig config;
        config.reps = o.reps;
        config.seed = global_.seed;
        config.temperature = o.temperature;
        if (o.agent == "coherent") {
            config.agent = CoherentAgent{};
        } else if (o.agent == "bayesian_sampler") {
            config.agent = BayesianSamplerAgent{{o.n, o.beta}};
        } else if (o.agent == "ptn") {
            config.agent = PTNAgent{{o.n, o.d}};
        } else {
            throw ValidationError(fmt::format("unknown agent '{}'", o.agent));
        }
        const JudgmentTable table = simulate_experiment(config, catalog, thetas);
        const fs::path out = resolve_out(o.out, files::judgments);
        save_table(out, table);
        io::write_file(out_dir() / files::thetas, thetas_to_csv(catalog, thetas));
        *env_.out << fmt::format("simulated {} judgments ({}) -> {}\n", table.size(), agent_name(config.agent),
                                 out.string());
    }

    void elicit(const ElicitOptions& o) {
        ProviderConfig provider;
        provider.endpoint_url = o.endpoint;
        provider.model_name = o.model;
        provider.api_key_env = o.api_key_env;
        provider.temperature = o.temperature;
        provider.max_retries = o.max_retries;
        provider.request_timeout = std::chrono::milliseconds(static_cast<std::int64_t>(o.timeout_s * 1000.0));
        provider.rate_limit_rpm = o.rate_limit;
        provider.max_parallel = o.max_parallel;

        ExperimentOptions options;
        options.reps = o.reps;
        options.reask = o.reask;
        options.collapse_reps_at_zero_temperature = !o.no_collapse;
        if (!o.templates.empty()) options.templates = PromptTemplates::load(o.templates);

        std::shared_ptr<ResponseCache> cache;
        std::shared_ptr<HttpTransport> transport;
        if (!o.replay.empty()) {
            if (!fs::is_regular_file(o.replay)) throw IoError(fmt::format("replay fixture '{}' not found", o.replay));
            cache = std::make_shared<ResponseCache>(fs::path(o.replay));
        } else {
            cache = std::make_shared<ResponseCache>(resolve_out(o.cache, files::cache));
            transport = env_.transport ? env_.transport : make_http_transport();
        }
        Elicitor elicitor(provider, transport, cache);
        const ExperimentResult result = run_experiment(elicitor, catalog_from(o.catalog), options);

        const fs::path out = resolve_out(o.out, files::judgments);
        save_table(out, result.table);
        io::write_file(resolve_out(o.exclusions, files::exclusions), exclusions_to_csv(result.exclusions));
        for (const auto& r : result.reasks) {
            *env_.err << fmt::format("re-ask {} for pair {} query {} rep {} after: {}\n", r.attempt, r.pair_id,
                                     to_string(r.query), r.rep, r.previous_raw_text);
        }
        *env_.out << fmt::format("elicited {} of {} cells ({} excluded, {} network requests) -> {}\n",
                                 result.table.size(), result.cells_attempted, result.exclusions.size(),
                                 elicitor.network_requests(), out.string());
    }

    void audit(const AnalysisOptions& o) {
        const JudgmentTable table = load_input(o);
        check_table(table, o.allow_missing, resolve_out(o.in, files::judgments));
        const auto reports = aggregate_by_condition(identity_defs(o), table, aggregate_options(o));
        io::write_file(out_dir() / files::identities_csv, reports_to_csv(reports));
        io::write_file(out_dir() / files::identities_plot, reports_plot_json(reports).dump(2) + "\n");
        for (const auto& r : reports) {
            *env_.out << condition_label(r.condition) << "\n";
            for (const auto& s : r.identities) {
                *env_.out << fmt::format("  {:<4} k={:+d} mean={:+.6f} CI=[{:+.6f}, {:+.6f}]\n", s.name, s.k, s.mean,
                                         s.ci_low, s.ci_high);
            }
        }
    }

    void meanvar(const AnalysisOptions& o) {
        const JudgmentTable table = load_input(o);
        check_table(table, true, resolve_out(o.in, files::judgments));
        const MeanVarResult mv = mean_variance_points(table);
        const QuadraticFit fit = fit_inverted_u(mv.points, parse_weighting(o.weighting));
        std::optional<PlainQuadraticFit> quad;
        try {
            quad = fit_plain_quadratic(mv.points);
        } catch (const InfeasibleFitError&) {
        }
        io::write_file(out_dir() / files::meanvar_points, meanvar_points_to_csv(mv.points));
        io::write_file(out_dir() / files::meanvar_fit, meanvar_summary_json(mv, fit, quad).dump(2) + "\n");
        io::write_file(out_dir() / files::meanvar_plot, meanvar_points_plot_json(mv.points, fit).dump(2) + "\n");
        *env_.out << fmt::format("mean-variance fit over {} cells ({} skipped): a={} c={}{}\n", fit.n_points,
                                 mv.skipped.size(), format_number(fit.a), format_number(fit.c),
                                 fit.degenerate ? " (degenerate)" : "");
    }

    void fit(const AnalysisOptions& o) {
        const RecoveryMethod method = parse_recovery_method(o.method);
        const JudgmentTable table = load_input(o);
        check_table(table, o.allow_missing || method == RecoveryMethod::meanvar,
                    resolve_out(o.in, files::judgments));

        nlohmann::ordered_json out;
        out["method"] = std::string(to_string(method));
        std::optional<QuadraticFit> qfit;
        if (method != RecoveryMethod::identity_deviation) {
            qfit = fit_inverted_u(mean_variance_points(table).points, parse_weighting(o.weighting));
            out["a"] = qfit->a;
            out["c"] = qfit->c;
        }
        std::optional<IdentityReport> report;
        if (method != RecoveryMethod::meanvar) {
            report = aggregate_report(identity_defs(o), table, aggregate_options(o));
        }
        RecoveredParams params;
        switch (method) {
        case RecoveryMethod::meanvar:
            params = recover_params_meanvar(*qfit);
            break;
        case RecoveryMethod::identity_deviation: {
            const auto est = recover_params_identities(*report, o.n_hint);
            out["s"] = est.s;
            out["beta_per_n"] = std::isfinite(est.beta_per_n) ? nlohmann::ordered_json(est.beta_per_n) : nlohmann::ordered_json(nullptr);
            if (!est.params) {
                out["n_hat"] = nullptr;
                out["beta_hat"] = nullptr;
                write_fit(out);
                return;
            }
            params = *est.params;
            break;
        }
        case RecoveryMethod::combined:
            out["s"] = recover_params_identities(*report).s;
            params = recover_params_combined(*qfit, *report);
            break;
        }
        out["n_hat"] = params.n_hat;
        out["beta_hat"] = params.beta_hat;
        write_fit(out);
    }

    void write_fit(const nlohmann::ordered_json& out) {
        io::write_file(out_dir() / files::fit, out.dump(2) + "\n");
        *env_.out << out.dump() << "\n";
    }

    void report(const std::string& dir) {
        const fs::path run_dir = dir.empty() ? out_dir() : fs::path(dir);
        const RunSummary summary = write_run_report(run_dir);
        *env_.out << summary.to_text();
    }

private:
    const Environment& env_;
    const GlobalOptions& global_;
};

void write_manifest(const fs::path& dir, const std::string& command, const CLI::App& app,
                    const std::vector<std::string>& args, std::uint64_t seed, int exit_code,
                    const std::string& error = {}) {
    nlohmann::ordered_json m;
    m["tool"] = "probcoh";
    m["version"] = kVersion;
    m["command"] = command;
    m["seed"] = seed;
    m["argv"] = args;
    m["config"] = app.config_to_str(false, false);
    m["exit_code"] = exit_code;
    if (!error.empty()) m["error"] = error;
    io::write_file(dir / (command + ".manifest.json"), m.dump(2) + "\n");
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::validation: return kValidation;
    case ErrorKind::network: return kNetwork;
    case ErrorKind::infeasible_fit: return kInfeasibleFit;
    case ErrorKind::io: return kIo;
    }
    return 1;
}

void add_analysis_options(CLI::App* cmd, AnalysisOptions& o) {
    cmd->add_option("--in", o.in, "JudgmentTable JSONL (default <out-dir>/judgments.jsonl)");
    cmd->add_option("--catalog", o.catalog, "Catalog CSV for tables without a catalog header");
    cmd->add_option("--condition", o.condition, "Restrict to one condition label, e.g. gpt-4@T1/live");
}

void add_identity_options(CLI::App* cmd, AnalysisOptions& o) {
    cmd->add_option("--identities", o.identities, "Identity definitions (CSV or .json)");
    cmd->add_option("--ci", o.ci, "CI method")->check(CLI::IsMember({"student_t", "bootstrap"}));
    cmd->add_option("--pooling", o.pooling, "Repetition pooling")
        ->check(CLI::IsMember({"average_within_pair", "pool_all"}));
    cmd->add_option("--resamples", o.resamples, "Bootstrap resamples");
    cmd->add_flag("--allow-missing", o.allow_missing, "Exclude incomplete repetitions instead of failing");
}

void add_simulate_options(CLI::App* cmd, SimulateOptions& o) {
    cmd->add_option("--agent", o.agent, "Agent kind")->check(CLI::IsMember({"coherent", "bayesian_sampler", "ptn"}));
    cmd->add_option("--N", o.n, "Number of internal samples");
    cmd->add_option("--beta", o.beta, "Bayesian Sampler prior parameter");
    cmd->add_option("--d", o.d, "PT+N read-noise probability");
    cmd->add_option("--pairs", o.pairs, "Use the first N built-in pairs");
    cmd->add_option("--catalog", o.catalog, "Catalog CSV (id,category,text_a,text_b)");
    cmd->add_option("--thetas", o.thetas, "Atom probabilities CSV (pair_id,p_ab,p_anb,p_nab,p_nanb)");
    cmd->add_option("--concentration", o.concentration, "Dirichlet concentration for random thetas");
    cmd->add_option("--reps", o.reps, "Repetitions per cell");
    cmd->add_option("--temperature", o.temperature, "Temperature recorded in the condition");
    cmd->add_option("--out", o.out, "Output JSONL (default <out-dir>/judgments.jsonl)");
}

} // namespace

int run(const std::vector<std::string>& args, const Environment& env_in) {
    Environment env = env_in;
    if (env.out == nullptr) env.out = &std::cout;
    if (env.err == nullptr) env.err = &std::cerr;

    CLI::App app{"Coherence audits of probability judgments", "probcoh"};
    app.set_version_flag("--version", std::string(kVersion));
    app.set_config("--config", "", "TOML/INI file mirroring the command-line flags");
    app.require_subcommand(0, 1);

    GlobalOptions global;
    app.add_option("--seed", global.seed, "Random seed");
    app.add_option("--out-dir", global.out_dir, "Directory for outputs and manifests");
    app.add_flag("--print-identities", global.print_identities, "Print the built-in identity set as JSON");
    app.add_flag("--print-templates", global.print_templates, "Print the default prompt templates");

    SimulateOptions sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "Simulate judgments from a generative agent");
    add_simulate_options(simulate_cmd, sim);

    ElicitOptions eli;
    auto* elicit_cmd = app.add_subcommand("elicit", "Elicit judgments from an OpenAI-compatible endpoint");
    elicit_cmd->add_option("--endpoint", eli.endpoint, "Base URL; requests go to <endpoint>/chat/completions");
    elicit_cmd->add_option("--model", eli.model, "Model name")->required();
    elicit_cmd->add_option("--temperature", eli.temperature, "Sampling temperature");
    elicit_cmd->add_option("--reps", eli.reps, "Repetitions per cell");
    elicit_cmd->add_option("--catalog", eli.catalog, "Catalog CSV");
    elicit_cmd->add_option("--cache", eli.cache, "Response cache JSONL (default <out-dir>/cache.jsonl)");
    elicit_cmd->add_option("--out", eli.out, "Output JSONL (default <out-dir>/judgments.jsonl)");
    elicit_cmd->add_option("--replay", eli.replay, "Serve responses from a recorded cache; no network");
    elicit_cmd->add_option("--exclusions", eli.exclusions, "Exclusion report CSV (default <out-dir>/exclusions.csv)");
    elicit_cmd->add_option("--api-key-env", eli.api_key_env, "Environment variable holding the API key");
    elicit_cmd->add_option("--max-retries", eli.max_retries, "Retries on 429/5xx/timeouts");
    elicit_cmd->add_option("--timeout", eli.timeout_s, "Request timeout in seconds");
    elicit_cmd->add_option("--rate-limit", eli.rate_limit, "Requests per minute (0: unlimited)");
    elicit_cmd->add_option("--max-parallel", eli.max_parallel, "Concurrent requests");
    elicit_cmd->add_option("--reask", eli.reask, "Re-asks after a noncompliant answer (0-2)");
    elicit_cmd->add_option("--templates", eli.templates, "Prompt template file");
    elicit_cmd->add_flag("--no-collapse", eli.no_collapse, "Keep all repetitions at temperature 0");

    AnalysisOptions aud;
    auto* audit_cmd = app.add_subcommand("audit", "Evaluate probabilistic identities");
    add_analysis_options(audit_cmd, aud);
    add_identity_options(audit_cmd, aud);

    AnalysisOptions mv;
    auto* meanvar_cmd = app.add_subcommand("meanvar", "Mean-variance analysis of repeated judgments");
    add_analysis_options(meanvar_cmd, mv);
    meanvar_cmd->add_option("--weighting", mv.weighting, "Point weighting")
        ->check(CLI::IsMember({"none", "inverse_variance"}));

    AnalysisOptions ft;
    auto* fit_cmd = app.add_subcommand("fit", "Recover Bayesian Sampler parameters");
    add_analysis_options(fit_cmd, ft);
    add_identity_options(fit_cmd, ft);
    fit_cmd->add_option("--method", ft.method, "Recovery method")
        ->check(CLI::IsMember({"meanvar", "identity_deviation", "combined"}));
    fit_cmd->add_option("--n-hint", ft.n_hint, "Known N for identity_deviation");
    fit_cmd->add_option("--weighting", ft.weighting, "Point weighting")
        ->check(CLI::IsMember({"none", "inverse_variance"}));

    std::string report_dir;
    auto* report_cmd = app.add_subcommand("report", "Summarize a run directory");
    report_cmd->add_option("--dir", report_dir, "Run directory (default <out-dir>)");

    SimulateOptions pipe_sim;
    AnalysisOptions pipe;
    auto* pipeline_cmd = app.add_subcommand("pipeline", "simulate, audit, meanvar, fit and report in one run");
    add_simulate_options(pipeline_cmd, pipe_sim);
    pipeline_cmd->add_option("--method", pipe.method, "Recovery method")
        ->check(CLI::IsMember({"meanvar", "identity_deviation", "combined"}));
    pipeline_cmd->add_option("--n-hint", pipe.n_hint, "Known N for identity_deviation");

    for (auto* sub : app.get_subcommands({})) sub->configurable();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        *env.out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        *env.out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion&) {
        *env.out << kVersion << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        *env.err << "error: " << e.what() << "\n";
        return e.get_exit_code() == 0 ? kOk : kValidation;
    }

    std::string command;
    const auto fail = [&](int code, const char* what) {
        *env.err << "error: " << what << "\n";
        if (!command.empty()) {
            try {
                write_manifest(global.out_dir, command, app, args, global.seed, code, what);
            } catch (const std::exception&) {
            }
        }
        return code;
    };
    try {
        if (global.print_identities) {
            *env.out << identities_to_json(builtin_identities()).dump(2) << "\n";
            return kOk;
        }
        if (global.print_templates) {
            *env.out << PromptTemplates::defaults().to_text();
            return kOk;
        }
        Runner runner(env, global);
        if (*simulate_cmd) {
            command = "simulate";
            runner.simulate(sim);
        } else if (*elicit_cmd) {
            command = "elicit";
            runner.elicit(eli);
        } else if (*audit_cmd) {
            command = "audit";
            runner.audit(aud);
        } else if (*meanvar_cmd) {
            command = "meanvar";
            runner.meanvar(mv);
        } else if (*fit_cmd) {
            command = "fit";
            runner.fit(ft);
        } else if (*report_cmd) {
            command = "report";
            runner.report(report_dir);
        } else if (*pipeline_cmd) {
            command = "pipeline";
            pipe.in = pipe_sim.out;
            pipe.catalog = pipe_sim.catalog;
            runner.simulate(pipe_sim);
            runner.audit(pipe);
            runner.meanvar(pipe);
            runner.fit(pipe);
            runner.report("");
        } else {
            *env.out << app.help();
            return kValidation;
        }
        write_manifest(runner.out_dir(), command, app, args, global.seed, kOk);
        return kOk;
    } catch (const Error& e) {
        return fail(exit_code_for(e.kind()), e.what());
    } catch (const std::exception& e) {
        return fail(1, e.what());
    }
}

} // namespace probcoh::cli

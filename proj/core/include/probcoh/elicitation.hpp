#pragma once

// Elicitation harness for OpenAI-compatible chat-completion endpoints.
//
// Every request is fingerprinted; responses go to an append-only JSONL
// cache, and a fingerprint that is already cached never reaches the
// network again. With no transport the elicitor runs in replay mode and
// serves the cache only.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "probcoh/model.hpp"
#include "probcoh/prompts.hpp"
#include "probcoh/random.hpp"

namespace probcoh {

// ---------------------------------------------------------------------------
// Response parsing

struct ParsedProbability {
    std::optional<double> value;  // nullopt: noncompliant response
    bool percent = false;         // answered as "N%"
    std::string raw_text;

    bool compliant() const noexcept { return value.has_value(); }
};

// Accepts a bare decimal in [0, 1] or "N%" with N in [0, 100], after trimming
// whitespace. Anything else is noncompliant.
ParsedProbability parse_probability(std::string_view raw_text);

// ---------------------------------------------------------------------------
// Configuration and records

struct ProviderConfig {
    std::string endpoint_url;  // e.g. https://api.openai.com/v1
    std::string model_name;
    std::string api_key_env = "OPENAI_API_KEY";  // empty: send no Authorization header
    double temperature = 1.0;
    int max_retries = 5;
    std::chrono::milliseconds request_timeout{30000};
    double rate_limit_rpm = 0.0;  // 0: unlimited
    int max_parallel = 4;
    int max_tokens = 16;

    // Throws ValidationError.
    void validate() const;
};

struct TokenUsage {
    std::optional<std::int64_t> prompt_tokens;
    std::optional<std::int64_t> completion_tokens;
    std::optional<std::int64_t> total_tokens;

    bool operator==(const TokenUsage&) const = default;
};

struct CacheRecord {
    std::string request_fingerprint;
    std::string raw_text;
    int http_status = 200;
    std::string timestamp;  // ISO-8601 UTC
    std::optional<TokenUsage> token_usage;
    int retries = 0;
    // Provenance, for humans reading the cache.
    std::string model;
    double temperature = 0.0;
    std::string pair_id;
    QueryKind query = QueryKind::A;
    std::uint32_t rep_index = 0;
    std::uint32_t attempt = 0;

    bool operator==(const CacheRecord&) const = default;
};

nlohmann::ordered_json cache_record_to_json(const CacheRecord& r);
CacheRecord cache_record_from_json(const nlohmann::json& obj);

// SHA-256 (hex) over a canonical JSON array of endpoint, model, system
// message, user message, temperature and repetition index. Re-asks after a
// noncompliant answer (attempt > 0) append the attempt number.
std::string request_fingerprint(const ProviderConfig& provider, const PromptBundle& bundle,
                                std::uint32_t rep_index, std::uint32_t attempt = 0);

// Append-only JSONL cache; concurrent readers, serialized writers. Later
// records for the same fingerprint override earlier ones on load.
class ResponseCache {
public:
    ResponseCache() = default;  // in-memory only
    explicit ResponseCache(std::filesystem::path path);  // loads the file if it exists

    std::optional<CacheRecord> find(const std::string& fingerprint) const;
    void insert(const CacheRecord& record);
    std::size_t size() const;

private:
    std::optional<std::filesystem::path> path_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, CacheRecord> records_;
};

// ---------------------------------------------------------------------------
// Transport

struct HttpRequest {
    std::string url;
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;
    std::chrono::milliseconds timeout{30000};
};

struct HttpResponse {
    int status = 0;  // 0: no HTTP response (timeout, connection failure)
    std::string body;
    std::string error;
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const HttpRequest& request) = 0;
};

// cpp-httplib backed transport; supports http:// and https:// URLs.
std::shared_ptr<HttpTransport> make_http_transport();

// Builds the chat-completion body {model, messages, temperature, max_tokens}.
nlohmann::ordered_json chat_request_body(const ProviderConfig& provider, const PromptBundle& bundle);

// Returns the first choice's message content; throws MalformedResponseError.
std::pair<std::string, std::optional<TokenUsage>> parse_chat_response(std::string_view body);

bool is_retryable_status(int status) noexcept;

// ---------------------------------------------------------------------------
// Pacing

using Sleeper = std::function<void(std::chrono::milliseconds)>;
using SteadyNow = std::function<std::chrono::steady_clock::time_point()>;
using UtcNow = std::function<std::string()>;

Sleeper real_sleeper();
std::string utc_now_iso8601();

struct BackoffPolicy {
    std::chrono::milliseconds initial{1000};
    double factor = 2.0;
    std::chrono::milliseconds cap{60000};
};

// Full jitter: uniform on [0, min(cap, initial * factor^attempt)].
std::chrono::milliseconds backoff_delay(const BackoffPolicy& policy, int attempt, StreamRng& rng);

// Shared pacing across all in-flight requests: successive slots are at
// least 60/rpm seconds apart.
class RateLimiter {
public:
    RateLimiter(double requests_per_minute, Sleeper sleeper, SteadyNow now = std::chrono::steady_clock::now);

    void acquire();

private:
    std::chrono::nanoseconds interval_;
    Sleeper sleeper_;
    SteadyNow now_;
    std::mutex mutex_;
    std::optional<std::chrono::steady_clock::time_point> next_;
};

// ---------------------------------------------------------------------------
// Elicitor

struct ElicitorHooks {
    Sleeper sleeper;  // defaults to real sleeping
    UtcNow utc_now;   // defaults to the system clock
    SteadyNow steady_now;
    BackoffPolicy backoff;
    // Used when transport is set. Defaults to getenv(api_key_env).
    std::function<std::optional<std::string>(const std::string&)> getenv;
};

class Elicitor {
public:
    // transport == nullptr selects replay mode. Throws AuthenticationError
    // if a live transport is given and the API key variable is unset.
    Elicitor(ProviderConfig provider, std::shared_ptr<HttpTransport> transport,
             std::shared_ptr<ResponseCache> cache, ElicitorHooks hooks = {});

    // Cached record if present; otherwise one request with retries on
    // 429/5xx/timeouts, written to the cache. Throws AuthenticationError,
    // ExhaustedRetriesError, MalformedResponseError, ReplayMissError or
    // NetworkError (other non-retryable statuses).
    CacheRecord elicit(const PromptBundle& bundle, std::uint32_t rep_index, std::uint32_t attempt = 0);

    bool replay() const noexcept { return transport_ == nullptr; }
    const ProviderConfig& provider() const noexcept { return provider_; }
    std::size_t network_requests() const noexcept { return requests_.load(); }

private:
    ProviderConfig provider_;
    std::shared_ptr<HttpTransport> transport_;
    std::shared_ptr<ResponseCache> cache_;
    ElicitorHooks hooks_;
    std::optional<std::string> api_key_;
    RateLimiter limiter_;
    std::atomic<std::size_t> requests_{0};
};

// ---------------------------------------------------------------------------
// Experiment

struct ExperimentOptions {
    std::uint32_t reps = 5;
    // At temperature 0 only one repetition is requested.
    bool collapse_reps_at_zero_temperature = true;
    // Extra asks after a noncompliant answer, 0..2.
    std::uint32_t reask = 0;
    PromptTemplates templates = PromptTemplates::defaults();
};

struct Exclusion {
    std::string pair_id;
    QueryKind query = QueryKind::A;
    std::uint32_t rep = 0;
    std::string reason;
    std::string raw_text;

    bool operator==(const Exclusion&) const = default;
};

struct ReaskEvent {
    std::string pair_id;
    QueryKind query = QueryKind::A;
    std::uint32_t rep = 0;
    std::uint32_t attempt = 0;
    std::string previous_raw_text;
};

struct ExperimentResult {
    JudgmentTable table;
    std::vector<Exclusion> exclusions;
    std::vector<ReaskEvent> reasks;
    std::size_t cells_attempted = 0;
};

// catalog x 6 queries x reps cells, run on up to max_parallel threads.
// Per-cell failures become exclusions; authentication failures abort.
// Output order is (catalog pair, query, rep) regardless of scheduling.
ExperimentResult run_experiment(Elicitor& elicitor, const std::vector<EventPair>& catalog,
                                const ExperimentOptions& options = {});

// Columns: pair_id,query,rep,reason,raw_text
std::string exclusions_to_csv(const std::vector<Exclusion>& exclusions);
std::vector<Exclusion> exclusions_from_csv(std::string_view text);

} // namespace probcoh

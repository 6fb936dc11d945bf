#include "probcoh/elicitation.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "probcoh/csv.hpp"
#include "probcoh/error.hpp"
#include "probcoh/io.hpp"

namespace probcoh {

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n\f\v");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n\f\v");
    return s.substr(b, e - b + 1);
}

// Unsigned decimal literal: digits with an optional fraction, or a bare fraction.
bool is_decimal_literal(std::string_view s) {
    if (s.empty()) return false;
    std::size_t i = 0;
    std::size_t int_digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++int_digits;
    std::size_t frac_digits = 0;
    if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++frac_digits;
    }
    return i == s.size() && (int_digits + frac_digits) > 0;
}

std::optional<double> to_double(std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

} // namespace

ParsedProbability parse_probability(std::string_view raw_text) {
    ParsedProbability out;
    out.raw_text = std::string(raw_text);
    std::string_view s = trim(raw_text);
    bool percent = false;
    if (!s.empty() && s.back() == '%') {
        percent = true;
        s = trim(s.substr(0, s.size() - 1));
    }
    if (!is_decimal_literal(s)) return out;
    const auto v = to_double(s);
    if (!v) return out;
    if (percent) {
        if (*v < 0.0 || *v > 100.0) return out;
        out.value = *v / 100.0;
        out.percent = true;
    } else {
        if (*v < 0.0 || *v > 1.0) return out;
        out.value = *v;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Config and records

void ProviderConfig::validate() const {
    if (model_name.empty()) throw ValidationError("provider model name is empty");
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
        throw ValidationError(fmt::format("temperature must be nonnegative, got {}", temperature));
    }
    if (max_retries < 0) throw ValidationError("max_retries must be nonnegative");
    if (max_parallel < 1) throw ValidationError("max_parallel must be at least 1");
    if (!(rate_limit_rpm >= 0.0)) throw ValidationError("rate limit must be nonnegative");
    if (request_timeout.count() <= 0) throw ValidationError("request timeout must be positive");
    if (max_tokens < 1) throw ValidationError("max_tokens must be positive");
}

nlohmann::ordered_json cache_record_to_json(const CacheRecord& r) {
    nlohmann::ordered_json obj;
    obj["request_fingerprint"] = r.request_fingerprint;
    obj["raw_text"] = r.raw_text;
    obj["http_status"] = r.http_status;
    obj["timestamp"] = r.timestamp;
    if (r.token_usage) {
        nlohmann::ordered_json usage = nlohmann::ordered_json::object();
        if (r.token_usage->prompt_tokens) usage["prompt_tokens"] = *r.token_usage->prompt_tokens;
        if (r.token_usage->completion_tokens) usage["completion_tokens"] = *r.token_usage->completion_tokens;
        if (r.token_usage->total_tokens) usage["total_tokens"] = *r.token_usage->total_tokens;
        obj["token_usage"] = std::move(usage);
    }
    obj["retries"] = r.retries;
    obj["model"] = r.model;
    obj["temperature"] = r.temperature;
    obj["pair_id"] = r.pair_id;
    obj["query"] = std::string(to_string(r.query));
    obj["rep_index"] = r.rep_index;
    obj["attempt"] = r.attempt;
    return obj;
}

CacheRecord cache_record_from_json(const nlohmann::json& obj) {
    try {
        CacheRecord r;
        r.request_fingerprint = obj.at("request_fingerprint").get<std::string>();
        r.raw_text = obj.at("raw_text").get<std::string>();
        r.http_status = obj.at("http_status").get<int>();
        r.timestamp = obj.at("timestamp").get<std::string>();
        if (auto it = obj.find("token_usage"); it != obj.end() && it->is_object()) {
            TokenUsage u;
            if (it->contains("prompt_tokens")) u.prompt_tokens = it->at("prompt_tokens").get<std::int64_t>();
            if (it->contains("completion_tokens")) {
                u.completion_tokens = it->at("completion_tokens").get<std::int64_t>();
            }
            if (it->contains("total_tokens")) u.total_tokens = it->at("total_tokens").get<std::int64_t>();
            r.token_usage = u;
        }
        r.retries = obj.value("retries", 0);
        r.model = obj.value("model", "");
        r.temperature = obj.value("temperature", 0.0);
        r.pair_id = obj.value("pair_id", "");
        r.query = parse_query(obj.value("query", "A"));
        r.rep_index = obj.value("rep_index", 0u);
        r.attempt = obj.value("attempt", 0u);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(fmt::format("malformed cache record: {}", e.what()));
    }
}

std::string request_fingerprint(const ProviderConfig& provider, const PromptBundle& bundle,
                                std::uint32_t rep_index, std::uint32_t attempt) {
    nlohmann::json key = nlohmann::json::array(
        {provider.endpoint_url, provider.model_name, bundle.system_message, bundle.user_message,
         provider.temperature, rep_index});
    if (attempt > 0) key.push_back(attempt);
    const std::string canonical = key.dump();

    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(canonical.data(), canonical.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 computation failed");
    }
    std::string hex;
    hex.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
    if (!std::filesystem::exists(*path_)) return;
    const std::string text = io::read_file(*path_);
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        const std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            CacheRecord r = cache_record_from_json(nlohmann::json::parse(line));
            records_.insert_or_assign(r.request_fingerprint, std::move(r));
        } catch (const std::exception& e) {
            throw ValidationError(fmt::format("{}:line {}: {}", path_->string(), line_no, e.what()));
        }
    }
}

std::optional<CacheRecord> ResponseCache::find(const std::string& fingerprint) const {
    std::shared_lock lock(mutex_);
    auto it = records_.find(fingerprint);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::insert(const CacheRecord& record) {
    std::unique_lock lock(mutex_);
    if (path_) {
        if (path_->has_parent_path()) {
            std::error_code ec;
            std::filesystem::create_directories(path_->parent_path(), ec);
        }
        std::ofstream out(*path_, std::ios::binary | std::ios::app);
        if (!out) throw IoError(fmt::format("cannot append to cache '{}'", path_->string()));
        out << cache_record_to_json(record).dump() << '\n';
        out.flush();
        if (!out) throw IoError(fmt::format("failed writing cache '{}'", path_->string()));
    }
    records_.insert_or_assign(record.request_fingerprint, record);
}

std::size_t ResponseCache::size() const {
    std::shared_lock lock(mutex_);
    return records_.size();
}

// ---------------------------------------------------------------------------
// Wire format

nlohmann::ordered_json chat_request_body(const ProviderConfig& provider, const PromptBundle& bundle) {
    nlohmann::ordered_json body;
    body["model"] = provider.model_name;
    body["messages"] = nlohmann::ordered_json::array({
        {{"role", "system"}, {"content", bundle.system_message}},
        {{"role", "user"}, {"content", bundle.user_message}},
    });
    body["temperature"] = provider.temperature;
    body["max_tokens"] = provider.max_tokens;
    return body;
}

std::pair<std::string, std::optional<TokenUsage>> parse_chat_response(std::string_view body) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedResponseError(fmt::format("response is not JSON: {}", e.what()));
    }
    const auto choices = doc.find("choices");
    if (choices == doc.end() || !choices->is_array() || choices->empty()) {
        throw MalformedResponseError("response has no choices");
    }
    const auto& first = (*choices)[0];
    const auto message = first.find("message");
    if (message == first.end() || !message->is_object()) {
        throw MalformedResponseError("first choice has no message");
    }
    const auto content = message->find("content");
    if (content == message->end() || !content->is_string()) {
        throw MalformedResponseError("first choice has no completion text");
    }
    std::optional<TokenUsage> usage;
    if (auto u = doc.find("usage"); u != doc.end() && u->is_object()) {
        TokenUsage t;
        auto read = [&](const char* key, std::optional<std::int64_t>& dst) {
            if (auto it = u->find(key); it != u->end() && it->is_number_integer()) dst = it->get<std::int64_t>();
        };
        read("prompt_tokens", t.prompt_tokens);
        read("completion_tokens", t.completion_tokens);
        read("total_tokens", t.total_tokens);
        usage = t;
    }
    return {content->get<std::string>(), usage};
}

bool is_retryable_status(int status) noexcept {
    switch (status) {
    case 0:  // timeout or connection failure
    case 429:
    case 500:
    case 502:
    case 503:
    case 504:
        return true;
    default:
        return false;
    }
}

// ---------------------------------------------------------------------------
// Pacing

Sleeper real_sleeper() {
    return [](std::chrono::milliseconds d) {
        if (d.count() > 0) std::this_thread::sleep_for(d);
    };
}

std::string utc_now_iso8601() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                       tm.tm_hour, tm.tm_min, tm.tm_sec);
}

std::chrono::milliseconds backoff_delay(const BackoffPolicy& policy, int attempt, StreamRng& rng) {
    const double base = static_cast<double>(policy.initial.count()) * std::pow(policy.factor, attempt);
    const double ceiling = std::min(static_cast<double>(policy.cap.count()), base);
    return std::chrono::milliseconds(static_cast<std::int64_t>(std::floor(rng.uniform() * (ceiling + 1.0))));
}

RateLimiter::RateLimiter(double requests_per_minute, Sleeper sleeper, SteadyNow now)
    : interval_(requests_per_minute > 0.0
                    ? std::chrono::nanoseconds(static_cast<std::int64_t>(60e9 / requests_per_minute))
                    : std::chrono::nanoseconds(0)),
      sleeper_(std::move(sleeper)),
      now_(std::move(now)) {}

void RateLimiter::acquire() {
    if (interval_.count() == 0) return;
    std::chrono::steady_clock::time_point slot;
    std::chrono::steady_clock::time_point now;
    {
        std::lock_guard lock(mutex_);
        now = now_();
        slot = next_ ? std::max(now, *next_) : now;
        next_ = slot + interval_;
    }
    if (slot > now) {
        sleeper_(std::chrono::ceil<std::chrono::milliseconds>(slot - now));
    }
}

// ---------------------------------------------------------------------------
// Elicitor

namespace {

ElicitorHooks with_defaults(ElicitorHooks hooks) {
    if (!hooks.sleeper) hooks.sleeper = real_sleeper();
    if (!hooks.utc_now) hooks.utc_now = utc_now_iso8601;
    if (!hooks.steady_now) hooks.steady_now = [] { return std::chrono::steady_clock::now(); };
    if (!hooks.getenv) {
        hooks.getenv = [](const std::string& name) -> std::optional<std::string> {
            const char* v = std::getenv(name.c_str());
            if (v == nullptr) return std::nullopt;
            return std::string(v);
        };
    }
    return hooks;
}

std::string chat_url(std::string endpoint) {
    while (!endpoint.empty() && endpoint.back() == '/') endpoint.pop_back();
    return endpoint + "/chat/completions";
}

} // namespace

Elicitor::Elicitor(ProviderConfig provider, std::shared_ptr<HttpTransport> transport,
                   std::shared_ptr<ResponseCache> cache, ElicitorHooks hooks)
    : provider_(std::move(provider)),
      transport_(std::move(transport)),
      cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
      hooks_(with_defaults(std::move(hooks))),
      limiter_(provider_.rate_limit_rpm, hooks_.sleeper, hooks_.steady_now) {
    provider_.validate();
    if (transport_ && !provider_.api_key_env.empty()) {
        api_key_ = hooks_.getenv(provider_.api_key_env);
        if (!api_key_ || api_key_->empty()) {
            throw AuthenticationError(
                fmt::format("API key environment variable {} is not set", provider_.api_key_env));
        }
    }
}

CacheRecord Elicitor::elicit(const PromptBundle& bundle, std::uint32_t rep_index, std::uint32_t attempt) {
    const std::string fp = request_fingerprint(provider_, bundle, rep_index, attempt);
    if (auto hit = cache_->find(fp)) return *hit;
    if (replay()) {
        throw ReplayMissError(fmt::format("no recorded response for pair {} query {} rep {}", bundle.pair_id,
                                          to_string(bundle.query), rep_index));
    }

    HttpRequest request;
    request.url = chat_url(provider_.endpoint_url);
    request.body = chat_request_body(provider_, bundle).dump();
    request.headers.emplace_back("Content-Type", "application/json");
    if (api_key_) request.headers.emplace_back("Authorization", "Bearer " + *api_key_);
    request.timeout = provider_.request_timeout;

    // Jitter stream keyed by the fingerprint keeps backoff schedules reproducible.
    StreamRng jitter = StreamKey(0).add("backoff").add(fp).rng();
    int last_status = 0;
    std::string last_error;
    for (int try_index = 0; try_index <= provider_.max_retries; ++try_index) {
        limiter_.acquire();
        ++requests_;
        const HttpResponse response = transport_->post(request);
        last_status = response.status;
        last_error = response.status == 0 ? response.error : response.body.substr(0, 200);

        if (response.status == 200) {
            auto [text, usage] = parse_chat_response(response.body);
            CacheRecord record;
            record.request_fingerprint = fp;
            record.raw_text = std::move(text);
            record.http_status = 200;
            record.timestamp = hooks_.utc_now();
            record.token_usage = usage;
            record.retries = try_index;
            record.model = provider_.model_name;
            record.temperature = provider_.temperature;
            record.pair_id = bundle.pair_id;
            record.query = bundle.query;
            record.rep_index = rep_index;
            record.attempt = attempt;
            cache_->insert(record);
            return record;
        }
        if (response.status == 401 || response.status == 403) {
            throw AuthenticationError(fmt::format("endpoint rejected credentials (HTTP {})", response.status));
        }
        if (!is_retryable_status(response.status)) {
            throw NetworkError(fmt::format("HTTP {}: {}", response.status, last_error));
        }
        if (try_index < provider_.max_retries) {
            hooks_.sleeper(backoff_delay(hooks_.backoff, try_index, jitter));
        }
    }
    throw ExhaustedRetriesError(last_status, fmt::format("gave up after {} attempts; last status {} ({})",
                                                         provider_.max_retries + 1, last_status, last_error));
}

// ---------------------------------------------------------------------------
// Experiment

namespace {

struct Cell {
    const EventPair* pair = nullptr;
    QueryKind query = QueryKind::A;
    std::uint32_t rep = 0;
};

struct CellOutcome {
    std::optional<Judgment> judgment;
    std::optional<Exclusion> exclusion;
    std::vector<ReaskEvent> reasks;
};

} // namespace

ExperimentResult run_experiment(Elicitor& elicitor, const std::vector<EventPair>& catalog,
                                const ExperimentOptions& options) {
    if (options.reps == 0) throw ValidationError("experiment needs at least one repetition");
    if (options.reask > 2) throw ValidationError("at most two re-asks are allowed");
    const ProviderConfig& provider = elicitor.provider();
    const std::uint32_t reps =
        (options.collapse_reps_at_zero_temperature && provider.temperature == 0.0) ? 1 : options.reps;
    const Condition condition{provider.temperature, elicitor.replay() ? Source::replay : Source::live,
                              provider.model_name};

    std::vector<Cell> cells;
    for (const auto& pair : catalog) {
        for (QueryKind q : kAllQueries) {
            for (std::uint32_t r = 0; r < reps; ++r) cells.push_back({&pair, q, r});
        }
    }

    std::vector<CellOutcome> outcomes(cells.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr systemic;
    std::mutex systemic_mutex;

    auto process = [&](std::size_t i) {
        const Cell& cell = cells[i];
        CellOutcome& out = outcomes[i];
        const PromptBundle bundle = render_prompt(*cell.pair, cell.query, options.templates);
        Exclusion exclusion{cell.pair->id, cell.query, cell.rep, "", ""};
        try {
            std::string previous;
            for (std::uint32_t attempt = 0; attempt <= options.reask; ++attempt) {
                if (attempt > 0) out.reasks.push_back({cell.pair->id, cell.query, cell.rep, attempt, previous});
                const CacheRecord record = elicitor.elicit(bundle, cell.rep, attempt);
                const ParsedProbability parsed = parse_probability(record.raw_text);
                if (parsed.compliant()) {
                    Judgment j;
                    j.pair_id = cell.pair->id;
                    j.query = cell.query;
                    j.value = *parsed.value;
                    j.rep_index = cell.rep;
                    j.condition = condition;
                    j.raw_text = record.raw_text;
                    j.timestamp = record.timestamp;
                    out.judgment = std::move(j);
                    return;
                }
                previous = record.raw_text;
            }
            exclusion.reason = "noncompliant";
            exclusion.raw_text = previous;
        } catch (const AuthenticationError&) {
            throw;
        } catch (const ReplayMissError& e) {
            exclusion.reason = fmt::format("replay_miss: {}", e.what());
        } catch (const NetworkError& e) {
            exclusion.reason = fmt::format("network: {}", e.what());
        }
        out.exclusion = std::move(exclusion);
    };

    auto worker = [&] {
        for (;;) {
            if (abort.load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            try {
                process(i);
            } catch (...) {
                std::lock_guard lock(systemic_mutex);
                if (!systemic) systemic = std::current_exception();
                abort = true;
                return;
            }
        }
    };

    const auto n_threads = static_cast<std::size_t>(std::max(1, provider.max_parallel));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> threads;
        for (std::size_t t = 0; t < std::min(n_threads, cells.size()); ++t) threads.emplace_back(worker);
    }
    if (systemic) std::rethrow_exception(systemic);

    ExperimentResult result;
    result.cells_attempted = cells.size();
    std::vector<Judgment> judgments;
    for (auto& o : outcomes) {
        if (o.judgment) judgments.push_back(std::move(*o.judgment));
        if (o.exclusion) result.exclusions.push_back(std::move(*o.exclusion));
        for (auto& r : o.reasks) result.reasks.push_back(std::move(r));
    }
    result.table = JudgmentTable(catalog, std::move(judgments));
    return result;
}

std::string exclusions_to_csv(const std::vector<Exclusion>& exclusions) {
    std::string out = "pair_id,query,rep,reason,raw_text\n";
    for (const auto& e : exclusions) {
        out += csv::join({e.pair_id, std::string(to_string(e.query)), std::to_string(e.rep), e.reason, e.raw_text});
        out += '\n';
    }
    return out;
}

std::vector<Exclusion> exclusions_from_csv(std::string_view text) {
    const auto rows = csv::parse(text);
    const csv::Row header = {"pair_id", "query", "rep", "reason", "raw_text"};
    if (rows.empty() || rows.front().fields != header) {
        throw ValidationError("exclusion CSV header must be pair_id,query,rep,reason,raw_text");
    }
    std::vector<Exclusion> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i].fields;
        if (f.size() != 5) throw ValidationError(fmt::format("line {}: expected 5 fields", rows[i].line));
        std::uint32_t rep = 0;
        const auto [ptr, ec] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), rep);
        if (ec != std::errc() || ptr != f[2].data() + f[2].size()) {
            throw ValidationError(fmt::format("line {}: invalid rep '{}'", rows[i].line, f[2]));
        }
        out.push_back({f[0], parse_query(f[1]), rep, f[3], f[4]});
    }
    return out;
}

} // namespace probcoh

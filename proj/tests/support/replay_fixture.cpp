#include "replay_fixture.hpp"

#include <set>

#include <fmt/format.h>

#include "probcoh/catalog.hpp"
#include "probcoh/simulators.hpp"

namespace probcoh::fixture {

ProviderConfig provider() {
    ProviderConfig p;
    p.endpoint_url = "https://api.openai.com/v1";
    p.model_name = "gpt-4-0613";
    p.api_key_env = "";
    p.temperature = 1.0;
    return p;
}

std::vector<CacheRecord> records() {
    const ProviderConfig p = provider();
    const auto catalog = builtin_catalog();
    const auto thetas = random_thetas(catalog, kSeed);
    const SamplerParams sampler{10, 1.0};
    std::vector<CacheRecord> out;
    std::set<std::string> seen;
    for (const auto& pair : catalog) {
        for (QueryKind q : kAllQueries) {
            const PromptBundle bundle = render_prompt(pair, q);
            const double theta = event_probability(thetas.at(pair.id), q);
            for (std::uint32_t rep = 0; rep < kReps; ++rep) {
                StreamRng rng = judgment_stream(kSeed, pair.id, q, rep);
                const double value = bs_judge(theta, sampler, rng);
                const std::uint64_t style = StreamKey(kSeed).add("style").add(pair.id).add(index_of(q)).add(rep)
                                                .rng()
                                                .below(100);
                CacheRecord r;
                r.request_fingerprint = request_fingerprint(p, bundle, rep);
                // A repeated single-event prompt is the same request: keep the first answer.
                if (!seen.insert(r.request_fingerprint).second) continue;
                if (style < 2) {
                    r.raw_text = "I'm not able to give a precise probability for that.";
                } else if (style < 10) {
                    r.raw_text = fmt::format("{:.0f}%", value * 100.0);
                } else {
                    r.raw_text = fmt::format("{:.2f}", value);
                }
                r.http_status = 200;
                r.timestamp = fmt::format("2024-05-01T12:{:02d}:{:02d}Z", out.size() / 60 % 60, out.size() % 60);
                r.token_usage = TokenUsage{static_cast<std::int64_t>(bundle.user_message.size() / 4 + 60),
                                           static_cast<std::int64_t>(r.raw_text.size() / 4 + 1), std::nullopt};
                r.token_usage->total_tokens = *r.token_usage->prompt_tokens + *r.token_usage->completion_tokens;
                r.model = p.model_name;
                r.temperature = p.temperature;
                r.pair_id = pair.id;
                r.query = q;
                r.rep_index = rep;
                out.push_back(std::move(r));
            }
        }
    }
    return out;
}

std::string jsonl() {
    std::string out;
    for (const auto& r : records()) out += cache_record_to_json(r).dump() + "\n";
    return out;
}

} // namespace probcoh::fixture

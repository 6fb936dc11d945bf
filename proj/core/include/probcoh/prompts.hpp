#pragma once

// Prompt rendering for the six query forms. The wording of compound events
// lives in an editable template file (see data/prompt_templates.txt); the
// defaults compiled in here are identical to that file.

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

#include "probcoh/model.hpp"

namespace probcoh {

inline constexpr std::string_view kSystemMessage =
    "You will estimate probabilities of some real-world events. Respond only with a number "
    "corresponding to a probability between 0 and 1. Do not respond with any other text. We are "
    "interested in your subjective evaluation of the probability so just respond what you think.";

// Frames take {X}. Event phrases take {a}, {b} (verbatim) and {a_lc}, {b_lc}
// (first letter lower-cased).
struct PromptTemplates {
    std::string weather_frame;
    std::string politics_frame;
    std::array<std::string, 6> weather_events;   // indexed by QueryKind
    std::array<std::string, 6> politics_events;

    static const PromptTemplates& defaults();

    // "key = value" lines, '#' comments. Keys: weather.frame, politics.frame,
    // weather.<Query>, politics.<Query>. Missing keys keep their defaults.
    static PromptTemplates parse(std::string_view text);
    static PromptTemplates load(const std::filesystem::path& path);
    std::string to_text() const;

    bool operator==(const PromptTemplates&) const = default;
};

struct PromptBundle {
    std::string system_message;
    std::string user_message;
    std::string pair_id;
    QueryKind query = QueryKind::A;
};

PromptBundle render_prompt(const EventPair& pair, QueryKind query,
                           const PromptTemplates& templates = PromptTemplates::defaults());

} // namespace probcoh

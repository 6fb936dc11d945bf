#include "probcoh/prompts.hpp"

#include <cctype>

#include <fmt/format.h>

#include "probcoh/error.hpp"
#include "probcoh/io.hpp"

namespace probcoh {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

std::string lower_first(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
    return s;
}

} // namespace

const PromptTemplates& PromptTemplates::defaults() {
    static const PromptTemplates t{
        "What is the probability that the weather will be {X} on a randomly-selected day in England "
        "during the year 2025?",
        "What is the probability that {X} by the year 2025?",
        {"{a_lc}", "{b_lc}", "{a_lc} and {b_lc}", "{a_lc} and not {b_lc}", "{b_lc} and not {a_lc}",
         "{a_lc} or {b_lc}, or both"},
        {"{a}", "{b}", "{a} and {b}", "{a} but it is not the case that {b}",
         "{b} but it is not the case that {a}", "{a} or {b}, or both"},
    };
    return t;
}

PromptTemplates PromptTemplates::parse(std::string_view text) {
    PromptTemplates t = defaults();
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ValidationError(fmt::format("template line {}: expected 'key = value'", line_no));
        }
        const std::string_view key = trim(line.substr(0, eq));
        const std::string value(trim(line.substr(eq + 1)));
        if (key == "weather.frame") {
            t.weather_frame = value;
        } else if (key == "politics.frame") {
            t.politics_frame = value;
        } else {
            const auto dot = key.find('.');
            const std::string_view scope = key.substr(0, dot);
            if (dot == std::string_view::npos || (scope != "weather" && scope != "politics")) {
                throw ValidationError(fmt::format("template line {}: unknown key '{}'", line_no, key));
            }
            QueryKind q;
            try {
                q = parse_query(key.substr(dot + 1));
            } catch (const ValidationError&) {
                throw ValidationError(fmt::format("template line {}: unknown key '{}'", line_no, key));
            }
            (scope == "weather" ? t.weather_events : t.politics_events)[index_of(q)] = value;
        }
    }
    for (const auto* frame : {&t.weather_frame, &t.politics_frame}) {
        if (frame->find("{X}") == std::string::npos) throw ValidationError("template frame lacks {X}");
    }
    return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& path) {
    const std::string text = io::read_file(path);
    try {
        return parse(text);
    } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

std::string PromptTemplates::to_text() const {
    std::string out;
    out += "weather.frame = " + weather_frame + "\n";
    out += "politics.frame = " + politics_frame + "\n";
    for (QueryKind q : kAllQueries) {
        out += fmt::format("weather.{} = {}\n", to_string(q), weather_events[index_of(q)]);
    }
    for (QueryKind q : kAllQueries) {
        out += fmt::format("politics.{} = {}\n", to_string(q), politics_events[index_of(q)]);
    }
    return out;
}

PromptBundle render_prompt(const EventPair& pair, QueryKind query, const PromptTemplates& templates) {
    const bool weather = pair.category == Category::weather;
    std::string phrase = (weather ? templates.weather_events : templates.politics_events)[index_of(query)];
    phrase = replace_all(std::move(phrase), "{a_lc}", lower_first(pair.text_a));
    phrase = replace_all(std::move(phrase), "{b_lc}", lower_first(pair.text_b));
    phrase = replace_all(std::move(phrase), "{a}", pair.text_a);
    phrase = replace_all(std::move(phrase), "{b}", pair.text_b);
    std::string user = replace_all(weather ? templates.weather_frame : templates.politics_frame, "{X}", phrase);
    return {std::string(kSystemMessage), std::move(user), pair.id, query};
}

} // namespace probcoh

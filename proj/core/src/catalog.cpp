#include "probcoh/catalog.hpp"

#include <set>

#include <fmt/format.h>

#include "probcoh/csv.hpp"
#include "probcoh/error.hpp"
#include "probcoh/io.hpp"

namespace probcoh {

const std::vector<EventPair>& builtin_catalog() {
    static const std::vector<EventPair> catalog = [] {
        const std::vector<std::pair<const char*, const char*>> weather = {
            {"Rainy", "Cold"},    {"Cloudy", "Stormy"}, {"Chilly", "Thundery"},
            {"Hot", "Windy"},     {"Sunny", "Misty"},   {"Foggy", "Wet"},
            {"Freezing", "Humid"}, {"Drizzly", "Breezy"}, {"Hazy", "Warm"},
            {"Icy", "Snowy"},     {"Breezy", "Dry"},    {"Normal", "Typical"},
        };
        const std::vector<std::pair<const char*, const char*>> politics = {
            {"Britain left the EU", "Greece left the EU"},
            {"American cars increase", "Petrol price increases"},
            {"Climate change impacts American weather", "World greenhouse gas emissions are reduced"},
            {"The US is at war in the Middle East", "Major terrorist attack occurs in the US"},
            {"Europe grows poorer", "Unemployment in Europe rises above 20%"},
            {"Hurricanes and typhoons are more frequent", "Average world temperature increases"},
            {"Generative AI is a trillion-dollar market",
             "AI-designed antibiotics are available on prescription"},
            {"All television become Internet-based", "AI has made full-length movies"},
            {"Tech unemployment has risen", "The divide in income levels has expanded"},
            {"Cities ban fossil-fuel vehicles", "One-third of new cars are electric"},
            {"Depression becomes the No.1 disease burden", "Manufacturing jobs disappear in the West"},
            {"The majority of UK homes are rented", "Married couples are a minority in the UK"},
        };
        std::vector<EventPair> out;
        for (std::size_t i = 0; i < weather.size(); ++i) {
            out.push_back({fmt::format("w{:02}", i + 1), Category::weather, weather[i].first,
                           weather[i].second});
        }
        for (std::size_t i = 0; i < politics.size(); ++i) {
            out.push_back({fmt::format("p{:02}", i + 1), Category::politics, politics[i].first,
                           politics[i].second});
        }
        return out;
    }();
    return catalog;
}

void check_catalog(const std::vector<EventPair>& catalog) {
    std::set<std::string> ids;
    for (const auto& p : catalog) {
        if (p.id.empty()) throw ValidationError("event pair with empty id");
        if (!ids.insert(p.id).second) {
            throw ValidationError(fmt::format("duplicate event pair id '{}'", p.id));
        }
        if (p.text_a == p.text_b) {
            throw ValidationError(fmt::format("event pair '{}' has identical events", p.id));
        }
    }
}

std::vector<EventPair> parse_catalog_csv(std::string_view text) {
    const auto rows = csv::parse(text);
    if (rows.empty()) throw ValidationError("catalog CSV is empty");
    const csv::Row expected = {"id", "category", "text_a", "text_b"};
    if (rows.front().fields != expected) {
        throw ValidationError("catalog CSV header must be id,category,text_a,text_b");
    }
    std::vector<EventPair> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.fields.size() != 4) {
            throw ValidationError(fmt::format("line {}: expected 4 fields, got {}", r.line, r.fields.size()));
        }
        try {
            out.push_back({r.fields[0], parse_category(r.fields[1]), r.fields[2], r.fields[3]});
        } catch (const ValidationError& e) {
            throw ValidationError(fmt::format("line {}: {}", r.line, e.what()));
        }
    }
    check_catalog(out);
    return out;
}

std::vector<EventPair> load_catalog_csv(const std::filesystem::path& path) {
    try {
        return parse_catalog_csv(io::read_file(path));
    } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

std::string catalog_to_csv(const std::vector<EventPair>& catalog) {
    std::string out = "id,category,text_a,text_b\n";
    for (const auto& p : catalog) {
        out += csv::join({p.id, std::string(to_string(p.category)), p.text_a, p.text_b});
        out += '\n';
    }
    return out;
}

} // namespace probcoh

#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "probcoh/model.hpp"

namespace probcoh {

// The 24 event pairs (12 weather, 12 politics) used by the elicitation
// study. Ids are w01..w12 and p01..p12.
const std::vector<EventPair>& builtin_catalog();

// CSV with header id,category,text_a,text_b. Throws ValidationError on
// malformed rows, duplicate ids, or text_a == text_b.
std::vector<EventPair> parse_catalog_csv(std::string_view text);
std::vector<EventPair> load_catalog_csv(const std::filesystem::path& path);

std::string catalog_to_csv(const std::vector<EventPair>& catalog);

// Checks the EventPair invariants over a whole catalog.
void check_catalog(const std::vector<EventPair>& catalog);

} // namespace probcoh

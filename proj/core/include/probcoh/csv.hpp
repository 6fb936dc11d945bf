#pragma once

// Minimal RFC 4180 reader/writer: quoted fields, doubled quotes, CRLF or LF.

#include <string>
#include <string_view>
#include <vector>

namespace probcoh::csv {

using Row = std::vector<std::string>;

// Each row is paired with the 1-based line number where it starts.
struct ParsedRow {
    std::size_t line = 0;
    Row fields;
};

// Throws ValidationError on an unterminated quoted field. Blank lines are skipped.
std::vector<ParsedRow> parse(std::string_view text);

std::string escape(std::string_view field);
std::string join(const Row& row);

} // namespace probcoh::csv

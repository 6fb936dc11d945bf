#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace probcoh::io {

// Both throw IoError. write_file creates missing parent directories.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

} // namespace probcoh::io

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tracerag {

std::string read_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Writes via a sibling temp file and rename, so readers never see a torn file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

void append_line(const std::filesystem::path& path, const std::string& line);

}  // namespace tracerag

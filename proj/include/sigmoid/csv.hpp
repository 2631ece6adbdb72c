#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sigmoid {

// Shortest round-trip formatting of a double (up to 17 significant digits).
// All CSV output goes through this so reruns are byte-identical.
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

// Minimal CSV assembly: caller provides the header and rows of cells.
std::string csv_join(const std::vector<std::string>& cells);

}  // namespace sigmoid

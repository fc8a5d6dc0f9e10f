#pragma once

// Small string and file helpers shared by the library sources.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace scdf::detail {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string_view strip_bom(std::string_view s);

// Splits one CSV record. Double-quoted fields may contain commas; "" inside a
// quoted field is an escaped quote. Trailing '\r' is dropped.
std::vector<std::string> split_csv_line(std::string_view line);

int parse_int(std::string_view s);
// Plain decimal: optional sign, digits, optional fraction. No exponent.
double parse_decimal(std::string_view s);
bool is_plain_decimal(std::string_view s);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace scdf::detail

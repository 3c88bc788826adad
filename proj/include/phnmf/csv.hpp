#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace phnmf::csv {

/// Shortest decimal text that parses back to the same double; "inf" for +inf.
std::string format_number(double v);
double parse_number(std::string_view text);
long long parse_integer(std::string_view text);

/// Splits one line on commas. Fields never contain commas or quotes in the
/// files this library writes.
std::vector<std::string> split(std::string_view line);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Reads a whole CSV file; when expected_header is non-empty the first line
/// must match it exactly.
Table read(const std::filesystem::path& path, const std::vector<std::string>& expected_header = {});

/// Writes header + rows with '\n' line endings.
void write(const std::filesystem::path& path, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows);

}  // namespace phnmf::csv

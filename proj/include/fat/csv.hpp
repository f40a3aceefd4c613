#pragma once

#include <charconv>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace fat {

// Locale-independent serialization of a double with 17 significant digits
// (enough for an exact round trip).
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

// Locale-independent parse; rejects trailing garbage and non-finite values.
// `where` names the offending cell in error messages.
double parse_double(const std::string& cell, const std::string& where);

// Splits one CSV line on commas (no quoting: the formats here are purely
// numeric apart from header labels, which may not contain commas).
std::vector<std::string> split_csv_line(const std::string& line);

// Reads a whole CSV file into header + rows of cells. Skips a UTF-8 BOM and
// tolerates a missing trailing newline.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace fat

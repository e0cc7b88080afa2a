#pragma once

#include <string>
#include <vector>

namespace batlab {

/// Deterministic CSV writing: comma separator, '.' decimal point, header row,
/// LF endings, doubles rendered with %.17g so reruns are byte-identical.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
    std::string to_string() const;
};

std::string csv_double(double v);
std::string csv_int(long long v);

/// Write atomically: temp file in the same directory, then rename.
void write_file_atomic(const std::string& path, const std::string& content);

struct ParsedCsv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Throws std::runtime_error naming the line on malformed input.
ParsedCsv parse_csv(const std::string& content);

}  // namespace batlab

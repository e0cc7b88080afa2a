#include "batlab/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace batlab {

std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string csv_int(long long v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%lld", v);
    return buf;
}

std::string CsvTable::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out.push_back(',');
        out += header[i];
    }
    out.push_back('\n');
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out.push_back(',');
            out += row[i];
        }
        out.push_back('\n');
    }
    return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open for writing: " + tmp);
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) throw std::runtime_error("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("rename failed: " + path);
}

ParsedCsv parse_csv(const std::string& content) {
    ParsedCsv out;
    std::istringstream in(content);
    std::string line;
    long long lineno = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (lineno == 1) {
            width = cells.size();
            out.header = std::move(cells);
            continue;
        }
        if (cells.size() != width)
            throw std::runtime_error("malformed CSV at line " + std::to_string(lineno) +
                                     ": expected " + std::to_string(width) + " fields, got " +
                                     std::to_string(cells.size()));
        out.rows.push_back(std::move(cells));
    }
    if (out.header.empty()) throw std::runtime_error("malformed CSV at line 1: empty input");
    return out;
}

}  // namespace batlab

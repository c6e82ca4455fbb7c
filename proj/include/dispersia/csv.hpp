#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "dispersia/errors.hpp"

// CSV ingestion for observation series: comma delimiter, mandatory header
// row, decimal-point numerics. Quoted fields are honored so labels may
// contain commas.

namespace dispersia {

struct SeriesDataset {
    std::string label;
    std::vector<double> values;
    std::string source_path;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    return s.substr(b, e - b);
}

}  // namespace detail

inline SeriesDataset load_csv_series(const std::string& path, const std::string& column_name) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw data_error("'" + path + "' is empty");
    const auto header = detail::split_csv_line(line);
    std::size_t column = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (detail::trim(header[i]) == column_name) {
            column = i;
            break;
        }
    if (column == header.size())
        throw data_error("'" + path + "' has no column named '" + column_name + "'");

    SeriesDataset out;
    out.label = column_name;
    out.source_path = path;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw data_error("'" + path + "' row " + std::to_string(row) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(header.size()));
        const std::string cell = detail::trim(fields[column]);
        double value = 0.0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
        if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
            throw data_error("'" + path + "' row " + std::to_string(row) + " column '" +
                             column_name + "': cell '" + cell + "' is not numeric");
        if (!std::isfinite(value))
            throw data_error("'" + path + "' row " + std::to_string(row) + " column '" +
                             column_name + "': value must be finite");
        out.values.push_back(value);
    }
    if (out.values.empty()) throw data_error("'" + path + "' has no data rows");
    return out;
}

}  // namespace dispersia

#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "dispersia/errors.hpp"

// Rectangular report tables, renderable as aligned text (statistics shown
// with 4 decimals) or as CSV (full shortest round-trip precision).

namespace dispersia {

using ReportCell = std::variant<std::string, double, std::int64_t>;

struct ReportTable {
    std::string title;
    std::vector<std::string> columns;
    std::vector<std::vector<ReportCell>> rows;

    void add_row(std::vector<ReportCell> row) {
        if (row.size() != columns.size())
            throw parameter_error("ReportTable: row width " + std::to_string(row.size()) +
                                  " does not match " + std::to_string(columns.size()) +
                                  " columns");
        rows.push_back(std::move(row));
    }
};

enum class ReportFormat { text, csv };

namespace detail {

// Shortest decimal string that round-trips the double exactly.
inline std::string shortest_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return std::string(buf);
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string cell_text(const ReportCell& cell, bool full_precision) {
    struct Visitor {
        bool full;
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(double v) const { return full ? shortest_double(v) : fixed4(v); }
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
    };
    return std::visit(Visitor{full_precision}, cell);
}

}  // namespace detail

inline void emit_report(const ReportTable& table, ReportFormat format, std::ostream& out) {
    if (format == ReportFormat::csv) {
        for (std::size_t c = 0; c < table.columns.size(); ++c)
            out << (c ? "," : "") << detail::csv_escape(table.columns[c]);
        out << '\n';
        for (const auto& row : table.rows) {
            for (std::size_t c = 0; c < row.size(); ++c)
                out << (c ? "," : "") << detail::csv_escape(detail::cell_text(row[c], true));
            out << '\n';
        }
    } else {
        std::vector<std::vector<std::string>> rendered;
        rendered.reserve(table.rows.size());
        std::vector<std::size_t> width(table.columns.size());
        for (std::size_t c = 0; c < table.columns.size(); ++c) width[c] = table.columns[c].size();
        for (const auto& row : table.rows) {
            std::vector<std::string> cells;
            cells.reserve(row.size());
            for (std::size_t c = 0; c < row.size(); ++c) {
                cells.push_back(detail::cell_text(row[c], false));
                width[c] = std::max(width[c], cells.back().size());
            }
            rendered.push_back(std::move(cells));
        }
        if (!table.title.empty()) out << table.title << '\n';
        const std::size_t last = table.columns.empty() ? 0 : table.columns.size() - 1;
        auto pad = [&](const std::string& s, std::size_t w, bool is_last) {
            out << s;
            if (!is_last) out << std::string(w - s.size(), ' ');
        };
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            if (c) out << "  ";
            pad(table.columns[c], width[c], c == last);
        }
        out << '\n';
        for (const auto& cells : rendered) {
            for (std::size_t c = 0; c < cells.size(); ++c) {
                if (c) out << "  ";
                pad(cells[c], width[c], c == last);
            }
            out << '\n';
        }
    }
    if (!out) throw io_error("emit_report: write failed");
}

inline void emit_report(const ReportTable& table, ReportFormat format, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("emit_report: cannot open '" + path + "' for writing");
    emit_report(table, format, out);
}

}  // namespace dispersia

#pragma once

// Plain CSV tables with round-trippable number formatting.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace thilbert {

/// "%.17g", with nan/inf spelled the same on every platform.
inline std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

using Cell = std::variant<double, long long, std::string>;

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header))
    {
        if (header_.empty()) throw std::invalid_argument("CsvTable: empty header");
    }

    void add_row(std::vector<Cell> row)
    {
        if (row.size() != header_.size()) throw std::invalid_argument("CsvTable: row width does not match header");
        rows_.push_back(std::move(row));
    }

    const std::vector<std::string>& header() const { return header_; }
    std::size_t rows() const { return rows_.size(); }
    const std::vector<std::vector<Cell>>& data() const { return rows_; }

    std::string str() const
    {
        std::string out;
        auto line = [&](const auto& cells, auto&& fmt) {
            for (std::size_t k = 0; k < cells.size(); ++k) {
                if (k > 0) out += ',';
                out += fmt(cells[k]);
            }
            out += '\n';
        };
        line(header_, [](const std::string& s) { return quote(s); });
        for (const auto& r : rows_) {
            line(r, [](const Cell& c) {
                if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
                if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
                return quote(std::get<std::string>(c));
            });
        }
        return out;
    }

    void write(const std::string& path) const
    {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("CsvTable: cannot open " + path);
        os << str();
        if (!os) throw std::runtime_error("CsvTable: write failed for " + path);
    }

private:
    static std::string quote(const std::string& s)
    {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + '"';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

}  // namespace thilbert

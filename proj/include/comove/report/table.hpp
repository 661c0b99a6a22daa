#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "comove/error.hpp"

namespace comove::report {

struct Column {
    std::string name;
    std::string type;  // "string" | "number" | "integer" | "date" | "boolean"
    std::string description;
};

/// Fixed-precision rendering shared by every table; NaN/inf are written as "NA".
inline std::string num(double v) {
    if (!std::isfinite(v)) return "NA";
    if (v == 0.0) return "0";
    return fmt::format("{:.10g}", v);
}

inline std::string integer(std::size_t v) { return std::to_string(v); }

/// A CSV table with one header line; fields are quoted only when needed.
class Table {
public:
    Table(std::string name, std::string description, std::vector<Column> columns)
        : name_(std::move(name)), description_(std::move(description)), columns_(std::move(columns)) {}

    void add(std::vector<std::string> row) {
        if (row.size() != columns_.size())
            throw InvalidInput("table " + name_ + ": row has " + std::to_string(row.size()) + " fields, expected " +
                               std::to_string(columns_.size()));
        rows_.push_back(std::move(row));
    }

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] const std::vector<Column>& columns() const { return columns_; }
    [[nodiscard]] std::size_t size() const { return rows_.size(); }
    [[nodiscard]] const std::vector<std::vector<std::string>>& rows() const { return rows_; }

    [[nodiscard]] std::string csv() const {
        std::string out;
        auto line = [&](const std::vector<std::string>& fields) {
            for (std::size_t i = 0; i < fields.size(); ++i) {
                if (i) out += ',';
                out += quote(fields[i]);
            }
            out += '\n';
        };
        std::vector<std::string> header;
        for (const auto& c : columns_) header.push_back(c.name);
        line(header);
        for (const auto& r : rows_) line(r);
        return out;
    }

    /// Sidecar schema document (JSON text).
    [[nodiscard]] std::string schema_json() const {
        std::string out = "{\n  \"table\": \"" + escape(name_) + "\",\n  \"description\": \"" + escape(description_) +
                          "\",\n  \"columns\": [\n";
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            out += "    {\"name\": \"" + escape(columns_[i].name) + "\", \"type\": \"" + escape(columns_[i].type) +
                   "\", \"description\": \"" + escape(columns_[i].description) + "\"}";
            out += i + 1 < columns_.size() ? ",\n" : "\n";
        }
        out += "  ]\n}\n";
        return out;
    }

private:
    static std::string quote(std::string_view s) {
        if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + '"';
    }

    static std::string escape(std::string_view s) {
        std::string e;
        for (char c : s) {
            if (c == '"' || c == '\\') e += '\\';
            e += c;
        }
        return e;
    }

    std::string name_;
    std::string description_;
    std::vector<Column> columns_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace comove::report

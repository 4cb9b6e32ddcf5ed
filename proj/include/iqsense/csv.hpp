#pragma once

// Tabular reports and their CSV / JSON renderings.
//
// CSV layout: provenance as leading "# key: value" lines, then for each table
// a "# table: <name>" line, the header row, the data rows and a blank line.
// Fields are quoted RFC-4180 style only when they need it. Numbers use the
// shortest round-trip representation with '.' as decimal separator.

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace iqsense {

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    /// Appends a row; throws std::invalid_argument on a column-count mismatch.
    void add(std::vector<Cell> row);
    /// Index of a column by name; throws std::out_of_range.
    std::size_t column(const std::string &name) const;
};

struct Report {
    std::string command;
    std::vector<std::pair<std::string, std::string>> provenance;
    std::vector<Table> tables;
    std::vector<std::string> notes;
    bool verified = true;

    const Table &table(const std::string &name) const;
};

std::string format_number(double v);
std::string format_cell(const Cell &c);
std::string csv_escape(const std::string &field);

void write_csv(std::ostream &out, const Report &report);
void write_json(std::ostream &out, const Report &report);

} // namespace iqsense

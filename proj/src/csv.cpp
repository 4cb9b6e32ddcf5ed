#include "iqsense/csv.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace iqsense {

void Table::add(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
        throw std::invalid_argument("table '" + name + "': row has " + std::to_string(row.size()) +
                                    " cells, expected " + std::to_string(columns.size()));
    }
    rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string &col) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == col) {
            return i;
        }
    }
    throw std::out_of_range("table '" + name + "' has no column '" + col + "'");
}

const Table &Report::table(const std::string &table_name) const {
    for (const auto &t : tables) {
        if (t.name == table_name) {
            return t;
        }
    }
    throw std::out_of_range("report has no table '" + table_name + "'");
}

std::string format_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    if (v == 0.0) {
        return "0"; // folds -0
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_cell(const Cell &c) {
    return std::visit(
        [](const auto &v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
                return format_number(v);
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(v);
            } else {
                return v;
            }
        },
        c);
}

std::string csv_escape(const std::string &field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') {
            out += '"';
        }
        out += ch;
    }
    out += '"';
    return out;
}

void write_csv(std::ostream &out, const Report &report) {
    for (const auto &[key, value] : report.provenance) {
        out << "# " << key << ": " << value << '\n';
    }
    for (const auto &note : report.notes) {
        out << "# note: " << note << '\n';
    }
    for (const auto &t : report.tables) {
        out << "# table: " << t.name << '\n';
        for (std::size_t i = 0; i < t.columns.size(); ++i) {
            out << (i ? "," : "") << csv_escape(t.columns[i]);
        }
        out << '\n';
        for (const auto &row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                out << (i ? "," : "") << csv_escape(format_cell(row[i]));
            }
            out << '\n';
        }
        out << '\n';
    }
}

void write_json(std::ostream &out, const Report &report) {
    using ordered_json = nlohmann::ordered_json;
    ordered_json j;
    j["command"] = report.command;
    ordered_json prov = ordered_json::object();
    for (const auto &[key, value] : report.provenance) {
        prov[key] = value;
    }
    j["provenance"] = prov;
    j["notes"] = report.notes;
    j["verified"] = report.verified;
    ordered_json tables = ordered_json::array();
    for (const auto &t : report.tables) {
        ordered_json tj;
        tj["name"] = t.name;
        tj["columns"] = t.columns;
        ordered_json rows = ordered_json::array();
        for (const auto &row : t.rows) {
            ordered_json r = ordered_json::array();
            for (const auto &c : row) {
                std::visit(
                    [&](const auto &v) {
                        using T = std::decay_t<decltype(v)>;
                        if constexpr (std::is_same_v<T, double>) {
                            // JSON has no inf/nan literals.
                            if (std::isfinite(v)) {
                                r.push_back(v);
                            } else {
                                r.push_back(format_number(v));
                            }
                        } else {
                            r.push_back(v);
                        }
                    },
                    c);
            }
            rows.push_back(std::move(r));
        }
        tj["rows"] = std::move(rows);
        tables.push_back(std::move(tj));
    }
    j["tables"] = std::move(tables);
    out << j.dump(2) << '\n';
}

} // namespace iqsense

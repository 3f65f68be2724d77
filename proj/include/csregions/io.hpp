#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace csregions::io {

/// Doubles serialize with 12 significant digits, '.' decimal separator, no
/// locale dependence.
inline std::string format_g12(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return std::string(buf);
}

/// Round a double to its 12-significant-digit representation so that CSV and
/// JSON emit identical values.
inline double round_g12(double value) { return std::stod(format_g12(value)); }

/// Column-ordered table that serializes identically to CSV and JSON: the JSON
/// form is an array of objects with exactly the CSV header's field names.
/// Absent optional values are empty CSV fields / JSON nulls.
struct Table {
    std::vector<std::string> columns;
    std::vector<nlohmann::ordered_json> rows;
    std::vector<std::string> comments;  // CSV "# ..." lines, before the header

    nlohmann::ordered_json& add_row() {
        rows.emplace_back(nlohmann::ordered_json::object());
        return rows.back();
    }
};

inline std::string cell_to_csv(const nlohmann::ordered_json& cell) {
    if (cell.is_null()) return "";
    if (cell.is_boolean()) return cell.get<bool>() ? "true" : "false";
    if (cell.is_number_float()) return format_g12(cell.get<double>());
    if (cell.is_number_integer()) return std::to_string(cell.get<long long>());
    if (cell.is_number_unsigned()) return std::to_string(cell.get<unsigned long long>());
    return cell.get<std::string>();
}

inline void write_csv(const Table& table, std::ostream& out) {
    for (const auto& comment : table.comments) out << "# " << comment << "\n";
    for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
    out << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            if (c) out << ",";
            const auto it = row.find(table.columns[c]);
            if (it != row.end()) out << cell_to_csv(*it);
        }
        out << "\n";
    }
}

inline void write_json(const Table& table, std::ostream& out) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) arr.push_back(row);
    out << arr.dump(2) << "\n";
}

inline void write_table(const Table& table, std::ostream& out, const std::string& format) {
    if (format == "csv")
        write_csv(table, out);
    else if (format == "json")
        write_json(table, out);
    else
        throw std::invalid_argument("unknown output format: " + format);
}

struct ParsedCsv {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

/// Reads back the CSV dialect emitted by write_csv (no quoting; '#' comments).
inline ParsedCsv parse_csv(std::istream& in) {
    ParsedCsv parsed;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (line.back() == ',') fields.push_back("");
        if (!have_header) {
            parsed.columns = fields;
            have_header = true;
        } else {
            parsed.rows.push_back(fields);
        }
    }
    return parsed;
}

}  // namespace csregions::io

// serialize.cpp — CSV and JSON file I/O with pinned numeric formatting

#include "qsl/serialize.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qsl {

std::string format_double(double x) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", x);
    return buffer;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    auto write_row = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) {
                out << ',';
            }
            out << cells[i];
        }
        out << '\n';
    };
    write_row(header);
    for (const auto& row : rows) {
        if (row.size() != header.size()) {
            throw std::logic_error("CSV row width does not match header in " + path);
        }
        write_row(row);
    }
    if (!out) {
        throw std::runtime_error("write to " + path + " failed");
    }
}

std::vector<std::string> numeric_row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) {
        cells.push_back(format_double(v));
    }
    return cells;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path + " for reading");
    }
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                cells.push_back(line.substr(start));
                return cells;
            }
            cells.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
    };

    CsvTable table;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        auto cells = split(line);
        if (line_number == 1) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw std::runtime_error(path + ":" + std::to_string(line_number) + ": expected " +
                                     std::to_string(table.header.size()) + " columns, found " +
                                     std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (table.header.empty()) {
        throw std::runtime_error(path + ":1: missing header row");
    }
    return table;
}

double parse_csv_double(const std::string& cell, const std::string& path, int line) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = first + cell.size();
    auto [end, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || end != last) {
        throw std::runtime_error(path + ":" + std::to_string(line) + ": cannot parse '" + cell +
                                 "' as a number");
    }
    return value;
}

void write_field_csv(const std::string& path, const ControlField& field) {
    field.validate();
    const double dt = field.grid.dt();
    std::vector<std::vector<std::string>> rows;
    rows.reserve(field.values.size());
    for (std::size_t j = 0; j < field.values.size(); ++j) {
        rows.push_back({format_double(j * dt), format_double(field.values[j])});
    }
    write_csv(path, {"t", "lambda"}, rows);
}

ControlField read_field_csv(const std::string& path) {
    const CsvTable table = read_csv(path);
    if (table.header.size() < 2) {
        throw std::runtime_error(path + ":1: field table needs t and lambda columns");
    }
    const int m = static_cast<int>(table.rows.size());
    if (m < 2) {
        throw std::runtime_error(path + ": field table needs at least 2 samples");
    }

    std::vector<double> times(m);
    std::vector<double> values(m);
    for (int j = 0; j < m; ++j) {
        times[j] = parse_csv_double(table.rows[j][0], path, j + 2);
        values[j] = parse_csv_double(table.rows[j][1], path, j + 2);
    }
    const double dt = times[1] - times[0];
    if (!(dt > 0.0)) {
        throw std::runtime_error(path + ": time column must increase");
    }
    for (int j = 0; j < m; ++j) {
        if (std::abs(times[j] - j * dt) > 1e-9 * std::max(1.0, times[m - 1])) {
            throw std::runtime_error(path + ":" + std::to_string(j + 2) +
                                     ": time column is not uniformly spaced");
        }
    }

    ControlField field{TimeGrid{m * dt, m}, std::move(values)};
    field.validate();
    return field;
}

void write_json_file(const std::string& path, const nlohmann::json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out << doc.dump(2) << '\n';
    if (!out) {
        throw std::runtime_error("write to " + path + " failed");
    }
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path + " for reading");
    }
    return nlohmann::json::parse(in);
}

}  // namespace qsl

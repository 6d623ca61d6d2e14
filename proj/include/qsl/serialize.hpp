// serialize.hpp — CSV and JSON file I/O with pinned numeric formatting

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qsl/dynamics.hpp"

namespace qsl {

// 17 significant digits, enough to round-trip any double exactly.
std::string format_double(double x);

// Header row plus pre-formatted cells, UTF-8, LF line endings.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::vector<std::string> numeric_row(const std::vector<double>& values);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Parse errors carry the path and 1-based line number.
CsvTable read_csv(const std::string& path);

double parse_csv_double(const std::string& cell, const std::string& path, int line);

// Field samples as (t, lambda) rows, one per interval left edge.
void write_field_csv(const std::string& path, const ControlField& field);
ControlField read_field_csv(const std::string& path);

void write_json_file(const std::string& path, const nlohmann::json& doc);
nlohmann::json read_json_file(const std::string& path);

}  // namespace qsl

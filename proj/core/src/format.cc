// Copyright 2026 The sgdlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sgdlab/format.h"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "sgdlab/errors.h"

namespace sgdlab {

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  // Shortest representation that parses back to the same double.
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

double ParseDouble(const std::string& token) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw ParseError("not a number: '" + token + "'");
  }
  return v;
}

void Table::AddRow(std::vector<double> row) {
  if (row.size() != columns.size()) {
    throw DimensionError("Table::AddRow: row width does not match header");
  }
  rows.push_back(std::move(row));
}

std::vector<double> Table::Column(const std::string& name) const {
  for (size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] != name) continue;
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row[j]);
    return out;
  }
  throw Error("table has no column '" + name + "'");
}

void WriteCsv(const Table& table, std::ostream& out) {
  for (size_t j = 0; j < table.columns.size(); ++j) {
    out << (j ? ", " : "") << table.columns[j];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (size_t j = 0; j < row.size(); ++j) {
      out << (j ? ", " : "") << FormatDouble(row[j]);
    }
    out << '\n';
  }
}

void WriteCsvFile(const Table& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  WriteCsv(table, out);
  if (!out) throw Error("write to '" + path + "' failed");
}

namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  return fields;
}

}  // namespace

Table ReadCsv(std::istream& in) {
  Table table;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("csv: empty input");
  table.columns = SplitCsvLine(line);
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = SplitCsvLine(line);
    if (fields.size() != table.columns.size()) {
      throw ParseError("csv: ragged row '" + line + "'");
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(ParseDouble(f));
    table.rows.push_back(std::move(row));
  }
  return table;
}

Table ReadCsvFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return ReadCsv(in);
}

}  // namespace sgdlab

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

#ifndef SGDLAB_FORMAT_H_
#define SGDLAB_FORMAT_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace sgdlab {

// Shortest text that parses back to the same double; "nan", "inf", "-inf"
// for non-finite values.
std::string FormatDouble(double v);

// Parses a full token as a double. Throws ParseError on trailing garbage.
double ParseDouble(const std::string& token);

// A numeric table with named columns, written as CSV.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void AddRow(std::vector<double> row);
  // Column `name` as a vector. Throws if absent.
  std::vector<double> Column(const std::string& name) const;
};

void WriteCsv(const Table& table, std::ostream& out);
void WriteCsvFile(const Table& table, const std::string& path);
Table ReadCsv(std::istream& in);
Table ReadCsvFile(const std::string& path);

}  // namespace sgdlab

#endif  // SGDLAB_FORMAT_H_

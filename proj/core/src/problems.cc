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

#include "sgdlab/problems.h"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "sgdlab/errors.h"
#include "sgdlab/format.h"

namespace sgdlab {
namespace {

void FillGaussian(Mat& m, RngStream& rng) {
  // Row-major fill order, so the draw sequence matches a row-by-row sample.
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.Normal();
  }
}

void WriteRow(std::ostream& out, const double* data, Eigen::Index size,
              Eigen::Index stride) {
  for (Eigen::Index j = 0; j < size; ++j) {
    if (j > 0) out << ' ';
    out << FormatDouble(data[j * stride]);
  }
  out << '\n';
}

std::vector<double> ReadNumbers(const std::string& line) {
  std::vector<double> values;
  std::istringstream is(line);
  std::string token;
  while (is >> token) values.push_back(ParseDouble(token));
  return values;
}

bool NextDataLine(std::istream& in, std::string* line) {
  while (std::getline(in, *line)) {
    const auto first = line->find_first_not_of(" \t\r");
    if (first != std::string::npos && (*line)[first] != '#') return true;
  }
  return false;
}

}  // namespace

const char* RegimeName(Regime regime) {
  return regime == Regime::kOverparameterized ? "over" : "under";
}

Regime ParseRegime(const std::string& name) {
  if (name == "over") return Regime::kOverparameterized;
  if (name == "under") return Regime::kUnderparameterized;
  throw ParseError("unknown regime '" + name + "'");
}

Dataset MakeDataset(Mat x, Vec y, std::optional<Vec> beta_star) {
  CheckSize(y, x.rows(), "MakeDataset: Y");
  if (x.rows() == 0 || x.cols() == 0) {
    throw DimensionError("MakeDataset: X must be non-empty");
  }
  if (beta_star) CheckSize(*beta_star, x.cols(), "MakeDataset: beta*");
  Dataset ds;
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.rows()));
  ds.xbar = x * scale;
  ds.ybar = y * scale;
  ds.regime = x.cols() > x.rows() ? Regime::kOverparameterized
                                  : Regime::kUnderparameterized;
  ds.x = std::move(x);
  ds.y = std::move(y);
  ds.beta_star = std::move(beta_star);
  return ds;
}

Dataset GenSparseRegression(int n, int d, int s, RngStream& rng) {
  if (n <= 0 || d <= 0) throw DomainError("GenSparseRegression: n, d > 0");
  if (s < 0 || s > d) throw DomainError("GenSparseRegression: need s <= d");
  Mat x(n, d);
  FillGaussian(x, rng);
  Vec beta = Vec::Zero(d);
  for (int j : rng.SampleWithoutReplacement(d, s)) {
    double v = 0.0;
    while (v == 0.0) v = rng.Normal();
    beta(j) = v;
  }
  Vec y = x * beta;
  return MakeDataset(std::move(x), std::move(y), std::move(beta));
}

Dataset GenUnderparamRegression(int n, int d, double label_noise,
                                RngStream& rng) {
  if (d <= 0 || n <= d) {
    throw DomainError("GenUnderparamRegression: need n > d > 0");
  }
  if (!(label_noise >= 0.0)) {
    throw DomainError("GenUnderparamRegression: label_noise must be >= 0");
  }
  Mat x(n, d);
  FillGaussian(x, rng);
  Vec beta(d);
  rng.FillNormal(beta);
  Vec noise(n);
  rng.FillNormal(noise);
  Vec y = x * beta + label_noise * noise;
  return MakeDataset(std::move(x), std::move(y), std::move(beta));
}

double DefaultStepSize(const Dataset& ds) {
  return 1.0 / (1.3 * SpectralNorm(ds.xbar * ds.xbar.transpose()));
}

void WriteDataset(const Dataset& ds, std::ostream& out) {
  out << ds.n() << ' ' << ds.d() << ' ' << RegimeName(ds.regime) << '\n';
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
    WriteRow(out, &ds.x(i, 0), ds.x.cols(), ds.x.outerStride());
  }
  WriteRow(out, ds.y.data(), ds.y.size(), 1);
  if (ds.beta_star) WriteRow(out, ds.beta_star->data(), ds.d(), 1);
}

Dataset ReadDataset(std::istream& in) {
  std::string line;
  if (!NextDataLine(in, &line)) throw ParseError("dataset: missing header");
  std::istringstream header(line);
  int n = 0, d = 0;
  std::string regime;
  if (!(header >> n >> d >> regime) || n <= 0 || d <= 0) {
    throw ParseError("dataset: bad header '" + line + "'");
  }
  Mat x(n, d);
  for (int i = 0; i < n; ++i) {
    if (!NextDataLine(in, &line)) throw ParseError("dataset: truncated X");
    const auto row = ReadNumbers(line);
    if (static_cast<int>(row.size()) != d) {
      throw ParseError("dataset: X row " + std::to_string(i) + " has " +
                       std::to_string(row.size()) + " entries");
    }
    for (int j = 0; j < d; ++j) x(i, j) = row[j];
  }
  if (!NextDataLine(in, &line)) throw ParseError("dataset: missing Y");
  const auto yv = ReadNumbers(line);
  if (static_cast<int>(yv.size()) != n) throw ParseError("dataset: bad Y");
  Vec y = Eigen::Map<const Vec>(yv.data(), n);
  std::optional<Vec> beta;
  if (NextDataLine(in, &line)) {
    const auto bv = ReadNumbers(line);
    if (static_cast<int>(bv.size()) != d) {
      throw ParseError("dataset: bad beta* line");
    }
    beta = Eigen::Map<const Vec>(bv.data(), d);
  }
  Dataset ds = MakeDataset(std::move(x), std::move(y), std::move(beta));
  if (ParseRegime(regime) != ds.regime) {
    throw ParseError("dataset: regime '" + regime + "' does not match shape");
  }
  return ds;
}

void SaveDataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  WriteDataset(ds, out);
  if (!out) throw Error("write to '" + path + "' failed");
}

Dataset LoadDataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return ReadDataset(in);
}

}  // namespace sgdlab

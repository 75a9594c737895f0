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

#ifndef SGDLAB_PROBLEMS_H_
#define SGDLAB_PROBLEMS_H_

#include <iosfwd>
#include <optional>
#include <string>

#include "sgdlab/linalg.h"
#include "sgdlab/rng.h"

namespace sgdlab {

enum class Regime { kUnderparameterized, kOverparameterized };

const char* RegimeName(Regime regime);
Regime ParseRegime(const std::string& name);

// Linear regression instance. `xbar` and `ybar` are X / sqrt(n) and
// Y / sqrt(n); `beta_star` is the generating (sparse) vector when known.
struct Dataset {
  Mat x;
  Vec y;
  Mat xbar;
  Vec ybar;
  std::optional<Vec> beta_star;
  Regime regime = Regime::kOverparameterized;

  int n() const { return static_cast<int>(x.rows()); }
  int d() const { return static_cast<int>(x.cols()); }
};

// Builds a Dataset from X and Y, filling in the scaled copies. The regime is
// overparameterized when d > n.
Dataset MakeDataset(Mat x, Vec y, std::optional<Vec> beta_star = std::nullopt);

// Gaussian design, s-sparse beta* with N(0,1) nonzeros on a uniformly random
// support, noiseless labels Y = X beta*.
Dataset GenSparseRegression(int n, int d, int s, RngStream& rng);

// Gaussian design and beta*, Y = X beta* + label_noise * xi. Requires n > d.
Dataset GenUnderparamRegression(int n, int d, double label_noise,
                                RngStream& rng);

// gamma = 1 / (1.3 * ||Xbar Xbar^T||_2).
double DefaultStepSize(const Dataset& ds);

// Plain text format: "n d regime" header, n rows of X, one line of Y, and an
// optional line with beta*. Doubles are written with 17 significant digits so
// a round trip is exact.
void WriteDataset(const Dataset& ds, std::ostream& out);
Dataset ReadDataset(std::istream& in);
void SaveDataset(const Dataset& ds, const std::string& path);
Dataset LoadDataset(const std::string& path);

}  // namespace sgdlab

#endif  // SGDLAB_PROBLEMS_H_

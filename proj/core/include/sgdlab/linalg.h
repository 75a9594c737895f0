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

#ifndef SGDLAB_LINALG_H_
#define SGDLAB_LINALG_H_

#include <Eigen/Dense>

namespace sgdlab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Relative singular value cutoff used by the pseudo-inverse and projector.
inline constexpr double kRankCutoff = 1e-12;

// Minimum Euclidean norm solution of X theta = Y (least-squares solution when
// X has full column rank). Singular values below kRankCutoff * sigma_max are
// treated as zero.
Vec MinNormSolve(const Mat& x, const Vec& y);

// Solves Bm W + W Bm = 2 D for symmetric positive definite Bm and symmetric D.
// Throws DomainError when Bm is not symmetric positive definite.
Mat SolveLyapunov(const Mat& bm, const Mat& d);

// Orthogonal projector onto span of the rows of X (a d x d matrix).
Mat RowSpaceProjector(const Mat& x);

// Largest singular value.
double SpectralNorm(const Mat& m);

// Throws DimensionError with `what` unless rows/cols match.
void CheckShape(const Mat& m, Eigen::Index rows, Eigen::Index cols,
                const char* what);
void CheckSize(const Vec& v, Eigen::Index size, const char* what);

}  // namespace sgdlab

#endif  // SGDLAB_LINALG_H_

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

#include "sgdlab/linalg.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "sgdlab/errors.h"

namespace sgdlab {
namespace {

std::string ShapeString(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

void CheckShape(const Mat& m, Eigen::Index rows, Eigen::Index cols,
                const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string(what) + ": expected " +
                         ShapeString(rows, cols) + ", got " +
                         ShapeString(m.rows(), m.cols()));
  }
}

void CheckSize(const Vec& v, Eigen::Index size, const char* what) {
  if (v.size() != size) {
    throw DimensionError(std::string(what) + ": expected length " +
                         std::to_string(size) + ", got " +
                         std::to_string(v.size()));
  }
}

Vec MinNormSolve(const Mat& x, const Vec& y) {
  CheckSize(y, x.rows(), "MinNormSolve: Y");
  if (x.size() == 0) return Vec::Zero(x.cols());
  Eigen::JacobiSVD<Mat> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const double cutoff = kRankCutoff * s(0);
  Vec coeff = svd.matrixU().transpose() * y;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    coeff(i) = s(i) > cutoff ? coeff(i) / s(i) : 0.0;
  }
  return svd.matrixV() * coeff;
}

Mat SolveLyapunov(const Mat& bm, const Mat& d) {
  const Eigen::Index n = bm.rows();
  CheckShape(bm, n, n, "SolveLyapunov: Bm");
  CheckShape(d, n, n, "SolveLyapunov: D");
  if (n == 0) return Mat(0, 0);
  const double scale = std::max(1.0, bm.cwiseAbs().maxCoeff());
  if ((bm - bm.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DomainError("SolveLyapunov: Bm is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(bm);
  if (eig.info() != Eigen::Success) {
    throw DomainError("SolveLyapunov: eigendecomposition failed");
  }
  const Vec& lambda = eig.eigenvalues();
  if (!(lambda(0) > 1e-12 * std::max(1.0, lambda(n - 1)))) {
    throw DomainError("SolveLyapunov: Bm is not positive definite");
  }
  const Mat& q = eig.eigenvectors();
  Mat c = q.transpose() * d * q;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      c(i, j) *= 2.0 / (lambda(i) + lambda(j));
    }
  }
  return q * c * q.transpose();
}

Mat RowSpaceProjector(const Mat& x) {
  const Eigen::Index d = x.cols();
  if (x.size() == 0) return Mat::Zero(d, d);
  Eigen::JacobiSVD<Mat> svd(x, Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const double cutoff = kRankCutoff * s(0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;
  const auto v = svd.matrixV().leftCols(rank);
  return v * v.transpose();
}

double SpectralNorm(const Mat& m) {
  if (m.size() == 0) throw DimensionError("SpectralNorm: empty matrix");
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

}  // namespace sgdlab

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

#ifndef SGDLAB_PARALLEL_H_
#define SGDLAB_PARALLEL_H_

#include <functional>
#include <vector>

namespace sgdlab {

// Number of worker threads to use when the caller passes 0.
int DefaultWorkers();

// Runs fn(0), ..., fn(count - 1) on up to `workers` threads (0 = default).
// Tasks are claimed dynamically; results must be written to per-index slots.
// If any task throws, the exception of the lowest failing index is rethrown
// after all workers have stopped.
void ParallelFor(int count, int workers, const std::function<void(int)>& fn);

// Sum that does not depend on the order of `values`: the values are sorted
// and added with Neumaier compensation.
double OrderIndependentSum(std::vector<double> values);
double OrderIndependentMean(std::vector<double> values);

}  // namespace sgdlab

#endif  // SGDLAB_PARALLEL_H_

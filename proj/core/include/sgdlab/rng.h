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

#ifndef SGDLAB_RNG_H_
#define SGDLAB_RNG_H_

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace sgdlab {

// Roles used to derive independent streams for one trajectory. Each source of
// randomness in a run draws from its own stream so that switching a noise
// source off does not shift the others.
enum class StreamRole : std::uint32_t {
  kData = 0,
  kBatch = 1,        // minibatch indices
  kGradient = 2,     // Brownian increments standing in for SGD noise
  kLabel = 3,        // additive label noise in the data generator
  kNoisePlus = 4,    // injected noise, w+ (or the only injected noise)
  kNoiseMinus = 5,   // injected noise, w-
};

// Counter-based generator (Philox4x32-10). The 64-bit seed is the key; the
// stream id occupies the upper two counter words, so distinct ids give
// non-overlapping sequences.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  // Stream for `role` of trajectory `trajectory` under `seed`.
  static RngStream For(std::uint64_t seed, std::uint64_t trajectory,
                       StreamRole role);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  // Number of 128-bit blocks generated so far.
  std::uint64_t counter() const { return counter_; }

  std::uint64_t NextU64();
  // Uniform on the open interval (0, 1), 53-bit resolution.
  double Uniform();
  double Normal();
  // Fills `out` with i.i.d. N(0, 1) draws.
  void FillNormal(Eigen::Ref<Eigen::VectorXd> out);
  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t UniformInt(std::uint64_t n);
  // k distinct indices from [0, n), in sampling order (partial Fisher-Yates).
  std::vector<int> SampleWithoutReplacement(int n, int k);

 private:
  void Refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int next_word_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace sgdlab

#endif  // SGDLAB_RNG_H_

// Copyright 2026 The dmpcs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <span>

#include "dmpcs/tensor.hpp"

namespace dmpcs::sensing {

/// Non-overlapping B x B tiling of an H x W image. Blocks are ordered
/// row-major over the tile grid and each block is flattened row-major.
struct BlockScheme {
  std::size_t block = 16;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t block_length() const { return block * block; }
  std::size_t blocks_down() const { return height / block; }
  std::size_t blocks_across() const { return width / block; }
  std::size_t block_count() const { return blocks_down() * blocks_across(); }
  /// Throws ValidationError naming the padding needed when B does not divide H or W.
  void validate() const;
};

/// Image [H,W] or [1,H,W] to blocks [block_count, B*B].
Tensor partition_blocks(const Tensor& image, const BlockScheme& scheme);
/// Inverse of partition_blocks; returns [H,W].
Tensor merge_blocks(const Tensor& blocks, const BlockScheme& scheme);

/// Gaussian measurement matrix with M rows (measurements per block) and
/// N columns (pixels per block).
class SensingOperator {
 public:
  SensingOperator() = default;
  SensingOperator(Tensor matrix, std::uint64_t seed = 0, bool trainable = false);

  const Tensor& matrix() const { return matrix_; }
  std::size_t rows() const { return matrix_.dim(0); }
  std::size_t cols() const { return matrix_.dim(1); }
  double ratio() const { return double(rows()) / double(cols()); }
  std::uint64_t seed() const { return seed_; }
  bool trainable() const { return trainable_; }

 private:
  Tensor matrix_;
  std::uint64_t seed_ = 0;
  bool trainable_ = false;
};

/// Entries i.i.d. N(0, 1/M) drawn row-major from a seeded stream.
SensingOperator gen_sensing_matrix(std::size_t m, std::size_t n, std::uint64_t seed);

/// Number of measurements for a CS ratio, floor(ratio * N), at least 1.
std::size_t measurements_for_ratio(double ratio, std::size_t n);

struct MeasurementSet {
  Tensor y;  // [block_count, M]
  double noise_sigma = 0.0;
};

/// y = Phi x + e per block, e ~ N(0, sigma^2). x_blocks is [block_count, N].
MeasurementSet sample(const SensingOperator& op, const Tensor& x_blocks, double noise_sigma,
                      std::uint64_t seed);
/// Phi^T y per block; y is [block_count, M].
Tensor adjoint(const SensingOperator& op, const Tensor& y_blocks);
/// Phi x per block without noise.
Tensor forward(const SensingOperator& op, const Tensor& x_blocks);
/// Sum over blocks of ||y - Phi x||^2.
double fidelity(const SensingOperator& op, const Tensor& x_blocks, const Tensor& y_blocks);

// Single-block kernels shared by the solvers and the autodiff graph, so both
// paths produce identical bits.
void apply_matrix(std::span<const double> phi, std::size_t m, std::size_t n,
                  std::span<const double> x, std::span<double> out);
void apply_transpose(std::span<const double> phi, std::size_t m, std::size_t n,
                     std::span<const double> y, std::span<double> out);

/// Row-wise application of the kernels to [blocks, n] / [blocks, m] arrays.
void apply_matrix_blocks(std::span<const double> phi, std::size_t m, std::size_t n,
                         std::span<const double> x, std::span<double> out);
void apply_transpose_blocks(std::span<const double> phi, std::size_t m, std::size_t n,
                            std::span<const double> y, std::span<double> out);

}  // namespace dmpcs::sensing

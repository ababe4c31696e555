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

#include "dmpcs/sensing.hpp"

#include <Eigen/Core>
#include <cmath>

#include "dmpcs/errors.hpp"
#include "dmpcs/rng.hpp"

namespace dmpcs::sensing {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;

void check_blocks(const Tensor& t, std::size_t len, const char* what) {
  require(t.rank() == 2 && t.dim(1) == len,
          std::string(what) + " must be [blocks, " + std::to_string(len) + "], got " +
              shape_string(t.shape()));
}

}  // namespace

void BlockScheme::validate() const {
  require(block >= 1, "block size must be at least 1");
  require(height >= 1 && width >= 1, "image dimensions must be positive");
  if (height % block != 0 || width % block != 0) {
    const std::size_t pad_h = (block - height % block) % block;
    const std::size_t pad_w = (block - width % block) % block;
    throw ValidationError("image " + std::to_string(height) + "x" + std::to_string(width) +
                          " is not divisible by block size " + std::to_string(block) +
                          "; pad by " + std::to_string(pad_h) + " rows and " +
                          std::to_string(pad_w) + " columns");
  }
}

Tensor partition_blocks(const Tensor& image, const BlockScheme& scheme) {
  scheme.validate();
  const bool planar = image.rank() == 3 && image.dim(0) == 1;
  require((image.rank() == 2 || planar) && image.dim(image.rank() - 2) == scheme.height &&
              image.dim(image.rank() - 1) == scheme.width,
          "image shape " + shape_string(image.shape()) + " does not match block scheme");
  const std::size_t b = scheme.block;
  Tensor blocks({scheme.block_count(), scheme.block_length()});
  std::size_t k = 0;
  for (std::size_t by = 0; by < scheme.blocks_down(); ++by)
    for (std::size_t bx = 0; bx < scheme.blocks_across(); ++bx, ++k)
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < b; ++j)
          blocks[k * b * b + i * b + j] = image[(by * b + i) * scheme.width + bx * b + j];
  return blocks;
}

Tensor merge_blocks(const Tensor& blocks, const BlockScheme& scheme) {
  scheme.validate();
  check_blocks(blocks, scheme.block_length(), "blocks");
  require(blocks.dim(0) == scheme.block_count(), "block count does not match scheme");
  const std::size_t b = scheme.block;
  Tensor image({scheme.height, scheme.width});
  std::size_t k = 0;
  for (std::size_t by = 0; by < scheme.blocks_down(); ++by)
    for (std::size_t bx = 0; bx < scheme.blocks_across(); ++bx, ++k)
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < b; ++j)
          image[(by * b + i) * scheme.width + bx * b + j] = blocks[k * b * b + i * b + j];
  return image;
}

SensingOperator::SensingOperator(Tensor matrix, std::uint64_t seed, bool trainable)
    : matrix_(std::move(matrix)), seed_(seed), trainable_(trainable) {
  require(matrix_.rank() == 2, "sensing matrix must be rank 2");
  require(matrix_.dim(0) > 0 && matrix_.dim(0) < matrix_.dim(1),
          "sensing matrix needs 0 < M < N, got " + shape_string(matrix_.shape()));
}

SensingOperator gen_sensing_matrix(std::size_t m, std::size_t n, std::uint64_t seed) {
  require(m > 0 && m < n, "gen_sensing_matrix needs 0 < M < N, got M=" + std::to_string(m) +
                              " N=" + std::to_string(n));
  Rng rng(seed);
  Tensor phi({m, n});
  const double sd = 1.0 / std::sqrt(double(m));
  for (double& v : phi.data()) v = sd * rng.normal();
  return SensingOperator(std::move(phi), seed, false);
}

std::size_t measurements_for_ratio(double ratio, std::size_t n) {
  require(ratio > 0.0 && ratio < 1.0, "CS ratio must lie in (0,1)");
  const auto m = static_cast<std::size_t>(std::floor(ratio * double(n)));
  return m < 1 ? 1 : m;
}

void apply_matrix(std::span<const double> phi, std::size_t m, std::size_t n,
                  std::span<const double> x, std::span<double> out) {
  ConstMatrixMap a(phi.data(), Eigen::Index(m), Eigen::Index(n));
  VectorMap(out.data(), Eigen::Index(m)).noalias() = a * ConstVectorMap(x.data(), Eigen::Index(n));
}

void apply_transpose(std::span<const double> phi, std::size_t m, std::size_t n,
                     std::span<const double> y, std::span<double> out) {
  ConstMatrixMap a(phi.data(), Eigen::Index(m), Eigen::Index(n));
  VectorMap(out.data(), Eigen::Index(n)).noalias() =
      a.transpose() * ConstVectorMap(y.data(), Eigen::Index(m));
}

void apply_matrix_blocks(std::span<const double> phi, std::size_t m, std::size_t n,
                         std::span<const double> x, std::span<double> out) {
  const std::size_t blocks = x.size() / n;
  for (std::size_t b = 0; b < blocks; ++b)
    apply_matrix(phi, m, n, x.subspan(b * n, n), out.subspan(b * m, m));
}

void apply_transpose_blocks(std::span<const double> phi, std::size_t m, std::size_t n,
                            std::span<const double> y, std::span<double> out) {
  const std::size_t blocks = y.size() / m;
  for (std::size_t b = 0; b < blocks; ++b)
    apply_transpose(phi, m, n, y.subspan(b * m, m), out.subspan(b * n, n));
}

Tensor forward(const SensingOperator& op, const Tensor& x_blocks) {
  check_blocks(x_blocks, op.cols(), "signal blocks");
  Tensor y({x_blocks.dim(0), op.rows()});
  apply_matrix_blocks(op.matrix().data(), op.rows(), op.cols(), x_blocks.data(), y.data());
  return y;
}

MeasurementSet sample(const SensingOperator& op, const Tensor& x_blocks, double noise_sigma,
                      std::uint64_t seed) {
  require(noise_sigma >= 0.0, "measurement noise sigma must be non-negative");
  MeasurementSet out{forward(op, x_blocks), noise_sigma};
  if (noise_sigma > 0.0) {
    Rng rng(seed);
    for (double& v : out.y.data()) v += noise_sigma * rng.normal();
  }
  return out;
}

Tensor adjoint(const SensingOperator& op, const Tensor& y_blocks) {
  check_blocks(y_blocks, op.rows(), "measurement blocks");
  Tensor x({y_blocks.dim(0), op.cols()});
  apply_transpose_blocks(op.matrix().data(), op.rows(), op.cols(), y_blocks.data(), x.data());
  return x;
}

double fidelity(const SensingOperator& op, const Tensor& x_blocks, const Tensor& y_blocks) {
  check_blocks(y_blocks, op.rows(), "measurement blocks");
  require(x_blocks.rank() == 2 && x_blocks.dim(0) == y_blocks.dim(0),
          "signal and measurement block counts differ");
  const Tensor phix = forward(op, x_blocks);
  double total = 0.0;
  for (std::size_t i = 0; i < phix.size(); ++i) {
    const double r = y_blocks[i] - phix[i];
    total += r * r;
  }
  return total;
}

}  // namespace dmpcs::sensing

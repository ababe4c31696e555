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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dmpcs/sensing.hpp"
#include "dmpcs/tensor.hpp"
#include "dmpcs/unfolded.hpp"

namespace dmpcs::metrics {

inline constexpr double kIdenticalPsnr = std::numeric_limits<double>::infinity();

double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);
/// Mean SSIM over the valid region, 11x11 Gaussian window (sigma 1.5), peak 1.
double ssim(const Tensor& a, const Tensor& b);
/// Pearson correlation of the Q-Q pairs of the standardised samples.
double gaussianity_corr(std::span<const double> noise);

struct ImageMetrics {
  std::string name;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct MetricReport {
  double psnr_db = 0.0;
  double ssim = 0.0;
  double gaussianity_corr = std::numeric_limits<double>::quiet_NaN();
  std::vector<ImageMetrics> images;

  std::string csv() const;
  std::string table() const;
};

MetricReport evaluate(const std::vector<Tensor>& refs, const std::vector<Tensor>& recs,
                      const std::vector<std::string>& names = {});

struct CostReport {
  std::uint64_t gradient_step = 0;
  std::uint64_t resblock = 0;       // per-step ResBlock (the learned Onsager path)
  std::uint64_t reverse_model = 0;
  std::uint64_t mc_sure = 0;        // divergence probes the ResBlock replaces
  std::uint64_t head = 0;
  std::uint64_t tail = 0;
  std::uint64_t steps = 0;
  std::uint64_t probes = 1;

  std::uint64_t step_resblock_path() const { return gradient_step + resblock + reverse_model; }
  std::uint64_t step_mc_sure_path() const { return gradient_step + mc_sure + reverse_model; }
  std::uint64_t total_resblock_path() const { return head + steps * step_resblock_path() + tail; }
  std::uint64_t total_mc_sure_path() const { return head + steps * step_mc_sure_path() + tail; }

  std::string csv() const;
  std::string table() const;
};

/// 2 * Cin * Cout * 9 * H * W.
std::uint64_t conv_flops(std::size_t cin, std::size_t cout, std::size_t height, std::size_t width);

CostReport flops_report(const unfolded::UnfoldedConfig& cfg, std::size_t measurements,
                        std::size_t height, std::size_t width, std::size_t probes = 1);

}  // namespace dmpcs::metrics

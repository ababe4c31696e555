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

#include <cstddef>
#include <span>
#include <vector>

namespace dmpcs::diffusion {

/// Scaling sequence alpha_1..alpha_T with alpha_0 = 1 and cumulative
/// products alpha_bar_t. Time runs from T (noise) down to 0 (clean).
class DiffusionSchedule {
 public:
  DiffusionSchedule() = default;
  /// alphas[i] is alpha_{i+1}; each must lie in (0,1).
  explicit DiffusionSchedule(std::vector<double> alphas);

  std::size_t steps() const { return alpha_.size() - 1; }
  double alpha(std::size_t t) const;
  double alpha_bar(std::size_t t) const;
  /// Effective one-hop alpha between two times on a subsequence:
  /// alpha_t itself when t_prev == t-1, otherwise alpha_bar_t / alpha_bar_prev.
  double hop_alpha(std::size_t t, std::size_t t_prev) const;

  const std::vector<double>& alphas() const { return alpha_; }

  /// Linear beta schedule (alpha_t = 1 - beta_t) is the only constructor
  /// that records its generating parameters.
  double beta_start() const { return beta_start_; }
  double beta_end() const { return beta_end_; }

 private:
  friend DiffusionSchedule build_schedule(std::size_t, double, double);
  std::vector<double> alpha_;      // index 0 holds alpha_0 = 1
  std::vector<double> alpha_bar_;  // index 0 holds 1
  double beta_start_ = 0.0;
  double beta_end_ = 0.0;
};

DiffusionSchedule build_schedule(std::size_t steps, double beta_start, double beta_end);

/// Accelerated reverse-time grid [K, K-dt, ..., dt, 0].
struct TimeSubsequence {
  std::size_t start = 0;
  std::size_t stride = 1;
  std::vector<std::size_t> times;

  std::size_t step_count() const { return times.empty() ? 0 : times.size() - 1; }
  bool contains(std::size_t t) const;
};

TimeSubsequence ddim_times(std::size_t start, std::size_t stride);

/// sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) noise.
std::vector<double> forward_marginal(std::span<const double> x0, std::size_t t,
                                     const DiffusionSchedule& schedule,
                                     std::span<const double> noise);

/// Scalar factors of the Gaussian reverse posterior between two times:
/// mean = signal * x_t + clean * x0, variance = variance.
struct PosteriorCoefficients {
  double signal = 0.0;
  double clean = 0.0;
  double variance = 0.0;
};

PosteriorCoefficients posterior_coefficients(const DiffusionSchedule& schedule, std::size_t t,
                                             std::size_t t_prev);

struct PosteriorParams {
  std::vector<double> mean;
  double variance = 0.0;
  std::size_t t = 0;
  std::size_t t_prev = 0;
};

/// Reverse posterior q(x_{t-1} | x_t, x0) for consecutive times.
PosteriorParams posterior_params(std::span<const double> x_t, std::span<const double> x0_hat,
                                 std::size_t t, const DiffusionSchedule& schedule);
/// Same posterior for a hop t -> t_prev on a subsequence.
PosteriorParams posterior_params(std::span<const double> x_t, std::span<const double> x0_hat,
                                 std::size_t t, std::size_t t_prev,
                                 const DiffusionSchedule& schedule);

/// mean + sqrt(variance) * noise.
std::vector<double> posterior_sample(const PosteriorParams& params, std::span<const double> noise);

/// One forward kernel step x_t = sqrt(alpha_t) x_{t-1} + sqrt(1 - alpha_t) noise.
std::vector<double> forward_step(std::span<const double> x_prev, std::size_t t,
                                 const DiffusionSchedule& schedule, std::span<const double> noise);

}  // namespace dmpcs::diffusion

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

#include "dmpcs/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dmpcs/errors.hpp"

namespace dmpcs::diffusion {

DiffusionSchedule::DiffusionSchedule(std::vector<double> alphas) {
  require(!alphas.empty(), "schedule needs at least one step");
  alpha_.reserve(alphas.size() + 1);
  alpha_bar_.reserve(alphas.size() + 1);
  alpha_.push_back(1.0);
  alpha_bar_.push_back(1.0);
  for (double a : alphas) {
    require(a > 0.0 && a < 1.0, "schedule alphas must lie in (0,1), got " + std::to_string(a));
    alpha_.push_back(a);
    alpha_bar_.push_back(alpha_bar_.back() * a);
  }
}

double DiffusionSchedule::alpha(std::size_t t) const {
  require(t < alpha_.size(), "time " + std::to_string(t) + " beyond schedule length");
  return alpha_[t];
}

double DiffusionSchedule::alpha_bar(std::size_t t) const {
  require(t < alpha_bar_.size(), "time " + std::to_string(t) + " beyond schedule length");
  return alpha_bar_[t];
}

double DiffusionSchedule::hop_alpha(std::size_t t, std::size_t t_prev) const {
  require(t_prev < t, "hop must go backwards in time");
  if (t_prev + 1 == t) return alpha(t);
  return alpha_bar(t) / alpha_bar(t_prev);
}

DiffusionSchedule build_schedule(std::size_t steps, double beta_start, double beta_end) {
  require(steps >= 1, "schedule needs at least one step");
  require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0,
          "schedule needs 0 < beta_start <= beta_end < 1");
  std::vector<double> alphas(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : double(i) / double(steps - 1);
    alphas[i] = 1.0 - (beta_start + frac * (beta_end - beta_start));
  }
  DiffusionSchedule s(std::move(alphas));
  s.beta_start_ = beta_start;
  s.beta_end_ = beta_end;
  return s;
}

bool TimeSubsequence::contains(std::size_t t) const {
  return std::find(times.begin(), times.end(), t) != times.end();
}

TimeSubsequence ddim_times(std::size_t start, std::size_t stride) {
  require(stride >= 1 && start >= stride, "subsequence needs K >= dt >= 1");
  require(start % stride == 0, "stride " + std::to_string(stride) + " does not divide K=" +
                                   std::to_string(start));
  TimeSubsequence seq{start, stride, {}};
  for (std::size_t t = start;; t -= stride) {
    seq.times.push_back(t);
    if (t == 0) break;
  }
  return seq;
}

std::vector<double> forward_marginal(std::span<const double> x0, std::size_t t,
                                     const DiffusionSchedule& schedule,
                                     std::span<const double> noise) {
  require(t <= schedule.steps(), "time " + std::to_string(t) + " exceeds T");
  require(noise.size() == x0.size(), "noise shape does not match signal");
  const double a = std::sqrt(schedule.alpha_bar(t));
  const double s = std::sqrt(1.0 - schedule.alpha_bar(t));
  std::vector<double> out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + s * noise[i];
  return out;
}

PosteriorCoefficients posterior_coefficients(const DiffusionSchedule& schedule, std::size_t t,
                                             std::size_t t_prev) {
  require(t >= 1, "no reverse posterior at t = 0");
  require(t_prev < t && t <= schedule.steps(), "invalid posterior hop " + std::to_string(t) +
                                                   " -> " + std::to_string(t_prev));
  const double a = schedule.hop_alpha(t, t_prev);
  const double ab = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t_prev);
  const double denom = 1.0 - ab;
  PosteriorCoefficients c;
  c.signal = (1.0 - ab_prev) / denom * std::sqrt(a);
  c.clean = (1.0 - a) / denom * std::sqrt(ab_prev);
  c.variance = (1.0 - ab_prev) / denom * (1.0 - a);
  return c;
}

PosteriorParams posterior_params(std::span<const double> x_t, std::span<const double> x0_hat,
                                 std::size_t t, const DiffusionSchedule& schedule) {
  require(t >= 1, "no reverse posterior at t = 0");
  return posterior_params(x_t, x0_hat, t, t - 1, schedule);
}

PosteriorParams posterior_params(std::span<const double> x_t, std::span<const double> x0_hat,
                                 std::size_t t, std::size_t t_prev,
                                 const DiffusionSchedule& schedule) {
  require(x_t.size() == x0_hat.size(), "posterior inputs differ in length");
  const PosteriorCoefficients c = posterior_coefficients(schedule, t, t_prev);
  PosteriorParams p{std::vector<double>(x_t.size()), c.variance, t, t_prev};
  for (std::size_t i = 0; i < x_t.size(); ++i) p.mean[i] = c.signal * x_t[i] + c.clean * x0_hat[i];
  return p;
}

std::vector<double> posterior_sample(const PosteriorParams& params,
                                     std::span<const double> noise) {
  require(noise.size() == params.mean.size(), "noise shape does not match posterior mean");
  const double sd = std::sqrt(params.variance);
  std::vector<double> out(params.mean);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += sd * noise[i];
  return out;
}

std::vector<double> forward_step(std::span<const double> x_prev, std::size_t t,
                                 const DiffusionSchedule& schedule,
                                 std::span<const double> noise) {
  require(t >= 1 && t <= schedule.steps(), "forward step time out of range");
  require(noise.size() == x_prev.size(), "noise shape does not match signal");
  const double a = std::sqrt(schedule.alpha(t));
  const double s = std::sqrt(1.0 - schedule.alpha(t));
  std::vector<double> out(x_prev.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x_prev[i] + s * noise[i];
  return out;
}

}  // namespace dmpcs::diffusion

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

#include "dmpcs/denoise.hpp"

#include <algorithm>
#include <cmath>

#include "dmpcs/errors.hpp"

namespace dmpcs::denoise {

std::string to_string(DenoiserKind kind) {
  switch (kind) {
    case DenoiserKind::soft_threshold: return "soft_threshold";
    case DenoiserKind::mmse_gaussian: return "mmse_gaussian";
    case DenoiserKind::mmse_bernoulli_gaussian: return "mmse_bernoulli_gaussian";
    case DenoiserKind::oracle_perfect: return "oracle_perfect";
    case DenoiserKind::learned: return "learned";
  }
  return "unknown";
}

double Denoiser::divergence(std::span<const double>, const DenoiseContext&) const {
  throw ValidationError("denoiser '" + to_string(kind()) + "' has no analytic divergence");
}

std::vector<double> soft_threshold(std::span<const double> h, double tau) {
  require(tau >= 0.0, "soft threshold needs tau >= 0");
  std::vector<double> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double mag = std::abs(h[i]) - tau;
    out[i] = mag > 0.0 ? std::copysign(mag, h[i]) : 0.0;
  }
  return out;
}

double soft_threshold_divergence(std::span<const double> h, double tau) {
  require(tau >= 0.0, "soft threshold needs tau >= 0");
  double count = 0.0;
  for (double v : h)
    if (std::abs(v) > tau) count += 1.0;
  return count;
}

std::vector<double> mmse_gaussian(std::span<const double> h, double sigma_eff) {
  require(sigma_eff >= 0.0, "sigma_eff must be non-negative");
  const double k = 1.0 / (1.0 + sigma_eff * sigma_eff);
  std::vector<double> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = k * h[i];
  return out;
}

namespace {

void check_rho(double rho) {
  require(rho > 0.0 && rho <= 1.0, "Bernoulli-Gaussian rho must lie in (0,1]");
}

// Posterior probability that the entry is drawn from the Gaussian slab.
double slab_responsibility(double h, double v, double rho) {
  if (rho >= 1.0) return 1.0;
  const double log_slab = std::log(rho) - 0.5 * std::log1p(v) - h * h / (2.0 * (1.0 + v));
  const double log_spike = std::log1p(-rho) - 0.5 * std::log(v) - h * h / (2.0 * v);
  return 1.0 / (1.0 + std::exp(log_spike - log_slab));
}

}  // namespace

double mmse_bernoulli_gaussian(double h, double sigma_eff, double rho) {
  check_rho(rho);
  require(sigma_eff >= 0.0, "sigma_eff must be non-negative");
  const double v = sigma_eff * sigma_eff;
  if (v == 0.0) return h;
  return slab_responsibility(h, v, rho) * h / (1.0 + v);
}

double mmse_bernoulli_gaussian_derivative(double h, double sigma_eff, double rho) {
  check_rho(rho);
  const double v = sigma_eff * sigma_eff;
  if (v == 0.0) return 1.0;
  const double w = slab_responsibility(h, v, rho);
  const double dw = w * (1.0 - w) * h * (1.0 / v - 1.0 / (1.0 + v));
  return (w + h * dw) / (1.0 + v);
}

std::vector<double> mmse_bernoulli_gaussian(std::span<const double> h, double sigma_eff,
                                            double rho) {
  std::vector<double> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = mmse_bernoulli_gaussian(h[i], sigma_eff, rho);
  return out;
}

SoftThresholdDenoiser::SoftThresholdDenoiser(double tau, bool relative)
    : tau_(tau), relative_(relative) {
  require(tau >= 0.0, "soft threshold needs tau >= 0");
}

double SoftThresholdDenoiser::threshold(const DenoiseContext& ctx) const {
  return relative_ ? tau_ * std::sqrt(std::max(ctx.noise_var, 0.0)) : tau_;
}

std::vector<double> SoftThresholdDenoiser::apply(std::span<const double> h,
                                                 const DenoiseContext& ctx) const {
  return soft_threshold(h, threshold(ctx));
}

double SoftThresholdDenoiser::divergence(std::span<const double> h,
                                         const DenoiseContext& ctx) const {
  return soft_threshold_divergence(h, threshold(ctx));
}

std::vector<double> MmseGaussianDenoiser::apply(std::span<const double> h,
                                                const DenoiseContext& ctx) const {
  return mmse_gaussian(h, std::sqrt(std::max(ctx.noise_var, 0.0)));
}

double MmseGaussianDenoiser::divergence(std::span<const double> h,
                                        const DenoiseContext& ctx) const {
  return double(h.size()) / (1.0 + std::max(ctx.noise_var, 0.0));
}

MmseBernoulliGaussianDenoiser::MmseBernoulliGaussianDenoiser(double rho) : rho_(rho) {
  check_rho(rho);
}

std::vector<double> MmseBernoulliGaussianDenoiser::apply(std::span<const double> h,
                                                         const DenoiseContext& ctx) const {
  return mmse_bernoulli_gaussian(h, std::sqrt(std::max(ctx.noise_var, 0.0)), rho_);
}

double MmseBernoulliGaussianDenoiser::divergence(std::span<const double> h,
                                                 const DenoiseContext& ctx) const {
  const double sigma = std::sqrt(std::max(ctx.noise_var, 0.0));
  double acc = 0.0;
  for (double v : h) acc += mmse_bernoulli_gaussian_derivative(v, sigma, rho_);
  return acc;
}

std::vector<double> oracle_perfect_denoiser(std::span<const double> r, std::size_t t,
                                            std::size_t t_prev, std::span<const double> truth,
                                            const diffusion::DiffusionSchedule& schedule,
                                            std::span<const double> noise) {
  require(!truth.empty(), "oracle denoiser needs the ground truth");
  require(truth.size() == r.size(), "ground truth length does not match input");
  const auto params = diffusion::posterior_params(r, truth, t, t_prev, schedule);
  if (noise.empty()) return params.mean;
  return diffusion::posterior_sample(params, noise);
}

std::vector<double> OraclePerfectDenoiser::apply(std::span<const double> h,
                                                 const DenoiseContext& ctx) const {
  require(ctx.schedule != nullptr, "oracle denoiser needs a schedule");
  return oracle_perfect_denoiser(h, ctx.t, ctx.t_prev, ctx.truth, *ctx.schedule, ctx.noise);
}

double OraclePerfectDenoiser::divergence(std::span<const double> h,
                                         const DenoiseContext& ctx) const {
  require(ctx.schedule != nullptr, "oracle denoiser needs a schedule");
  return double(h.size()) *
         diffusion::posterior_coefficients(*ctx.schedule, ctx.t, ctx.t_prev).signal;
}

double filter_target_variance(const diffusion::DiffusionSchedule& schedule, std::size_t t,
                              FilterVariance mode) {
  const double ab = schedule.alpha_bar(t);
  return mode == FilterVariance::marginal ? 1.0 - ab : 1.0 - std::sqrt(ab);
}

std::vector<double> oracle_gaussian_filter(std::span<const double> d, std::size_t t,
                                           std::span<const double> truth,
                                           const diffusion::DiffusionSchedule& schedule,
                                           double target_var, std::span<const double> noise) {
  require(!truth.empty(), "oracle filter needs the ground truth");
  require(truth.size() == d.size(), "ground truth length does not match input");
  require(target_var >= 0.0, "target variance must be non-negative");
  require(noise.empty() || noise.size() == d.size(), "filter noise length mismatch");
  const double a = std::sqrt(schedule.alpha_bar(t));
  const double sd = std::sqrt(target_var);
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a * truth[i] + (noise.empty() ? 0.0 : sd * noise[i]);
  return out;
}

std::vector<double> OracleGaussianFilter::apply(std::span<const double> d,
                                                const FilterContext& ctx) const {
  require(ctx.schedule != nullptr, "oracle filter needs a schedule");
  return oracle_gaussian_filter(d, ctx.t, ctx.truth, *ctx.schedule,
                                filter_target_variance(*ctx.schedule, ctx.t, mode_), ctx.noise);
}

DivergenceEstimate mc_sure_divergence(const VectorFunction& f, std::span<const double> h,
                                      double probe_step, std::size_t probes, Rng& rng) {
  require(probe_step > 0.0, "probe step must be positive");
  require(probes >= 1, "need at least one probe");
  double scale = 1.0;
  for (double v : h) scale = std::max(scale, std::abs(v));
  const double eps = probe_step * scale;

  const std::vector<double> base = f(h);
  std::vector<double> probe(h.size()), shifted(h.size());
  double total = 0.0;
  for (std::size_t p = 0; p < probes; ++p) {
    rng.fill_normal(probe);
    for (std::size_t i = 0; i < h.size(); ++i) shifted[i] = h[i] + eps * probe[i];
    const std::vector<double> moved = f(shifted);
    require(moved.size() == h.size(), "denoiser changed the signal length");
    double acc = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) acc += probe[i] * (moved[i] - base[i]);
    total += acc / eps;
  }
  return {total / double(probes), probes, eps};
}

}  // namespace dmpcs::denoise

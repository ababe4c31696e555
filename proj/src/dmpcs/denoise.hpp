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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dmpcs/diffusion.hpp"
#include "dmpcs/rng.hpp"

namespace dmpcs::denoise {

enum class DenoiserKind { soft_threshold, mmse_gaussian, mmse_bernoulli_gaussian, oracle_perfect, learned };

std::string to_string(DenoiserKind kind);

struct Capabilities {
  bool analytic_divergence = false;
  bool needs_ground_truth = false;
  bool time_conditioned = false;
};

/// What a denoiser may consult besides its input.
struct DenoiseContext {
  double noise_var = 0.0;  // effective input noise variance (AMP-style denoisers)
  std::size_t t = 0;       // reverse hop t -> t_prev (time-conditioned denoisers)
  std::size_t t_prev = 0;
  const diffusion::DiffusionSchedule* schedule = nullptr;
  std::span<const double> truth;  // ground truth, oracle kinds only
  std::span<const double> noise;  // injected reverse noise; empty means none
};

/// Uniform handle over the eta_t / p_theta implementations.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual DenoiserKind kind() const = 0;
  virtual Capabilities capabilities() const = 0;
  virtual std::vector<double> apply(std::span<const double> h, const DenoiseContext& ctx) const = 0;
  /// Exact divergence (Jacobian trace). Throws for kinds without one.
  virtual double divergence(std::span<const double> h, const DenoiseContext& ctx) const;
};

// Closed-form denoisers.

std::vector<double> soft_threshold(std::span<const double> h, double tau);
/// Number of entries strictly above the threshold in magnitude.
double soft_threshold_divergence(std::span<const double> h, double tau);

/// Posterior mean under a unit Gaussian prior: h / (1 + sigma^2).
std::vector<double> mmse_gaussian(std::span<const double> h, double sigma_eff);

/// Posterior mean under x ~ (1-rho) delta_0 + rho N(0,1), scalar form, and its derivative.
double mmse_bernoulli_gaussian(double h, double sigma_eff, double rho);
double mmse_bernoulli_gaussian_derivative(double h, double sigma_eff, double rho);
std::vector<double> mmse_bernoulli_gaussian(std::span<const double> h, double sigma_eff,
                                            double rho);

/// Soft threshold at tau = scale * sqrt(noise_var) when `relative`, else a fixed tau.
class SoftThresholdDenoiser final : public Denoiser {
 public:
  SoftThresholdDenoiser(double tau, bool relative = false);
  DenoiserKind kind() const override { return DenoiserKind::soft_threshold; }
  Capabilities capabilities() const override { return {true, false, false}; }
  std::vector<double> apply(std::span<const double> h, const DenoiseContext& ctx) const override;
  double divergence(std::span<const double> h, const DenoiseContext& ctx) const override;
  double threshold(const DenoiseContext& ctx) const;

 private:
  double tau_;
  bool relative_;
};

class MmseGaussianDenoiser final : public Denoiser {
 public:
  DenoiserKind kind() const override { return DenoiserKind::mmse_gaussian; }
  Capabilities capabilities() const override { return {true, false, false}; }
  std::vector<double> apply(std::span<const double> h, const DenoiseContext& ctx) const override;
  double divergence(std::span<const double> h, const DenoiseContext& ctx) const override;
};

class MmseBernoulliGaussianDenoiser final : public Denoiser {
 public:
  explicit MmseBernoulliGaussianDenoiser(double rho);
  DenoiserKind kind() const override { return DenoiserKind::mmse_bernoulli_gaussian; }
  Capabilities capabilities() const override { return {true, false, false}; }
  std::vector<double> apply(std::span<const double> h, const DenoiseContext& ctx) const override;
  double divergence(std::span<const double> h, const DenoiseContext& ctx) const override;
  double rho() const { return rho_; }

 private:
  double rho_;
};

// Oracles built on the ground truth.

/// One exact reverse-posterior hop t -> t_prev using the true clean signal.
std::vector<double> oracle_perfect_denoiser(std::span<const double> r, std::size_t t,
                                            std::size_t t_prev, std::span<const double> truth,
                                            const diffusion::DiffusionSchedule& schedule,
                                            std::span<const double> noise);

class OraclePerfectDenoiser final : public Denoiser {
 public:
  DenoiserKind kind() const override { return DenoiserKind::oracle_perfect; }
  Capabilities capabilities() const override { return {true, true, true}; }
  std::vector<double> apply(std::span<const double> h, const DenoiseContext& ctx) const override;
  /// The hop is affine in its input with slope posterior_coefficients().signal.
  double divergence(std::span<const double> h, const DenoiseContext& ctx) const override;
};

/// Residual variance a perfect Gaussian filter targets at time t.
enum class FilterVariance {
  marginal,    // 1 - alpha_bar_t, the diffusion marginal
  sqrt_alpha,  // 1 - sqrt(alpha_bar_t)
};

double filter_target_variance(const diffusion::DiffusionSchedule& schedule, std::size_t t,
                              FilterVariance mode);

/// sqrt(alpha_bar_t) x + sqrt(target_var) noise; the input only fixes the length.
std::vector<double> oracle_gaussian_filter(std::span<const double> d, std::size_t t,
                                           std::span<const double> truth,
                                           const diffusion::DiffusionSchedule& schedule,
                                           double target_var, std::span<const double> noise);

enum class FilterKind { oracle_gaussian_filter, learned_resblock, pass_through };

struct FilterContext {
  std::size_t t = 0;
  const diffusion::DiffusionSchedule* schedule = nullptr;
  std::span<const double> truth;
  std::span<const double> noise;
};

/// The D_t stage: maps a decoupled estimate to the diffusion manifold at time t.
class GaussianFilter {
 public:
  virtual ~GaussianFilter() = default;
  virtual FilterKind kind() const = 0;
  virtual bool needs_ground_truth() const = 0;
  virtual std::vector<double> apply(std::span<const double> d, const FilterContext& ctx) const = 0;
};

class OracleGaussianFilter final : public GaussianFilter {
 public:
  explicit OracleGaussianFilter(FilterVariance mode = FilterVariance::marginal) : mode_(mode) {}
  FilterKind kind() const override { return FilterKind::oracle_gaussian_filter; }
  bool needs_ground_truth() const override { return true; }
  std::vector<double> apply(std::span<const double> d, const FilterContext& ctx) const override;
  FilterVariance mode() const { return mode_; }

 private:
  FilterVariance mode_;
};

/// Leaves d unchanged. Used when a learned reverse model runs without a filter stage.
class PassThroughFilter final : public GaussianFilter {
 public:
  FilterKind kind() const override { return FilterKind::pass_through; }
  bool needs_ground_truth() const override { return false; }
  std::vector<double> apply(std::span<const double> d, const FilterContext&) const override {
    return {d.begin(), d.end()};
  }
};

struct DivergenceEstimate {
  double value = 0.0;
  std::size_t probes = 0;
  double probe_step = 0.0;  // the step actually used, after input-scale normalization
};

using VectorFunction = std::function<std::vector<double>(std::span<const double>)>;

/// Monte-Carlo SURE divergence: mean over probes g ~ N(0,I) of
/// g^T [f(h + eps g) - f(h)] / eps with eps = probe_step * max(1, ||h||_inf).
DivergenceEstimate mc_sure_divergence(const VectorFunction& f, std::span<const double> h,
                                      double probe_step, std::size_t probes, Rng& rng);

}  // namespace dmpcs::denoise

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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmpcs/denoise.hpp"
#include "dmpcs/diffusion.hpp"
#include "dmpcs/rng.hpp"
#include "dmpcs/sensing.hpp"

namespace dmpcs::solver {

/// How the Onsager correction's divergence is obtained.
enum class OnsagerMode {
  mc_sure,  // Monte-Carlo SURE probe of the denoiser
  oracle,   // the denoiser's exact divergence
  off,      // no correction (ablation)
};

OnsagerMode parse_onsager_mode(const std::string& name);
std::string to_string(OnsagerMode mode);

// ---------------------------------------------------------------------------
// Approximate message passing (single block of length N).

struct AmpState {
  std::vector<double> x;  // estimate x_t
  std::vector<double> u;  // residual u_t
  std::vector<double> h;  // pseudo-data h_t
  double divergence = 0.0;
  double noise_var = 0.0;  // ||u||^2 / M, handed to the denoiser
  std::size_t iteration = 0;
};

AmpState amp_initial_state(const sensing::SensingOperator& op);

struct AmpOptions {
  OnsagerMode onsager = OnsagerMode::oracle;
  double probe_step = 1e-3;
  std::size_t probes = 1;
  double explosion_factor = 1e6;
};

/// u = y - Phi x + u_prev div / M;  h = Phi^T u + x;  x' = eta(h).
AmpState amp_step(const AmpState& state, const sensing::SensingOperator& op,
                  std::span<const double> y, const denoise::Denoiser& denoiser,
                  const AmpOptions& options, Rng& rng);

/// Predicted and measured per-iteration mean squared error.
struct StateEvolutionTrace {
  std::vector<double> predicted;
  std::vector<double> empirical;
  std::size_t trials = 0;
};

struct AmpResult {
  std::vector<double> x;
  StateEvolutionTrace trace;  // empirical filled only when ground truth was supplied
  std::size_t iterations = 0;
  bool stopped_early = false;
  std::string message;
};

/// Runs amp_step from the zero state, once per block of y ([blocks * M]).
AmpResult amp_reconstruct(std::span<const double> y, const sensing::SensingOperator& op,
                          const denoise::Denoiser& denoiser, std::size_t iterations,
                          const AmpOptions& options, std::uint64_t seed,
                          std::span<const double> truth = {});

/// Signal prior for state-evolution predictions.
struct Prior {
  enum class Kind { gaussian, bernoulli_gaussian } kind = Kind::gaussian;
  double rho = 1.0;

  static Prior gaussian() { return {Kind::gaussian, 1.0}; }
  static Prior bernoulli_gaussian(double rho) { return {Kind::bernoulli_gaussian, rho}; }
  /// "gaussian" or "bg:<rho>".
  static Prior parse(const std::string& spec);
  double second_moment() const { return kind == Kind::gaussian ? 1.0 : rho; }
  std::vector<double> sample(std::size_t n, Rng& rng) const;
};

/// Scalar denoiser eta(h; noise_var).
using ScalarDenoiser = std::function<double(double h, double noise_var)>;
ScalarDenoiser matched_mmse(const Prior& prior);

/// E[(eta(x + sqrt(v) z) - x)^2] for x from the prior and z ~ N(0,1).
double scalar_mse(const Prior& prior, const ScalarDenoiser& eta, double noise_var);

/// sigma^2_{k+1} = E[(eta(h) - x)^2] with h ~ N(x, sigma^2_k / delta + meas_var).
/// Returns the n values after each iteration; sigma0_sq is the starting error.
std::vector<double> amp_se_predict(const Prior& prior, double delta, double sigma0_sq,
                                   std::size_t iterations, const ScalarDenoiser& eta = {},
                                   double meas_var = 0.0);

// ---------------------------------------------------------------------------
// Diffusion message passing.

/// s = x - step Phi^T (Phi x - y) over all blocks.
std::vector<double> gradient_step(std::span<const double> x, std::span<const double> y,
                                  double step, const sensing::SensingOperator& op);

struct DmpState {
  std::vector<double> x;  // x_t (on the sqrt(alpha_bar_t)-scaled manifold)
  std::vector<double> s;  // after the gradient step
  std::vector<double> d;  // s + sqrt(alpha_bar_t) o_t, the filter input
  std::vector<double> r;  // filtered estimate
  std::vector<double> u;  // residual carrier (same recursion as AMP)
  std::vector<double> h;  // pseudo-data carrier
  double divergence = 0.0;
  double sigma_hat = 0.0;  // RMS of r - sqrt(alpha_bar_t) x when the truth is known
  std::size_t step = 0;    // index into the time subsequence
  std::size_t t = 0;
};

enum class DmpInit {
  adjoint,     // sqrt(ab_K) Phi^T y + sqrt(1 - ab_K) g
  pure_noise,  // g
};

struct DmpOptions {
  OnsagerMode onsager = OnsagerMode::oracle;
  DmpInit init = DmpInit::adjoint;
  std::optional<std::vector<double>> x_init;  // overrides `init`
  bool stochastic_reverse = true;  // inject posterior noise in the reverse hop
  bool zero_noise = false;         // every injected noise draw becomes 0
  double probe_step = 1e-3;
  std::size_t probes = 1;
  bool keep_states = false;
};

/// Everything one DMP run reads. Signals are block-major [blocks * N].
struct DmpProblem {
  const sensing::SensingOperator* op = nullptr;
  std::span<const double> y;
  const diffusion::DiffusionSchedule* schedule = nullptr;
  const diffusion::TimeSubsequence* times = nullptr;
  const denoise::GaussianFilter* filter = nullptr;
  const denoise::Denoiser* reverse = nullptr;
  std::span<const double> truth;
};

/// Draws Gaussian noise, or zeros when disabled, in a fixed order.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, bool zero) : rng_(seed), zero_(zero) {}
  std::vector<double> draw(std::size_t n);
  Rng& rng() { return rng_; }

 private:
  Rng rng_;
  bool zero_;
};

/// Onsager carriers u, h and the last divergence, shared by DMP and the
/// unfolded network's oracle substitution.
class OnsagerTracker {
 public:
  OnsagerTracker(const sensing::SensingOperator& op, std::size_t blocks);
  /// o_t = Phi^T u_prev div_prev / (blocks M), or zeros when nothing is carried.
  std::vector<double> correction() const;
  /// u = y_t - Phi x + u_prev div_prev/(blocks M);  h = Phi^T u + x.
  void advance(std::span<const double> x, std::span<const double> y_t, bool with_memory);
  void set_divergence(double div) { divergence_ = div; }
  const std::vector<double>& u() const { return u_; }
  const std::vector<double>& h() const { return h_; }
  double divergence() const { return divergence_; }

 private:
  const sensing::SensingOperator* op_;
  std::size_t blocks_;
  std::vector<double> u_;
  std::vector<double> h_;
  double divergence_ = 0.0;
};

DmpState dmp_initial_state(const DmpProblem& problem, const DmpOptions& options,
                           NoiseStream& noise);

/// One pass of: gradient step, filter, reverse hop, carrier update.
DmpState dmp_step(const DmpState& state, const DmpProblem& problem, const DmpOptions& options,
                  OnsagerTracker& onsager, NoiseStream& noise);

struct DmpResult {
  std::vector<double> x0;
  /// empirical[k] = Var(r - sqrt(ab_t) x) at times[k]; the final entry is the
  /// MSE of x0. Filled only when the truth is supplied.
  StateEvolutionTrace trace;
  std::vector<DmpState> states;  // when keep_states
};

DmpResult dmp_reconstruct(const DmpProblem& problem, const DmpOptions& options,
                          std::uint64_t seed);

/// Vectorised reverse model for state-evolution Monte Carlo:
/// (r, x, t, t_prev, noise) -> x_{t_prev}.
using ReverseModelFn = std::function<std::vector<double>(
    std::span<const double> r, std::span<const double> x, std::size_t t, std::size_t t_prev,
    std::span<const double> noise)>;

ReverseModelFn oracle_reverse_model(const diffusion::DiffusionSchedule& schedule);

/// Monte-Carlo version of the DMP recursion: r_t ~ N(sqrt(ab_t) x, sigma_t^2),
/// sigma_{t_prev}^2 = E[(reverse(r_t) - sqrt(ab_prev) x)^2]. Entry k refers to
/// times[k]; entry 0 is sigma_K_sq.
std::vector<double> dmp_se_predict(const diffusion::DiffusionSchedule& schedule,
                                   const diffusion::TimeSubsequence& times, double sigma_K_sq,
                                   const ReverseModelFn& reverse, std::size_t samples,
                                   bool stochastic, const Prior& prior, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Diagnostics.

struct EffectiveNoise {
  std::vector<double> noise;
  double sigma_hat = 0.0;
};

EffectiveNoise effective_noise(std::span<const double> estimate, std::span<const double> truth,
                               double scale);

struct QqData {
  std::vector<double> normal;     // standard-normal quantiles
  std::vector<double> empirical;  // quantiles of the standardised noise
  std::string source;
};

QqData qq_quantiles(std::span<const double> noise, std::size_t points, std::string source = {});

std::string trace_csv(const StateEvolutionTrace& trace);
std::string qq_csv(const QqData& data);

}  // namespace dmpcs::solver

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

#include "dmpcs/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dmpcs/errors.hpp"
#include "dmpcs/stats.hpp"

namespace dmpcs::solver {

namespace {

double norm2(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

void check_finite(std::span<const double> v, const char* what, std::size_t iteration) {
  for (double x : v)
    if (!std::isfinite(x))
      throw NumericalError(std::string("non-finite ") + what + " at iteration " +
                           std::to_string(iteration));
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

OnsagerMode parse_onsager_mode(const std::string& name) {
  if (name == "mc_sure") return OnsagerMode::mc_sure;
  if (name == "oracle") return OnsagerMode::oracle;
  if (name == "off") return OnsagerMode::off;
  throw ValidationError("unknown onsager mode '" + name + "' (expected mc_sure, oracle or off)");
}

std::string to_string(OnsagerMode mode) {
  switch (mode) {
    case OnsagerMode::mc_sure: return "mc_sure";
    case OnsagerMode::oracle: return "oracle";
    case OnsagerMode::off: return "off";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// AMP

AmpState amp_initial_state(const sensing::SensingOperator& op) {
  AmpState s;
  s.x.assign(op.cols(), 0.0);
  s.u.assign(op.rows(), 0.0);
  s.h.assign(op.cols(), 0.0);
  return s;
}

AmpState amp_step(const AmpState& state, const sensing::SensingOperator& op,
                  std::span<const double> y, const denoise::Denoiser& denoiser,
                  const AmpOptions& options, Rng& rng) {
  const std::size_t m = op.rows(), n = op.cols();
  require(y.size() == m, "amp_step: measurement length must equal M");
  require(state.x.size() == n && state.u.size() == m, "amp_step: state does not match operator");
  const auto phi = op.matrix().data();

  AmpState next;
  next.iteration = state.iteration + 1;
  next.u.resize(m);
  sensing::apply_matrix(phi, m, n, state.x, next.u);
  const double memory =
      options.onsager == OnsagerMode::off ? 0.0 : state.divergence / double(m);
  for (std::size_t i = 0; i < m; ++i) next.u[i] = y[i] - next.u[i] + memory * state.u[i];

  next.h.resize(n);
  sensing::apply_transpose(phi, m, n, next.u, next.h);
  for (std::size_t i = 0; i < n; ++i) next.h[i] += state.x[i];

  next.noise_var = norm2(next.u) / double(m);
  denoise::DenoiseContext ctx;
  ctx.noise_var = next.noise_var;
  next.x = denoiser.apply(next.h, ctx);

  switch (options.onsager) {
    case OnsagerMode::off: next.divergence = 0.0; break;
    case OnsagerMode::oracle:
      if (denoiser.capabilities().analytic_divergence) {
        next.divergence = denoiser.divergence(next.h, ctx);
        break;
      }
      [[fallthrough]];
    case OnsagerMode::mc_sure:
      next.divergence =
          denoise::mc_sure_divergence(
              [&](std::span<const double> v) { return denoiser.apply(v, ctx); }, next.h,
              options.probe_step, options.probes, rng)
              .value;
      break;
  }
  check_finite(next.x, "estimate", next.iteration);
  check_finite(next.u, "residual", next.iteration);
  return next;
}

AmpResult amp_reconstruct(std::span<const double> y, const sensing::SensingOperator& op,
                          const denoise::Denoiser& denoiser, std::size_t iterations,
                          const AmpOptions& options, std::uint64_t seed,
                          std::span<const double> truth) {
  const std::size_t m = op.rows(), n = op.cols();
  require(!y.empty() && y.size() % m == 0, "amp_reconstruct: y length must be a multiple of M");
  const std::size_t blocks = y.size() / m;
  require(truth.empty() || truth.size() == blocks * n, "amp_reconstruct: truth length mismatch");

  AmpResult result;
  result.x.assign(blocks * n, 0.0);
  if (!truth.empty()) result.trace.empirical.assign(iterations, 0.0);
  result.trace.trials = 1;
  result.iterations = iterations;
  Rng rng(seed);

  for (std::size_t b = 0; b < blocks; ++b) {
    const auto yb = y.subspan(b * m, m);
    const double limit = options.explosion_factor * std::max(std::sqrt(norm2(yb)), 1e-300);
    AmpState st = amp_initial_state(op);
    for (std::size_t it = 0; it < iterations; ++it) {
      st = amp_step(st, op, yb, denoiser, options, rng);
      if (std::sqrt(norm2(st.x)) > limit) {
        result.stopped_early = true;
        result.iterations = std::min(result.iterations, it + 1);
        result.message = "estimate norm exceeded " + fmt17(options.explosion_factor) +
                         "x the measurement norm at iteration " + std::to_string(it + 1) +
                         " (block " + std::to_string(b) + ")";
        break;
      }
      if (!truth.empty()) {
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double e = st.x[i] - truth[b * n + i];
          err += e * e;
        }
        result.trace.empirical[it] += err / double(n * blocks);
      }
    }
    std::copy(st.x.begin(), st.x.end(), result.x.begin() + std::ptrdiff_t(b * n));
  }
  return result;
}

Prior Prior::parse(const std::string& spec) {
  if (spec == "gaussian") return gaussian();
  if (spec.rfind("bg:", 0) == 0) {
    double rho = 0.0;
    try {
      std::size_t used = 0;
      rho = std::stod(spec.substr(3), &used);
      if (used != spec.size() - 3) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError("bad prior '" + spec + "' (expected bg:<rho>)");
    }
    require(rho > 0.0 && rho <= 1.0, "prior rho must lie in (0,1]");
    return bernoulli_gaussian(rho);
  }
  throw ValidationError("unknown prior '" + spec + "' (expected gaussian or bg:<rho>)");
}

std::vector<double> Prior::sample(std::size_t n, Rng& rng) const {
  std::vector<double> x(n);
  for (double& v : x) {
    const double g = rng.normal();
    if (kind == Kind::gaussian) {
      v = g;
    } else {
      v = rng.uniform() < rho ? g : 0.0;
    }
  }
  return x;
}

ScalarDenoiser matched_mmse(const Prior& prior) {
  if (prior.kind == Prior::Kind::gaussian)
    return [](double h, double v) { return h / (1.0 + v); };
  const double rho = prior.rho;
  return [rho](double h, double v) {
    return denoise::mmse_bernoulli_gaussian(h, std::sqrt(v), rho);
  };
}

double scalar_mse(const Prior& prior, const ScalarDenoiser& eta, double v) {
  require(v >= 0.0, "noise variance must be non-negative");
  const double slab = prior.kind == Prior::Kind::gaussian ? 1.0 : prior.rho;
  const double spike = 1.0 - slab;
  double total = 0.0;
  if (v == 0.0) {
    if (spike > 0.0) {
      const double e0 = eta(0.0, 0.0);
      total += spike * e0 * e0;
    }
    total += slab * stats::gaussian_expectation(
                        [&](double x) {
                          const double e = eta(x, 0.0) - x;
                          return e * e;
                        },
                        1.0, 0.0);
    return total;
  }
  const double feature = std::sqrt(v);
  if (spike > 0.0) {
    total += spike * stats::gaussian_expectation(
                         [&](double h) {
                           const double e = eta(h, v);
                           return e * e;
                         },
                         v, feature);
  }
  // x ~ N(0,1), h = x + sqrt(v) z: h ~ N(0, 1+v) and x | h ~ N(h/(1+v), v/(1+v)).
  const double post_var = v / (1.0 + v);
  total += slab * stats::gaussian_expectation(
                      [&](double h) {
                        const double e = eta(h, v) - h / (1.0 + v);
                        return e * e + post_var;
                      },
                      1.0 + v, feature);
  return total;
}

std::vector<double> amp_se_predict(const Prior& prior, double delta, double sigma0_sq,
                                   std::size_t iterations, const ScalarDenoiser& eta,
                                   double meas_var) {
  require(delta > 0.0 && delta <= 1.0, "delta must lie in (0,1]");
  require(sigma0_sq >= 0.0 && meas_var >= 0.0, "variances must be non-negative");
  const ScalarDenoiser denoiser = eta ? eta : matched_mmse(prior);
  std::vector<double> out;
  out.reserve(iterations);
  double sigma_sq = sigma0_sq;
  for (std::size_t k = 0; k < iterations; ++k) {
    sigma_sq = scalar_mse(prior, denoiser, sigma_sq / delta + meas_var);
    out.push_back(sigma_sq);
  }
  return out;
}

// ---------------------------------------------------------------------------
// DMP

std::vector<double> gradient_step(std::span<const double> x, std::span<const double> y,
                                  double step, const sensing::SensingOperator& op) {
  const std::size_t m = op.rows(), n = op.cols();
  require(!x.empty() && x.size() % n == 0, "gradient_step: x length must be a multiple of N");
  const std::size_t blocks = x.size() / n;
  require(y.size() == blocks * m, "gradient_step: y length does not match block count");
  const auto phi = op.matrix().data();
  std::vector<double> residual(blocks * m);
  sensing::apply_matrix_blocks(phi, m, n, x, residual);
  for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = residual[i] - y[i];
  std::vector<double> grad(x.size());
  sensing::apply_transpose_blocks(phi, m, n, residual, grad);
  std::vector<double> s(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) s[i] = x[i] - step * grad[i];
  return s;
}

std::vector<double> NoiseStream::draw(std::size_t n) {
  if (zero_) return std::vector<double>(n, 0.0);
  return rng_.normal_vector(n);
}

OnsagerTracker::OnsagerTracker(const sensing::SensingOperator& op, std::size_t blocks)
    : op_(&op), blocks_(blocks), u_(blocks * op.rows(), 0.0), h_(blocks * op.cols(), 0.0) {}

std::vector<double> OnsagerTracker::correction() const {
  std::vector<double> o(blocks_ * op_->cols(), 0.0);
  if (divergence_ == 0.0) return o;
  sensing::apply_transpose_blocks(op_->matrix().data(), op_->rows(), op_->cols(), u_, o);
  const double k = divergence_ / double(blocks_ * op_->rows());
  for (double& v : o) v *= k;
  return o;
}

void OnsagerTracker::advance(std::span<const double> x, std::span<const double> y_t,
                             bool with_memory) {
  const std::size_t m = op_->rows(), n = op_->cols();
  const auto phi = op_->matrix().data();
  std::vector<double> u(blocks_ * m);
  sensing::apply_matrix_blocks(phi, m, n, x, u);
  const double memory = with_memory ? divergence_ / double(blocks_ * m) : 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = y_t[i] - u[i] + memory * u_[i];
  u_ = std::move(u);
  sensing::apply_transpose_blocks(phi, m, n, u_, h_);
  for (std::size_t i = 0; i < h_.size(); ++i) h_[i] += x[i];
}

namespace {

void check_problem(const DmpProblem& p) {
  require(p.op && p.schedule && p.times && p.filter && p.reverse, "incomplete DMP problem");
  require(p.times->step_count() >= 1 && p.times->times.back() == 0,
          "time subsequence must end at 0");
  require(p.times->times.front() <= p.schedule->steps(), "subsequence starts beyond T");
  require(!p.y.empty() && p.y.size() % p.op->rows() == 0, "y length must be a multiple of M");
  const std::size_t len = p.y.size() / p.op->rows() * p.op->cols();
  require(p.truth.empty() || p.truth.size() == len, "truth length does not match signal");
  if (p.truth.empty()) {
    require(!p.filter->needs_ground_truth(), "the filter needs ground truth but none was given");
    require(!p.reverse->capabilities().needs_ground_truth,
            "the reverse model needs ground truth but none was given");
  }
}

std::size_t signal_length(const DmpProblem& p) { return p.y.size() / p.op->rows() * p.op->cols(); }

}  // namespace

DmpState dmp_initial_state(const DmpProblem& problem, const DmpOptions& options,
                           NoiseStream& noise) {
  check_problem(problem);
  const std::size_t len = signal_length(problem);
  DmpState st;
  st.t = problem.times->times.front();
  if (options.x_init) {
    require(options.x_init->size() == len, "x_init length does not match signal");
    st.x = *options.x_init;
    return st;
  }
  const std::vector<double> g = noise.draw(len);
  if (options.init == DmpInit::pure_noise) {
    st.x = g;
    return st;
  }
  std::vector<double> adj(len);
  const auto& op = *problem.op;
  sensing::apply_transpose_blocks(op.matrix().data(), op.rows(), op.cols(), problem.y, adj);
  const double ab = problem.schedule->alpha_bar(st.t);
  const double a = std::sqrt(ab), s = std::sqrt(1.0 - ab);
  st.x.resize(len);
  for (std::size_t i = 0; i < len; ++i) st.x[i] = a * adj[i] + s * g[i];
  return st;
}

DmpState dmp_step(const DmpState& state, const DmpProblem& problem, const DmpOptions& options,
                  OnsagerTracker& onsager, NoiseStream& noise) {
  check_problem(problem);
  const auto& times = problem.times->times;
  require(state.step + 1 < times.size(), "dmp_step past the end of the subsequence");
  const std::size_t t = times[state.step], t_prev = times[state.step + 1];
  const std::size_t len = signal_length(problem);
  require(state.x.size() == len, "dmp_step: state length does not match signal");
  const auto& schedule = *problem.schedule;
  const double a = std::sqrt(schedule.alpha_bar(t));

  std::vector<double> y_t(problem.y.size());
  for (std::size_t i = 0; i < y_t.size(); ++i) y_t[i] = a * problem.y[i];

  DmpState next;
  next.t = t;
  next.step = state.step;
  next.s = gradient_step(state.x, y_t, a, *problem.op);

  const bool memory = options.onsager != OnsagerMode::off;
  const std::vector<double> o =
      memory ? onsager.correction() : std::vector<double>(len, 0.0);
  onsager.advance(state.x, y_t, memory);
  next.d.resize(len);
  for (std::size_t i = 0; i < len; ++i) next.d[i] = next.s[i] + a * o[i];

  const std::vector<double> filter_noise = noise.draw(len);
  denoise::FilterContext fctx{t, &schedule, problem.truth, filter_noise};
  next.r = problem.filter->apply(next.d, fctx);
  require(next.r.size() == len, "filter changed the signal length");

  const std::vector<double> reverse_noise =
      options.stochastic_reverse ? noise.draw(len) : std::vector<double>{};
  denoise::DenoiseContext rctx;
  rctx.t = t;
  rctx.t_prev = t_prev;
  rctx.schedule = &schedule;
  rctx.truth = problem.truth;
  rctx.noise = reverse_noise;
  next.x = problem.reverse->apply(next.r, rctx);

  double div = 0.0;
  if (options.onsager == OnsagerMode::oracle &&
      problem.reverse->capabilities().analytic_divergence) {
    div = problem.reverse->divergence(next.r, rctx);
  } else if (options.onsager != OnsagerMode::off) {
    div = denoise::mc_sure_divergence(
              [&](std::span<const double> v) { return problem.reverse->apply(v, rctx); },
              next.r, options.probe_step, options.probes, noise.rng())
              .value;
  }
  onsager.set_divergence(div);
  next.divergence = div;
  next.u = onsager.u();
  next.h = onsager.h();

  if (!problem.truth.empty()) next.sigma_hat = effective_noise(next.r, problem.truth, a).sigma_hat;
  check_finite(next.x, "DMP estimate", state.step + 1);
  check_finite(next.r, "DMP filter output", state.step + 1);
  next.step = state.step + 1;
  next.t = t_prev;
  return next;
}

DmpResult dmp_reconstruct(const DmpProblem& problem, const DmpOptions& options,
                          std::uint64_t seed) {
  check_problem(problem);
  NoiseStream noise(seed, options.zero_noise);
  DmpState st = dmp_initial_state(problem, options, noise);
  const std::size_t blocks = problem.y.size() / problem.op->rows();
  OnsagerTracker onsager(*problem.op, blocks);
  DmpResult result;
  result.trace.trials = 1;
  const std::size_t steps = problem.times->step_count();
  for (std::size_t k = 0; k < steps; ++k) {
    st = dmp_step(st, problem, options, onsager, noise);
    if (!problem.truth.empty()) result.trace.empirical.push_back(st.sigma_hat * st.sigma_hat);
    if (options.keep_states) result.states.push_back(st);
  }
  result.x0 = st.x;
  if (!problem.truth.empty()) {
    const auto e = effective_noise(result.x0, problem.truth, 1.0);
    result.trace.empirical.push_back(e.sigma_hat * e.sigma_hat);
  }
  return result;
}

ReverseModelFn oracle_reverse_model(const diffusion::DiffusionSchedule& schedule) {
  return [&schedule](std::span<const double> r, std::span<const double> x, std::size_t t,
                     std::size_t t_prev, std::span<const double> noise) {
    return denoise::oracle_perfect_denoiser(r, t, t_prev, x, schedule, noise);
  };
}

std::vector<double> dmp_se_predict(const diffusion::DiffusionSchedule& schedule,
                                   const diffusion::TimeSubsequence& times, double sigma_K_sq,
                                   const ReverseModelFn& reverse, std::size_t samples,
                                   bool stochastic, const Prior& prior, std::uint64_t seed) {
  require(samples >= 100, "dmp_se_predict needs at least 100 Monte-Carlo samples");
  require(sigma_K_sq >= 0.0, "initial variance must be non-negative");
  require(times.step_count() >= 1, "empty subsequence");
  Rng rng(seed);
  std::vector<double> out{sigma_K_sq};
  double sigma_sq = sigma_K_sq;
  for (std::size_t k = 0; k + 1 < times.times.size(); ++k) {
    const std::size_t t = times.times[k], t_prev = times.times[k + 1];
    const double a = std::sqrt(schedule.alpha_bar(t));
    const double a_prev = std::sqrt(schedule.alpha_bar(t_prev));
    const std::vector<double> x = prior.sample(samples, rng);
    const double sd = std::sqrt(sigma_sq);
    std::vector<double> r(samples);
    for (std::size_t i = 0; i < samples; ++i) r[i] = a * x[i] + sd * rng.normal();
    const std::vector<double> noise =
        stochastic ? rng.normal_vector(samples) : std::vector<double>{};
    const std::vector<double> xp = reverse(r, x, t, t_prev, noise);
    double acc = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      const double e = xp[i] - a_prev * x[i];
      acc += e * e;
    }
    sigma_sq = acc / double(samples);
    out.push_back(sigma_sq);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostics

EffectiveNoise effective_noise(std::span<const double> estimate, std::span<const double> truth,
                               double scale) {
  require(!truth.empty(), "effective_noise needs the ground truth");
  require(estimate.size() == truth.size(), "effective_noise: shape mismatch");
  EffectiveNoise e;
  e.noise.resize(estimate.size());
  for (std::size_t i = 0; i < estimate.size(); ++i) e.noise[i] = estimate[i] - scale * truth[i];
  e.sigma_hat = stats::rms(e.noise);
  return e;
}

QqData qq_quantiles(std::span<const double> noise, std::size_t points, std::string source) {
  require(points >= 16 && points <= noise.size(),
          "qq_quantiles needs 16 <= points <= sample count");
  const double m = stats::mean(noise);
  const double sd = std::sqrt(stats::variance(noise));
  require(sd > 1e-12 * std::max(1.0, std::abs(m)), "qq_quantiles: zero-variance input");
  std::vector<double> z(noise.begin(), noise.end());
  for (double& v : z) v = (v - m) / sd;
  std::sort(z.begin(), z.end());
  QqData q;
  q.source = std::move(source);
  for (double p : stats::probability_levels(points)) {
    q.normal.push_back(stats::normal_quantile(p));
    q.empirical.push_back(stats::sorted_quantile(z, p));
  }
  return q;
}

std::string trace_csv(const StateEvolutionTrace& trace) {
  std::ostringstream os;
  os << "predicted,empirical\n";
  const std::size_t rows = std::max(trace.predicted.size(), trace.empirical.size());
  for (std::size_t i = 0; i < rows; ++i) {
    os << (i < trace.predicted.size() ? fmt17(trace.predicted[i]) : "") << ','
       << (i < trace.empirical.size() ? fmt17(trace.empirical[i]) : "") << '\n';
  }
  return os.str();
}

std::string qq_csv(const QqData& data) {
  std::ostringstream os;
  os << "normal,empirical\n";
  for (std::size_t i = 0; i < data.normal.size(); ++i)
    os << fmt17(data.normal[i]) << ',' << fmt17(data.empirical[i]) << '\n';
  return os.str();
}

}  // namespace dmpcs::solver

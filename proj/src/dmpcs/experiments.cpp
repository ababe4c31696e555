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

#include "dmpcs/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "dmpcs/errors.hpp"
#include "dmpcs/metrics.hpp"

namespace dmpcs::experiments {

namespace {

struct Instance {
  std::vector<double> x;
  sensing::SensingOperator op;
  std::vector<double> y;
  std::uint64_t run_seed;
};

Instance draw_instance(const solver::Prior& prior, double delta, std::size_t n, Rng& master) {
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
  const std::size_t m = sensing::measurements_for_ratio(delta, n);
  Rng xr(master.next_seed());
  Instance inst;
  inst.x = prior.sample(n, xr);
  inst.op = sensing::gen_sensing_matrix(m, n, master.next_seed());
  inst.y.resize(m);
  sensing::apply_matrix(inst.op.matrix().data(), m, n, inst.x, inst.y);
  inst.run_seed = master.next_seed();
  return inst;
}

std::unique_ptr<denoise::Denoiser> matched_denoiser(const solver::Prior& prior) {
  if (prior.kind == solver::Prior::Kind::gaussian) return std::make_unique<denoise::MmseGaussianDenoiser>();
  return std::make_unique<denoise::MmseBernoulliGaussianDenoiser>(prior.rho);
}

}  // namespace

solver::StateEvolutionTrace amp_state_evolution(const AmpSeConfig& cfg) {
  require(cfg.trials >= 1 && cfg.iterations >= 1, "need at least one trial and iteration");
  const auto den = matched_denoiser(cfg.prior);
  solver::StateEvolutionTrace trace;
  const std::size_t m = sensing::measurements_for_ratio(cfg.delta, cfg.n);
  trace.predicted = solver::amp_se_predict(cfg.prior, double(m) / double(cfg.n), cfg.prior.second_moment(),
                                           cfg.iterations);
  trace.empirical.assign(cfg.iterations, 0.0);
  trace.trials = cfg.trials;
  Rng master(cfg.seed);
  solver::AmpOptions opts;
  opts.onsager = cfg.onsager;
  for (std::size_t k = 0; k < cfg.trials; ++k) {
    const Instance inst = draw_instance(cfg.prior, cfg.delta, cfg.n, master);
    const auto res = solver::amp_reconstruct(inst.y, inst.op, *den, cfg.iterations, opts, inst.run_seed, inst.x);
    for (std::size_t t = 0; t < cfg.iterations; ++t)
      trace.empirical[t] += (t < res.trace.empirical.size() ? res.trace.empirical[t] : res.trace.empirical.back()) /
                            double(cfg.trials);
  }
  return trace;
}

DmpSeResult dmp_state_evolution(const DmpSeConfig& cfg, const diffusion::DiffusionSchedule& schedule,
                                const diffusion::TimeSubsequence& times, std::size_t qq_points) {
  require(cfg.trials >= 1, "need at least one trial");
  const std::size_t k_start = times.times.front();
  DmpSeResult out;
  const double sigma_k = denoise::filter_target_variance(schedule, k_start, cfg.filter_var);
  out.trace.predicted = solver::dmp_se_predict(schedule, times, sigma_k, solver::oracle_reverse_model(schedule),
                                               cfg.samples, cfg.stochastic, cfg.prior, cfg.seed ^ 0x5e5e5e5eULL);
  out.trace.empirical.assign(times.times.size(), 0.0);
  out.trace.trials = cfg.trials;
  out.gaussianity.assign(times.step_count(), 1.0);

  const denoise::OracleGaussianFilter filter(cfg.filter_var);
  const denoise::OraclePerfectDenoiser reverse;
  Rng master(cfg.seed);
  for (std::size_t k = 0; k < cfg.trials; ++k) {
    const Instance inst = draw_instance(cfg.prior, cfg.delta, cfg.n, master);
    solver::DmpProblem problem{&inst.op, inst.y, &schedule, &times, &filter, &reverse, inst.x};
    solver::DmpOptions opts;
    opts.onsager = cfg.onsager;
    opts.stochastic_reverse = cfg.stochastic;
    opts.keep_states = true;
    const auto res = solver::dmp_reconstruct(problem, opts, inst.run_seed);
    for (std::size_t t = 0; t < res.trace.empirical.size(); ++t)
      out.trace.empirical[t] += res.trace.empirical[t] / double(cfg.trials);
    for (std::size_t s = 0; s < res.states.size(); ++s) {
      const double a = std::sqrt(schedule.alpha_bar(times.times[s]));
      const auto noise = solver::effective_noise(res.states[s].r, inst.x, a).noise;
      out.gaussianity[s] = std::min(out.gaussianity[s], metrics::gaussianity_corr(noise));
      if (k == 0)
        out.qq.push_back(solver::qq_quantiles(noise, std::min(qq_points, noise.size()),
                                              "dmp.r_t t=" + std::to_string(times.times[s])));
    }
  }
  return out;
}

}  // namespace dmpcs::experiments

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
#include <string>
#include <vector>

#include "dmpcs/diffusion.hpp"
#include "dmpcs/solver.hpp"

namespace dmpcs::experiments {

struct AmpSeConfig {
  solver::Prior prior = solver::Prior::bernoulli_gaussian(0.1);
  double delta = 0.5;
  std::size_t n = 4096;
  std::size_t iterations = 10;
  std::size_t trials = 20;
  solver::OnsagerMode onsager = solver::OnsagerMode::oracle;
  std::uint64_t seed = 0;
};

/// Matched-MMSE AMP on fresh (x, Phi) draws per trial; the empirical column is
/// the trial mean of ||x_t - x||^2 / N.
solver::StateEvolutionTrace amp_state_evolution(const AmpSeConfig& cfg);

struct DmpSeConfig {
  solver::Prior prior = solver::Prior::gaussian();
  double delta = 0.5;
  std::size_t n = 4096;
  std::size_t trials = 20;
  std::size_t samples = 100000;  // Monte-Carlo samples of the predictor
  bool stochastic = true;        // sample the posterior in the oracle reverse hop
  solver::OnsagerMode onsager = solver::OnsagerMode::oracle;
  denoise::FilterVariance filter_var = denoise::FilterVariance::marginal;
  std::uint64_t seed = 0;
};

struct DmpSeResult {
  solver::StateEvolutionTrace trace;   // one row per subsequence time
  std::vector<double> gaussianity;     // min over trials of the r_t Q-Q correlation
  std::vector<solver::QqData> qq;      // first trial, one entry per filtered time
};

DmpSeResult dmp_state_evolution(const DmpSeConfig& cfg, const diffusion::DiffusionSchedule& schedule,
                                const diffusion::TimeSubsequence& times, std::size_t qq_points = 64);

}  // namespace dmpcs::experiments

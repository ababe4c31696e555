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

#include "dmpcs/optim.hpp"

#include <cmath>
#include <numbers>

#include "dmpcs/errors.hpp"

namespace dmpcs::optim {

void adam_update(std::map<std::string, Tensor>& params,
                 const std::map<std::string, Tensor>& grads, AdamState& state) {
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    require(it != params.end(), "gradient for unknown parameter '" + name + "'");
    require(it->second.shape() == g.shape(), "gradient shape mismatch for '" + name + "'");
    if (!g.all_finite()) throw NumericalError("non-finite gradient for '" + name + "'; step rejected");
  }

  state.step += 1;
  const double t = double(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (const auto& [name, g] : grads) {
    Tensor& p = params.at(name);
    auto [mit, m_new] = state.first_moment.try_emplace(name, Tensor(g.shape()));
    auto [vit, v_new] = state.second_moment.try_emplace(name, Tensor(g.shape()));
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

double cosine_lr(double epoch, double total_epochs, double lr0, double lr_min) {
  require(lr_min <= lr0, "cosine_lr: lr_min exceeds lr0");
  require(total_epochs > 0.0 && epoch >= 0.0 && epoch <= total_epochs,
          "cosine_lr: epoch outside [0, total]");
  const double phase = std::numbers::pi * epoch / total_epochs;
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(phase));
}

}  // namespace dmpcs::optim

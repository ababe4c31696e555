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
#include <map>
#include <string>

#include "dmpcs/tensor.hpp"

namespace dmpcs::optim {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 1e-4;
  std::uint64_t step = 0;
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;
};

/// One bias-corrected Adam step over every parameter that has a gradient.
/// Parameters without an entry in `grads` are left alone, which is how
/// frozen parameters are honoured. A non-finite gradient rejects the whole
/// step (nothing is modified) and throws NumericalError naming the parameter.
void adam_update(std::map<std::string, Tensor>& params,
                 const std::map<std::string, Tensor>& grads, AdamState& state);

/// Cosine annealing from lr0 at epoch 0 to lr_min at total_epochs.
double cosine_lr(double epoch, double total_epochs, double lr0, double lr_min);

}  // namespace dmpcs::optim

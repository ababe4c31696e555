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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dmpcs/autodiff.hpp"
#include "dmpcs/denoise.hpp"
#include "dmpcs/diffusion.hpp"
#include "dmpcs/sensing.hpp"
#include "dmpcs/solver.hpp"

namespace dmpcs::unfolded {

struct UnfoldedConfig {
  std::size_t block = 16;
  std::size_t channels = 8;        // C, width of the feature memory z
  std::size_t res_units = 4;
  std::size_t start = 100;         // K
  std::size_t stride = 50;         // dt; steps = K / dt
  std::size_t reverse_width = 16;
  std::size_t reverse_depth = 3;   // hidden conv layers of the reverse model
  std::size_t time_embedding = 16;
  std::size_t tail_channels = 1;
  bool freeze_diffusion = false;   // DMP-DUN when true, DMP-DUN+ when false
  bool train_phi = true;
  bool stochastic = false;         // posterior noise inside the reverse hop

  std::size_t steps() const { return stride == 0 ? 0 : start / stride; }
  diffusion::TimeSubsequence times() const { return diffusion::ddim_times(start, stride); }
  void validate(const diffusion::DiffusionSchedule& schedule) const;
};

using ParameterSet = std::map<std::string, Tensor>;

struct UnfoldedModel {
  UnfoldedConfig config;
  diffusion::DiffusionSchedule schedule;
  diffusion::TimeSubsequence times;
  ParameterSet params;
  std::set<std::string> frozen;
  std::uint64_t seed = 0;

  bool is_frozen(const std::string& name) const { return frozen.count(name) != 0; }
  std::size_t parameter_count() const;
  std::size_t measurements() const { return params.at("phi").dim(0); }
  sensing::SensingOperator sensing_operator() const;
  double lambda(std::size_t step) const;
  /// Recomputes the freeze mask from the config flags.
  void apply_freeze_policy();
};

std::string lambda_name(std::size_t step);

/// The l with exp(l) == value bit-exactly when such an l exists (nearest otherwise).
double exact_log(double value);

UnfoldedModel build_model(const UnfoldedConfig& cfg, const diffusion::DiffusionSchedule& schedule,
                          const sensing::SensingOperator& op, std::uint64_t init_seed);

/// Binds model parameters into a graph; frozen ones become leaves without gradients.
class ModelGraph {
 public:
  ModelGraph(ad::Graph& graph, const UnfoldedModel& model) : graph_(&graph), model_(&model) {}
  ad::Var param(const std::string& name);
  ad::Graph& graph() { return *graph_; }
  const UnfoldedModel& model() const { return *model_; }

 private:
  ad::Graph* graph_;
  const UnfoldedModel* model_;
};

struct HeadOutput {
  ad::Var x;  // [1,H,W]
  ad::Var z;  // [C,H,W]
};

HeadOutput head_block(ModelGraph& mg, ad::Var adjoint_image);

/// s = x - lambda_step Phi^T (Phi x - y_t), y_t = sqrt(ab_t) y.
ad::Var gradient_descent_step(ModelGraph& mg, ad::Var x, ad::Var y, std::size_t step);

struct ResOutput {
  ad::Var r;  // [1,H,W]
  ad::Var z;  // [C,H,W]
};

ResOutput step_resblock(ModelGraph& mg, ad::Var s, ad::Var z, std::size_t step);

std::vector<double> time_embedding(std::size_t t, std::size_t dim);

/// x0_hat = r / sqrt(ab_t) + f(r, t).
ad::Var reverse_model_x0(ModelGraph& mg, ad::Var r, std::size_t t);

struct ReverseOverride {
  std::optional<Tensor> x0;  // replaces the network's x0 prediction
  std::optional<Tensor> noise;  // posterior noise; none means the posterior mean
};

ad::Var reverse_model_hop(ModelGraph& mg, ad::Var r, std::size_t t, std::size_t t_prev,
                          const ReverseOverride& over = {});
ad::Var reverse_model_step(ModelGraph& mg, ad::Var r, std::size_t step,
                           const ReverseOverride& over = {});

ad::Var tail_block(ModelGraph& mg, ad::Var x);

/// Stand-ins that turn forward() into the classical DMP iteration.
struct OracleSubstitution {
  std::vector<double> truth;  // image layout [H*W]
  std::uint64_t seed = 0;
  bool zero_noise = false;
  bool stochastic = false;
  solver::OnsagerMode onsager = solver::OnsagerMode::oracle;
  bool head = true;     // x_K = sqrt(ab_K) Phi^T y + sqrt(1 - ab_K) g
  bool filter = true;   // oracle Gaussian filter with the AMP memory term
  bool reverse = true;  // perfect x0 in the posterior hop
  bool bypass_tail = true;
};

struct StepIo {
  Tensor x;
  Tensor z;
  Tensor s;
  Tensor r;
};

struct ForwardOptions {
  std::size_t height = 0;
  std::size_t width = 0;
  std::optional<OracleSubstitution> oracle;
  std::vector<StepIo>* steps = nullptr;  // per-step intermediates when non-null
};

inline ForwardOptions image_options(std::size_t height, std::size_t width) {
  ForwardOptions o;
  o.height = height;
  o.width = width;
  return o;
}

/// Builds the full reconstruction in `mg`; y is [blocks, M] (a graph node so the
/// sensing step can live in the same graph during training).
ad::Var forward_graph(ModelGraph& mg, ad::Var y, const ForwardOptions& options);

Tensor forward(const UnfoldedModel& model, const Tensor& y, const ForwardOptions& options);

// ---------------------------------------------------------------------------
// Training

/// Returns the training patches ([1,h,w] each) for an epoch, already shuffled.
using PatchSource = std::function<std::vector<Tensor>(std::size_t epoch)>;

struct TrainOptions {
  std::size_t epochs = 10;
  std::size_t batch = 8;
  double lr = 1e-3;
  double lr_min = 1e-5;
  double clip_norm = 0.1;  // global gradient-norm clip, 0 disables
  std::uint64_t seed = 0;
};

struct TrainRow {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double loss = 0.0;
  double lr = 0.0;
  double val_psnr = 0.0;  // NaN on rows without validation
};

struct TrainHistory {
  std::vector<double> loss;      // one entry per batch
  std::vector<double> val_psnr;  // entry 0 is the model before training
  std::vector<TrainRow> rows;
  std::size_t best_epoch = 0;
  double best_val_psnr = 0.0;
};

double validation_psnr(const UnfoldedModel& model, const std::vector<Tensor>& images);

/// Adam + cosine schedule on the mean image MSE; the best validation epoch is kept.
TrainHistory train(UnfoldedModel& model, const PatchSource& patches,
                   const std::vector<Tensor>& validation, const TrainOptions& options,
                   const std::function<void(const TrainRow&)>& progress = {});

struct PretrainHistory {
  std::vector<double> loss;          // one entry per batch
  std::vector<double> heldout_loss;  // entry 0 before training
};

/// Trains the reverse.* weights alone to predict x0 from forward-diffused patches
/// at times drawn uniformly from 1..K.
PretrainHistory pretrain_reverse_model(UnfoldedModel& model, const PatchSource& patches,
                                       const std::vector<Tensor>& heldout,
                                       const TrainOptions& options,
                                       const std::function<void(const TrainRow&)>& progress = {});

ParameterSet reverse_weights(const UnfoldedModel& model);
void load_reverse_weights(UnfoldedModel& model, const ParameterSet& weights);

/// The learned reverse hop as a Denoiser over the block-major flat layout.
class LearnedReverseDenoiser final : public denoise::Denoiser {
 public:
  LearnedReverseDenoiser(const UnfoldedModel& model, sensing::BlockScheme scheme)
      : model_(&model), scheme_(scheme) {}
  denoise::DenoiserKind kind() const override { return denoise::DenoiserKind::learned; }
  denoise::Capabilities capabilities() const override { return {false, false, true}; }
  std::vector<double> apply(std::span<const double> h,
                            const denoise::DenoiseContext& ctx) const override;

 private:
  const UnfoldedModel* model_;
  sensing::BlockScheme scheme_;
};

}  // namespace dmpcs::unfolded

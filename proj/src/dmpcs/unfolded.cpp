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

#include "dmpcs/unfolded.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "dmpcs/errors.hpp"
#include "dmpcs/metrics.hpp"
#include "dmpcs/optim.hpp"
#include "dmpcs/rng.hpp"

namespace dmpcs::unfolded {

namespace {

struct Initializer {
  UnfoldedModel& model;
  Rng rng;

  void conv(const std::string& name, std::size_t cout, std::size_t cin, bool zero) {
    Tensor w({cout, cin, 3, 3});
    if (!zero) {
      const double sd = std::sqrt(2.0 / double(cin * 9));
      for (double& v : w.data()) v = sd * rng.normal();
    }
    model.params[name + ".weight"] = std::move(w);
    model.params[name + ".bias"] = Tensor({cout});
  }

  void resblock(const std::string& prefix, std::size_t in, std::size_t out) {
    const std::size_t c = model.config.channels;
    conv(prefix + "conv_in", c, in, false);
    for (std::size_t j = 0; j < model.config.res_units; ++j) {
      const std::string unit = prefix + "unit" + std::to_string(j) + ".";
      conv(unit + "conv1", c, c, false);
      conv(unit + "conv2", c, c, true);
    }
    conv(prefix + "conv_out", out, c, true);
  }
};

ad::Var conv(ModelGraph& mg, ad::Var x, const std::string& name) {
  return ad::conv2d(x, mg.param(name + ".weight"), mg.param(name + ".bias"));
}

ad::Var resblock(ModelGraph& mg, ad::Var x, const std::string& prefix) {
  ad::Var h = conv(mg, x, prefix + "conv_in");
  for (std::size_t j = 0; j < mg.model().config.res_units; ++j) {
    const std::string unit = prefix + "unit" + std::to_string(j) + ".";
    h = ad::add(h, conv(mg, ad::relu(conv(mg, h, unit + "conv1")), unit + "conv2"));
  }
  return conv(mg, h, prefix + "conv_out");
}

std::string step_prefix(std::size_t step) { return "step" + std::to_string(step) + ".res."; }

Tensor to_image(std::span<const double> flat, const sensing::BlockScheme& scheme) {
  Tensor blocks({scheme.block_count(), scheme.block_length()},
                std::vector<double>(flat.begin(), flat.end()));
  return sensing::merge_blocks(blocks, scheme).reshaped({1, scheme.height, scheme.width});
}

std::vector<double> to_blocks(const Tensor& image, const sensing::BlockScheme& scheme) {
  return sensing::partition_blocks(image, scheme).values();
}

}  // namespace

void UnfoldedConfig::validate(const diffusion::DiffusionSchedule& schedule) const {
  require(block >= 1, "block size must be positive");
  require(channels >= 1, "channel count C must be at least 1");
  require(reverse_width >= 1 && reverse_depth >= 1, "reverse model needs width and depth >= 1");
  require(time_embedding >= 2 && time_embedding % 2 == 0, "time embedding size must be even");
  require(tail_channels >= 1, "tail needs at least one channel");
  require(stride >= 1 && start >= stride && start % stride == 0,
          "subsequence start K must be a positive multiple of the stride");
  require(start <= schedule.steps(), "subsequence start K=" + std::to_string(start) +
                                         " exceeds the schedule length T=" +
                                         std::to_string(schedule.steps()));
}

std::size_t UnfoldedModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params) n += t.size();
  return n;
}

sensing::SensingOperator UnfoldedModel::sensing_operator() const {
  return sensing::SensingOperator(params.at("phi"), seed, config.train_phi);
}

std::string lambda_name(std::size_t step) { return "step" + std::to_string(step) + ".log_lambda"; }

double UnfoldedModel::lambda(std::size_t step) const {
  return std::exp(params.at(lambda_name(step)).item());
}

void UnfoldedModel::apply_freeze_policy() {
  frozen.clear();
  for (const auto& [name, t] : params) {
    if (config.freeze_diffusion && name.rfind("reverse.", 0) == 0) frozen.insert(name);
    if (!config.train_phi && name == "phi") frozen.insert(name);
  }
}

double exact_log(double value) {
  require(value > 0.0, "exact_log needs a positive value");
  const double l = std::log(value);
  if (std::exp(l) == value) return l;
  double lo = l, hi = l;
  for (int i = 0; i < 64; ++i) {
    lo = std::nextafter(lo, -std::numeric_limits<double>::infinity());
    if (std::exp(lo) == value) return lo;
    hi = std::nextafter(hi, std::numeric_limits<double>::infinity());
    if (std::exp(hi) == value) return hi;
  }
  return l;
}

UnfoldedModel build_model(const UnfoldedConfig& cfg, const diffusion::DiffusionSchedule& schedule,
                          const sensing::SensingOperator& op, std::uint64_t init_seed) {
  cfg.validate(schedule);
  require(op.cols() == cfg.block * cfg.block,
          "sensing operator has N=" + std::to_string(op.cols()) + " but the block size " +
              std::to_string(cfg.block) + " needs N=" + std::to_string(cfg.block * cfg.block));
  UnfoldedModel model;
  model.config = cfg;
  model.schedule = schedule;
  model.times = cfg.times();
  model.seed = init_seed;
  model.params["phi"] = op.matrix();
  for (std::size_t k = 0; k < cfg.steps(); ++k) {
    const double ab = schedule.alpha_bar(model.times.times[k]);
    model.params[lambda_name(k)] = Tensor::scalar(exact_log(std::sqrt(ab)));
  }

  Initializer init{model, Rng(init_seed)};
  const std::size_t c = cfg.channels;
  init.resblock("head.", 1, 1 + c);
  for (std::size_t k = 0; k < cfg.steps(); ++k) init.resblock(step_prefix(k), 1 + c, 1 + c);
  for (std::size_t l = 0; l < cfg.reverse_depth; ++l) {
    const std::string name = "reverse.conv" + std::to_string(l);
    init.conv(name, cfg.reverse_width, l == 0 ? 1 : cfg.reverse_width, false);
    model.params["reverse.time" + std::to_string(l) + ".weight"] =
        Tensor({cfg.reverse_width, cfg.time_embedding});
  }
  init.conv("reverse.out", 1, cfg.reverse_width, true);
  init.resblock("tail.", cfg.tail_channels, 1);
  model.apply_freeze_policy();
  return model;
}

ad::Var ModelGraph::param(const std::string& name) {
  auto it = model_->params.find(name);
  require(it != model_->params.end(), "model has no parameter '" + name + "'");
  return graph_->parameter(name, it->second, !model_->is_frozen(name));
}

HeadOutput head_block(ModelGraph& mg, ad::Var adjoint_image) {
  const auto& shape = adjoint_image.shape();
  require(shape.size() == 3 && shape[0] == 1,
          "head_block: input must be a [1,H,W] image, got " + shape_string(shape));
  const auto& model = mg.model();
  const ad::Var out = resblock(mg, adjoint_image, "head.");
  const double a = std::sqrt(model.schedule.alpha_bar(model.times.times.front()));
  HeadOutput h;
  h.x = ad::add(ad::scale(adjoint_image, a), ad::slice_channels(out, 0, 1));
  h.z = ad::slice_channels(out, 1, model.config.channels);
  return h;
}

ad::Var gradient_descent_step(ModelGraph& mg, ad::Var x, ad::Var y, std::size_t step) {
  const auto& model = mg.model();
  require(step < model.times.step_count(), "step index out of range");
  const auto& xs = x.shape();
  require(xs.size() == 3 && xs[0] == 1, "gradient step: x must be [1,H,W]");
  const std::size_t b = model.config.block;
  const ad::Var phi = mg.param("phi");
  const double a = std::sqrt(model.schedule.alpha_bar(model.times.times[step]));
  const ad::Var y_t = ad::scale(y, a);
  const ad::Var residual = ad::sub(ad::block_sense(x, phi, b), y_t);
  const ad::Var grad = ad::block_adjoint(residual, phi, b, xs[1], xs[2]);
  const ad::Var lambda = ad::exp(mg.param(lambda_name(step)));
  return ad::sub(x, ad::mul_scalar(grad, lambda));
}

ResOutput step_resblock(ModelGraph& mg, ad::Var s, ad::Var z, std::size_t step) {
  const std::size_t c = mg.model().config.channels;
  require(s.shape().size() == 3 && s.shape()[0] == 1, "step_resblock: s must be [1,H,W]");
  require(z.shape().size() == 3 && z.shape()[0] == c,
          "step_resblock: z must have " + std::to_string(c) + " channels, got " +
              shape_string(z.shape()));
  const ad::Var out = resblock(mg, ad::concat_channels({s, z}), step_prefix(step));
  return {ad::add(s, ad::slice_channels(out, 0, 1)), ad::slice_channels(out, 1, c)};
}

std::vector<double> time_embedding(std::size_t t, std::size_t dim) {
  std::vector<double> e(dim);
  const std::size_t half = dim / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * double(i) / double(half));
    e[2 * i] = std::sin(double(t) * freq);
    e[2 * i + 1] = std::cos(double(t) * freq);
  }
  return e;
}

ad::Var reverse_model_x0(ModelGraph& mg, ad::Var r, std::size_t t) {
  const auto& model = mg.model();
  const auto& cfg = model.config;
  require(r.shape().size() == 3 && r.shape()[0] == 1, "reverse model input must be [1,H,W]");
  const double ab = model.schedule.alpha_bar(t);
  const ad::Var emb =
      mg.graph().constant(Tensor({cfg.time_embedding}, time_embedding(t, cfg.time_embedding)));
  ad::Var h = r;
  for (std::size_t l = 0; l < cfg.reverse_depth; ++l) {
    const std::string name = "reverse.conv" + std::to_string(l);
    const ad::Var bias = ad::add(mg.param(name + ".bias"),
                                 ad::matvec(mg.param("reverse.time" + std::to_string(l) + ".weight"), emb));
    h = ad::relu(ad::conv2d(h, mg.param(name + ".weight"), bias));
  }
  return ad::add(ad::scale(r, 1.0 / std::sqrt(ab)), conv(mg, h, "reverse.out"));
}

ad::Var reverse_model_hop(ModelGraph& mg, ad::Var r, std::size_t t, std::size_t t_prev,
                          const ReverseOverride& over) {
  const auto& model = mg.model();
  const auto c = diffusion::posterior_coefficients(model.schedule, t, t_prev);
  ad::Var x0 = over.x0 ? mg.graph().constant(over.x0->reshaped(r.shape()))
                       : reverse_model_x0(mg, r, t);
  require(x0.shape() == r.shape(), "x0 override does not match the input shape");
  const ad::Var mean = ad::add(ad::scale(r, c.signal), ad::scale(x0, c.clean));
  if (!over.noise) return mean;
  require(over.noise->size() == r.value().size(), "reverse noise does not match the input");
  return ad::add(mean, ad::scale(mg.graph().constant(over.noise->reshaped(r.shape())),
                                 std::sqrt(c.variance)));
}

ad::Var reverse_model_step(ModelGraph& mg, ad::Var r, std::size_t step,
                           const ReverseOverride& over) {
  const auto& times = mg.model().times;
  require(step < times.step_count(), "reverse step " + std::to_string(step) +
                                         " is not on the subsequence (" +
                                         std::to_string(times.step_count()) + " steps)");
  return reverse_model_hop(mg, r, times.times[step], times.times[step + 1], over);
}

ad::Var tail_block(ModelGraph& mg, ad::Var x) {
  const std::size_t c = mg.model().config.tail_channels;
  require(x.shape().size() == 3 && x.shape()[0] == c,
          "tail_block expects " + std::to_string(c) + " input channels, got " +
              shape_string(x.shape()));
  const ad::Var base = c == 1 ? x : ad::slice_channels(x, 0, 1);
  return ad::add(base, resblock(mg, x, "tail."));
}

ad::Var forward_graph(ModelGraph& mg, ad::Var y, const ForwardOptions& options) {
  const auto& model = mg.model();
  const auto& cfg = model.config;
  require(cfg.tail_channels == 1, "forward() runs the single-channel pipeline only");
  sensing::BlockScheme scheme{cfg.block, options.height, options.width};
  scheme.validate();
  const std::size_t blocks = scheme.block_count();
  const std::size_t len = blocks * scheme.block_length();
  require(y.shape().size() == 2 && y.shape()[0] == blocks && y.shape()[1] == model.measurements(),
          "forward: y must be [" + std::to_string(blocks) + "," +
              std::to_string(model.measurements()) + "], got " + shape_string(y.shape()));

  const OracleSubstitution* oracle = options.oracle ? &*options.oracle : nullptr;
  const bool stochastic = oracle ? oracle->stochastic : cfg.stochastic;
  const std::uint64_t seed = oracle ? oracle->seed : model.seed;
  solver::NoiseStream noise(seed, oracle ? oracle->zero_noise : false);

  std::vector<double> truth_blocks;
  std::optional<sensing::SensingOperator> op;
  std::optional<solver::OnsagerTracker> tracker;
  if (oracle) {
    require(oracle->truth.size() == len, "oracle substitution needs the ground-truth image");
    truth_blocks = to_blocks(Tensor({1, scheme.height, scheme.width}, oracle->truth), scheme);
    op.emplace(model.sensing_operator());
    tracker.emplace(*op, blocks);
  }

  ad::Graph& g = mg.graph();
  const ad::Var phi = mg.param("phi");
  const ad::Var adj = ad::block_adjoint(y, phi, cfg.block, scheme.height, scheme.width);

  ad::Var x, z;
  if (oracle && oracle->head) {
    const std::size_t t = model.times.times.front();
    const double ab = model.schedule.alpha_bar(t);
    const double a = std::sqrt(ab), s = std::sqrt(1.0 - ab);
    const std::vector<double> gk = noise.draw(len);
    const std::vector<double> adj_blocks = to_blocks(adj.value(), scheme);
    std::vector<double> init(len);
    for (std::size_t i = 0; i < len; ++i) init[i] = a * adj_blocks[i] + s * gk[i];
    x = g.constant(to_image(init, scheme));
    z = g.constant(Tensor({cfg.channels, scheme.height, scheme.width}));
  } else {
    const HeadOutput h = head_block(mg, adj);
    x = h.x;
    z = h.z;
  }

  const denoise::OraclePerfectDenoiser perfect;
  const LearnedReverseDenoiser learned(model, scheme);
  const denoise::Denoiser& reverse = (oracle && oracle->reverse)
                                         ? static_cast<const denoise::Denoiser&>(perfect)
                                         : learned;
  for (std::size_t k = 0; k < model.times.step_count(); ++k) {
    const std::size_t t = model.times.times[k], t_prev = model.times.times[k + 1];
    const double a = std::sqrt(model.schedule.alpha_bar(t));
    const ad::Var s = gradient_descent_step(mg, x, y, k);

    ad::Var r;
    if (oracle && oracle->filter) {
      const bool memory = oracle->onsager != solver::OnsagerMode::off;
      const std::vector<double> x_blocks = to_blocks(x.value(), scheme);
      std::vector<double> y_t(y.value().size());
      for (std::size_t i = 0; i < y_t.size(); ++i) y_t[i] = a * y.value()[i];
      const std::vector<double> o = memory ? tracker->correction() : std::vector<double>(len, 0.0);
      tracker->advance(x_blocks, y_t, memory);
      const std::vector<double> s_blocks = to_blocks(s.value(), scheme);
      std::vector<double> d(len);
      for (std::size_t i = 0; i < len; ++i) d[i] = s_blocks[i] + a * o[i];
      const std::vector<double> fnoise = noise.draw(len);
      const denoise::OracleGaussianFilter filter;
      const std::vector<double> r_blocks =
          filter.apply(d, denoise::FilterContext{t, &model.schedule, truth_blocks, fnoise});
      r = g.constant(to_image(r_blocks, scheme));
    } else {
      const ResOutput res = step_resblock(mg, s, z, k);
      r = res.r;
      z = res.z;
    }

    ReverseOverride over;
    if (oracle && oracle->reverse)
      over.x0 = Tensor({1, scheme.height, scheme.width}, oracle->truth);
    std::vector<double> rnoise;
    if (stochastic) {
      rnoise = noise.draw(len);
      over.noise = to_image(rnoise, scheme);
    }
    x = reverse_model_step(mg, r, k, over);

    if (oracle && oracle->filter) {
      double div = 0.0;
      if (oracle->onsager != solver::OnsagerMode::off) {
        denoise::DenoiseContext ctx;
        ctx.t = t;
        ctx.t_prev = t_prev;
        ctx.schedule = &model.schedule;
        ctx.truth = truth_blocks;
        ctx.noise = rnoise;
        const std::vector<double> r_blocks = to_blocks(r.value(), scheme);
        if (oracle->onsager == solver::OnsagerMode::oracle &&
            reverse.capabilities().analytic_divergence) {
          div = reverse.divergence(r_blocks, ctx);
        } else {
          div = denoise::mc_sure_divergence(
                    [&](std::span<const double> v) { return reverse.apply(v, ctx); }, r_blocks,
                    1e-3, 1, noise.rng())
                    .value;
        }
      }
      tracker->set_divergence(div);
    }
    if (options.steps) options.steps->push_back({x.value(), z.value(), s.value(), r.value()});
  }
  if (oracle && oracle->bypass_tail) return x;
  return tail_block(mg, x);
}

Tensor forward(const UnfoldedModel& model, const Tensor& y, const ForwardOptions& options) {
  ad::Graph g;
  ModelGraph mg(g, model);
  const ad::Var out = forward_graph(mg, g.constant(y), options);
  if (!out.value().all_finite()) throw NumericalError("forward produced non-finite values");
  return out.value();
}

// ---------------------------------------------------------------------------

ParameterSet reverse_weights(const UnfoldedModel& model) {
  ParameterSet out;
  for (const auto& [name, t] : model.params)
    if (name.rfind("reverse.", 0) == 0) out[name] = t;
  return out;
}

void load_reverse_weights(UnfoldedModel& model, const ParameterSet& weights) {
  for (const auto& [name, t] : model.params) {
    if (name.rfind("reverse.", 0) != 0) continue;
    auto it = weights.find(name);
    require(it != weights.end(), "pretrained weights lack '" + name + "'");
    require(it->second.shape() == t.shape(), "pretrained weight '" + name + "' has shape " +
                                                 shape_string(it->second.shape()) +
                                                 ", model expects " + shape_string(t.shape()));
  }
  for (const auto& [name, t] : weights) {
    require(model.params.count(name) != 0, "model has no parameter '" + name + "'");
    model.params[name] = t;
  }
}

double validation_psnr(const UnfoldedModel& model, const std::vector<Tensor>& images) {
  require(!images.empty(), "validation set is empty");
  const sensing::SensingOperator op = model.sensing_operator();
  double total = 0.0;
  for (const Tensor& img : images) {
    require(img.rank() == 3 && img.dim(0) == 1, "validation images must be [1,H,W]");
    const sensing::BlockScheme scheme{model.config.block, img.dim(1), img.dim(2)};
    const Tensor y = sensing::forward(op, sensing::partition_blocks(img, scheme));
    const Tensor rec = forward(model, y, image_options(img.dim(1), img.dim(2)));
    total += std::min(metrics::psnr(rec, img), 100.0);
  }
  return total / double(images.size());
}

namespace {

void accumulate(ad::Gradients& total, const ad::Gradients& part, double weight) {
  for (const auto& [name, g] : part) {
    auto [it, fresh] = total.try_emplace(name, Tensor(g.shape()));
    auto dst = it->second.data();
    auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += weight * src[i];
  }
}

void clip_global_norm(ad::Gradients& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, g] : grads)
    for (double v : g.data()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (!(norm > max_norm)) return;
  const double f = max_norm / norm;
  for (auto& [name, g] : grads)
    for (double& v : g.data()) v *= f;
}

template <typename LossFn>
double run_epochs(UnfoldedModel& model, const PatchSource& patches, const TrainOptions& options,
                  std::vector<double>& loss_history, const LossFn& image_loss,
                  const std::function<double(std::size_t)>& after_epoch,
                  const std::function<void(const TrainRow&)>& progress) {
  require(options.epochs >= 1 && options.batch >= 1, "epochs and batch size must be positive");
  require(options.lr >= 0.0 && options.lr_min >= 0.0, "learning rates must be non-negative");
  require(options.clip_norm >= 0.0, "clip_norm must be non-negative");
  optim::AdamState adam;
  double last = 0.0;
  for (std::size_t e = 0; e < options.epochs; ++e) {
    const std::vector<Tensor> items = patches(e);
    require(!items.empty(), "dataset is empty");
    adam.learning_rate = optim::cosine_lr(double(e), double(options.epochs), options.lr,
                                          std::min(options.lr_min, options.lr));
    const std::size_t batches = (items.size() + options.batch - 1) / options.batch;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * options.batch;
      const std::size_t hi = std::min(items.size(), lo + options.batch);
      ad::Gradients grads;
      double loss = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        ad::Graph g;
        ModelGraph mg(g, model);
        const ad::Var l = image_loss(mg, items[i], i);
        loss += l.value().item() / double(hi - lo);
        accumulate(grads, g.backward(l), 1.0 / double(hi - lo));
      }
      if (!std::isfinite(loss))
        throw NumericalError("non-finite loss at epoch " + std::to_string(e) + ", batch " +
                             std::to_string(b));
      if (options.clip_norm > 0.0) clip_global_norm(grads, options.clip_norm);
      optim::adam_update(model.params, grads, adam);
      loss_history.push_back(loss);
      const bool last_batch = b + 1 == batches;
      const double val = last_batch ? after_epoch(e + 1) : std::numeric_limits<double>::quiet_NaN();
      if (progress) progress({e + 1, b, loss, adam.learning_rate, val});
      last = loss;
    }
  }
  return last;
}

}  // namespace

TrainHistory train(UnfoldedModel& model, const PatchSource& patches,
                   const std::vector<Tensor>& validation, const TrainOptions& options,
                   const std::function<void(const TrainRow&)>& progress) {
  TrainHistory h;
  h.val_psnr.push_back(validation_psnr(model, validation));
  h.best_epoch = 0;
  h.best_val_psnr = h.val_psnr.front();
  ParameterSet best = model.params;

  auto loss_fn = [&](ModelGraph& mg, const Tensor& img, std::size_t) {
    require(img.rank() == 3 && img.dim(0) == 1, "training patches must be [1,H,W]");
    ad::Graph& g = mg.graph();
    const ad::Var x = g.constant(img);
    const ad::Var y = ad::block_sense(x, mg.param("phi"), model.config.block);
    return ad::mse(forward_graph(mg, y, image_options(img.dim(1), img.dim(2))), x);
  };
  auto after_epoch = [&](std::size_t epoch) {
    const double v = validation_psnr(model, validation);
    h.val_psnr.push_back(v);
    if (v > h.best_val_psnr) {
      h.best_val_psnr = v;
      h.best_epoch = epoch;
      best = model.params;
    }
    return v;
  };
  auto record = [&](const TrainRow& row) {
    h.rows.push_back(row);
    if (progress) progress(row);
  };
  run_epochs(model, patches, options, h.loss, loss_fn, after_epoch, record);
  model.params = std::move(best);
  return h;
}

PretrainHistory pretrain_reverse_model(UnfoldedModel& model, const PatchSource& patches,
                                       const std::vector<Tensor>& heldout,
                                       const TrainOptions& options,
                                       const std::function<void(const TrainRow&)>& progress) {
  require(!heldout.empty(), "held-out set is empty");
  // Only the reverse model takes part; its weights are trained even when the
  // unfolded model keeps them frozen.
  UnfoldedModel work = model;
  work.frozen.clear();
  const std::size_t horizon = model.config.start;

  struct Sample {
    Tensor x;
    Tensor xt;
    std::size_t t;
  };
  std::vector<Sample> fixed;
  Rng held_rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  for (const Tensor& x : heldout) {
    const std::size_t t = 1 + held_rng.index(horizon);
    const auto noise = held_rng.normal_vector(x.size());
    fixed.push_back({x, Tensor(x.shape(), diffusion::forward_marginal(x.data(), t, work.schedule, noise)), t});
  }
  auto heldout_loss = [&]() {
    double total = 0.0;
    for (const Sample& s : fixed) {
      ad::Graph g;
      ModelGraph mg(g, work);
      total += ad::mse(reverse_model_x0(mg, g.constant(s.xt), s.t), g.constant(s.x)).value().item();
    }
    return total / double(fixed.size());
  };

  PretrainHistory h;
  h.heldout_loss.push_back(heldout_loss());
  Rng rng(options.seed);
  auto loss_fn = [&](ModelGraph& mg, const Tensor& img, std::size_t) {
    const std::size_t t = 1 + rng.index(horizon);
    const auto noise = rng.normal_vector(img.size());
    ad::Graph& g = mg.graph();
    const Tensor xt(img.shape(), diffusion::forward_marginal(img.data(), t, work.schedule, noise));
    return ad::mse(reverse_model_x0(mg, g.constant(xt), t), g.constant(img));
  };
  auto after_epoch = [&](std::size_t) {
    const double v = heldout_loss();
    h.heldout_loss.push_back(v);
    return v;
  };
  run_epochs(work, patches, options, h.loss, loss_fn, after_epoch, progress);
  load_reverse_weights(model, reverse_weights(work));
  return h;
}

std::vector<double> LearnedReverseDenoiser::apply(std::span<const double> h,
                                                  const denoise::DenoiseContext& ctx) const {
  require(h.size() == scheme_.block_count() * scheme_.block_length(),
          "learned reverse model: input does not match the block scheme");
  ad::Graph g;
  ModelGraph mg(g, *model_);
  ReverseOverride over;
  if (!ctx.noise.empty()) over.noise = to_image(ctx.noise, scheme_);
  const ad::Var out = reverse_model_hop(mg, g.constant(to_image(h, scheme_)), ctx.t, ctx.t_prev, over);
  return to_blocks(out.value(), scheme_);
}

}  // namespace dmpcs::unfolded

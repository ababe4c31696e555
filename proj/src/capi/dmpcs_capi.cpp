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


#include "dmpcs/dmpcs.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <string>

#include <nlohmann/json.hpp>

#include "dmpcs/errors.hpp"
#include "dmpcs/experiments.hpp"
#include "dmpcs/io.hpp"
#include "dmpcs/metrics.hpp"
#include "dmpcs/solver.hpp"
#include "dmpcs/unfolded.hpp"

using namespace dmpcs;

struct dmpcs_tensor {
  Tensor value;
};
struct dmpcs_operator {
  sensing::SensingOperator value;
};
struct dmpcs_model {
  unfolded::UnfoldedModel value;
};

namespace {

thread_local std::string g_last_error;

template <class F>
dmpcs_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return DMPCS_OK;
  } catch (const ValidationError& e) {
    g_last_error = e.what();
    return DMPCS_ERR_INVALID_ARGUMENT;
  } catch (const IoError& e) {
    g_last_error = e.what();
    return DMPCS_ERR_IO;
  } catch (const NumericalError& e) {
    g_last_error = e.what();
    return DMPCS_ERR_NUMERICAL;
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("bad JSON: ") + e.what();
    return DMPCS_ERR_INVALID_ARGUMENT;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return DMPCS_ERR_INVALID_ARGUMENT;
  } catch (const std::out_of_range& e) {
    g_last_error = e.what();
    return DMPCS_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DMPCS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DMPCS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return DMPCS_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw ValidationError(std::string(what) + " must not be NULL");
}

std::string str(const char* s, const char* fallback) { return s ? s : fallback; }

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <class T, class V>
T* wrap(V&& v) {
  return new T{std::forward<V>(v)};
}

sensing::BlockScheme scheme_for(const sensing::SensingOperator& op, std::size_t h, std::size_t w) {
  const auto b = static_cast<std::size_t>(std::lround(std::sqrt(double(op.cols()))));
  require(b * b == op.cols(), "operator width " + std::to_string(op.cols()) + " is not a square block");
  sensing::BlockScheme s{b, h, w};
  s.validate();
  return s;
}

void check_measurements(const sensing::SensingOperator& op, const Tensor& y,
                        const sensing::BlockScheme& s) {
  require(y.rank() == 2 && y.dim(0) == s.block_count() && y.dim(1) == op.rows(),
          "measurements must be [" + std::to_string(s.block_count()) + "," +
              std::to_string(op.rows()) + "] for a " + std::to_string(s.height) + "x" +
              std::to_string(s.width) + " image, got " + shape_string(y.shape()));
}

Tensor as_image(const Tensor& blocks_or_flat, const sensing::BlockScheme& s) {
  Tensor b = blocks_or_flat.reshaped({s.block_count(), s.block_length()});
  return sensing::merge_blocks(b, s).reshaped({1, s.height, s.width});
}

Tensor image_blocks(const Tensor& image, const sensing::BlockScheme& s) {
  const std::size_t pixels = s.height * s.width;
  require(image.size() == pixels, "image has " + std::to_string(image.size()) +
                                      " pixels, expected " + std::to_string(pixels));
  return sensing::partition_blocks(image.reshaped({s.height, s.width}), s);
}

diffusion::DiffusionSchedule schedule_of(size_t steps, double b0, double b1) {
  return diffusion::build_schedule(steps, b0, b1);
}

unfolded::UnfoldedConfig to_config(const dmpcs_model_config& c) {
  unfolded::UnfoldedConfig cfg;
  cfg.block = c.block;
  cfg.channels = c.channels;
  cfg.res_units = c.res_units;
  cfg.start = c.start;
  cfg.stride = c.stride;
  cfg.reverse_width = c.reverse_width;
  cfg.reverse_depth = c.reverse_depth;
  cfg.freeze_diffusion = c.freeze_diffusion != 0;
  cfg.train_phi = c.train_phi != 0;
  cfg.stochastic = c.stochastic != 0;
  return cfg;
}

std::unique_ptr<denoise::Denoiser> amp_denoiser(const dmpcs_amp_options& o) {
  const std::string name = str(o.denoiser, "mmse_bg");
  if (name == "mmse_gaussian") return std::make_unique<denoise::MmseGaussianDenoiser>();
  if (name == "mmse_bg") return std::make_unique<denoise::MmseBernoulliGaussianDenoiser>(o.rho);
  if (name == "soft_threshold") return std::make_unique<denoise::SoftThresholdDenoiser>(o.tau, true);
  throw ValidationError("unknown AMP denoiser '" + name +
                        "' (expected mmse_gaussian, mmse_bg or soft_threshold)");
}

denoise::FilterVariance parse_filter_var(const std::string& s) {
  if (s == "marginal") return denoise::FilterVariance::marginal;
  if (s == "sqrt_alpha") return denoise::FilterVariance::sqrt_alpha;
  throw ValidationError("unknown filter variance '" + s + "' (expected marginal or sqrt_alpha)");
}

io::DatasetHandle dataset_of(const dmpcs_train_options& o) {
  need(o.data_dir, "data_dir");
  return io::open_dataset(o.data_dir, o.crop, o.flip != 0, o.val_fraction, o.seed);
}

unfolded::TrainOptions train_options_of(const dmpcs_train_options& o) {
  unfolded::TrainOptions t;
  t.epochs = o.epochs;
  t.batch = o.batch;
  t.lr = o.lr;
  t.lr_min = o.lr_min;
  t.clip_norm = o.clip_norm;
  t.seed = o.seed;
  return t;
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json series(const std::vector<double>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : v) a.push_back(number_or_null(x));
  return a;
}

/// Streams progress rows; the file is rewritten from scratch for each run.
class ProgressLog {
 public:
  explicit ProgressLog(const char* path) {
    if (!path) return;
    out_.open(path, std::ios::trunc);
    if (!out_) throw IoError(std::string("cannot write progress log ") + path);
    out_ << "epoch,batch,loss,lr,val_psnr\n";
  }
  void operator()(const unfolded::TrainRow& r) {
    if (!out_.is_open()) return;
    char line[160];
    std::snprintf(line, sizeof line, "%zu,%zu,%.9g,%.9g,%.9g\n", r.epoch, r.batch, r.loss, r.lr,
                  r.val_psnr);
    out_ << line << std::flush;
  }

 private:
  std::ofstream out_;
};

}  // namespace

extern "C" {

const char* dmpcs_version(void) { return DMPCS_VERSION; }
const char* dmpcs_last_error(void) { return g_last_error.c_str(); }
void dmpcs_string_free(char* s) { std::free(s); }

dmpcs_status dmpcs_tensor_create(const size_t* shape, size_t rank, const double* data,
                                 dmpcs_tensor** out) {
  return guarded([&] {
    need(out, "out");
    require(rank == 0 || shape, "shape must not be NULL");
    Shape s(shape, shape + rank);
    Tensor t(s);
    if (data) std::memcpy(t.data().data(), data, t.size() * sizeof(double));
    *out = wrap<dmpcs_tensor>(std::move(t));
  });
}

size_t dmpcs_tensor_rank(const dmpcs_tensor* t) { return t ? t->value.rank() : 0; }
size_t dmpcs_tensor_dim(const dmpcs_tensor* t, size_t axis) {
  return t && axis < t->value.rank() ? t->value.dim(axis) : 0;
}
size_t dmpcs_tensor_size(const dmpcs_tensor* t) { return t ? t->value.size() : 0; }
const double* dmpcs_tensor_data(const dmpcs_tensor* t) {
  return t ? t->value.data().data() : nullptr;
}

dmpcs_status dmpcs_tensor_load(const char* path, dmpcs_tensor** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = wrap<dmpcs_tensor>(io::load_tensor(path));
  });
}

dmpcs_status dmpcs_tensor_save(const dmpcs_tensor* t, const char* path) {
  return guarded([&] {
    need(t, "tensor");
    need(path, "path");
    io::save_tensor(t->value, path);
  });
}

dmpcs_status dmpcs_pgm_load(const char* path, dmpcs_tensor** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = wrap<dmpcs_tensor>(io::load_pgm(path));
  });
}

dmpcs_status dmpcs_pgm_save(const dmpcs_tensor* image, const char* path) {
  return guarded([&] {
    need(image, "image");
    need(path, "path");
    io::save_pgm(image->value, path);
  });
}

void dmpcs_tensor_free(dmpcs_tensor* t) { delete t; }

dmpcs_status dmpcs_operator_generate(size_t m, size_t n, uint64_t seed, dmpcs_operator** out) {
  return guarded([&] {
    need(out, "out");
    *out = wrap<dmpcs_operator>(sensing::gen_sensing_matrix(m, n, seed));
  });
}

dmpcs_status dmpcs_operator_for_ratio(double ratio, size_t block, uint64_t seed,
                                      dmpcs_operator** out) {
  return guarded([&] {
    need(out, "out");
    require(block >= 1, "block must be positive");
    const std::size_t n = block * block;
    require(ratio > 0.0 && ratio < 1.0, "ratio must lie in (0,1)");
    *out = wrap<dmpcs_operator>(
        sensing::gen_sensing_matrix(sensing::measurements_for_ratio(ratio, n), n, seed));
  });
}

dmpcs_status dmpcs_operator_load(const char* path, dmpcs_operator** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    Tensor m = io::load_tensor(path);
    require(m.rank() == 2, std::string(path) + ": operator must be a rank-2 tensor, got " +
                               shape_string(m.shape()));
    *out = wrap<dmpcs_operator>(sensing::SensingOperator(std::move(m)));
  });
}

dmpcs_status dmpcs_operator_save(const dmpcs_operator* op, const char* path) {
  return guarded([&] {
    need(op, "operator");
    need(path, "path");
    io::save_tensor(op->value.matrix(), path);
  });
}

size_t dmpcs_operator_rows(const dmpcs_operator* op) { return op ? op->value.rows() : 0; }
size_t dmpcs_operator_cols(const dmpcs_operator* op) { return op ? op->value.cols() : 0; }
void dmpcs_operator_free(dmpcs_operator* op) { delete op; }

dmpcs_status dmpcs_sense(const dmpcs_operator* op, const dmpcs_tensor* image, double sigma,
                         uint64_t seed, dmpcs_tensor** y) {
  return guarded([&] {
    need(op, "operator");
    need(image, "image");
    need(y, "y");
    const Tensor& img = image->value;
    require(img.rank() == 2 || (img.rank() == 3 && img.dim(0) == 1),
            "image must be [H,W] or [1,H,W], got " + shape_string(img.shape()));
    const std::size_t h = img.dim(img.rank() - 2), w = img.dim(img.rank() - 1);
    const auto s = scheme_for(op->value, h, w);
    *y = wrap<dmpcs_tensor>(sensing::sample(op->value, image_blocks(img, s), sigma, seed).y);
  });
}

dmpcs_status dmpcs_reconstruct_adjoint(const dmpcs_operator* op, const dmpcs_tensor* y,
                                       size_t height, size_t width, dmpcs_tensor** out) {
  return guarded([&] {
    need(op, "operator");
    need(y, "y");
    need(out, "out");
    const auto s = scheme_for(op->value, height, width);
    check_measurements(op->value, y->value, s);
    *out = wrap<dmpcs_tensor>(as_image(sensing::adjoint(op->value, y->value), s));
  });
}

void dmpcs_amp_options_default(dmpcs_amp_options* o) {
  if (!o) return;
  o->denoiser = "mmse_bg";
  o->rho = 0.1;
  o->tau = 1.5;
  o->onsager = "oracle";
  o->iterations = 30;
  o->seed = 0;
}

dmpcs_status dmpcs_reconstruct_amp(const dmpcs_operator* op, const dmpcs_tensor* y, size_t height,
                                   size_t width, const dmpcs_amp_options* options,
                                   dmpcs_tensor** out) {
  return guarded([&] {
    need(op, "operator");
    need(y, "y");
    need(out, "out");
    dmpcs_amp_options o;
    dmpcs_amp_options_default(&o);
    if (options) o = *options;
    const auto s = scheme_for(op->value, height, width);
    check_measurements(op->value, y->value, s);
    const auto den = amp_denoiser(o);
    solver::AmpOptions ao;
    ao.onsager = solver::parse_onsager_mode(str(o.onsager, "oracle"));
    const auto res =
        solver::amp_reconstruct(y->value.data(), op->value, *den, o.iterations, ao, o.seed);
    *out = wrap<dmpcs_tensor>(as_image(Tensor::from(res.x), s));
  });
}

void dmpcs_dmp_options_default(dmpcs_dmp_options* o) {
  if (!o) return;
  o->schedule_steps = 1000;
  o->beta_start = 1e-4;
  o->beta_end = 0.02;
  o->start = 1000;
  o->stride = 100;
  o->onsager = "oracle";
  o->init = "adjoint";
  o->filter_var = "marginal";
  o->stochastic = 1;
  o->seed = 0;
  o->truth = nullptr;
  o->model = nullptr;
}

dmpcs_status dmpcs_reconstruct_dmp(const dmpcs_operator* op, const dmpcs_tensor* y, size_t height,
                                   size_t width, const dmpcs_dmp_options* options,
                                   dmpcs_tensor** out) {
  return guarded([&] {
    need(op, "operator");
    need(y, "y");
    need(out, "out");
    dmpcs_dmp_options o;
    dmpcs_dmp_options_default(&o);
    if (options) o = *options;
    const auto s = scheme_for(op->value, height, width);
    check_measurements(op->value, y->value, s);

    solver::DmpOptions dopt;
    dopt.onsager = solver::parse_onsager_mode(str(o.onsager, "oracle"));
    const std::string init = str(o.init, "adjoint");
    if (init == "adjoint")
      dopt.init = solver::DmpInit::adjoint;
    else if (init == "pure_noise")
      dopt.init = solver::DmpInit::pure_noise;
    else
      throw ValidationError("unknown init '" + init + "' (expected adjoint or pure_noise)");
    dopt.stochastic_reverse = o.stochastic != 0;

    // A learned model brings its own schedule; otherwise build one from the options.
    diffusion::DiffusionSchedule schedule;
    diffusion::TimeSubsequence times;
    std::unique_ptr<denoise::GaussianFilter> filter;
    std::unique_ptr<denoise::Denoiser> reverse;
    Tensor truth;
    if (o.truth) {
      truth = image_blocks(o.truth->value, s);
      schedule = schedule_of(o.schedule_steps, o.beta_start, o.beta_end);
      times = diffusion::ddim_times(o.start, o.stride);
      filter = std::make_unique<denoise::OracleGaussianFilter>(
          parse_filter_var(str(o.filter_var, "marginal")));
      reverse = std::make_unique<denoise::OraclePerfectDenoiser>();
    } else if (o.model) {
      const auto& m = o.model->value;
      require(m.config.block * m.config.block == op->value.cols(),
              "model block size does not match the operator");
      require(dopt.onsager != solver::OnsagerMode::oracle,
              "the learned reverse model has no exact divergence; use onsager mc_sure or off");
      schedule = m.schedule;
      times = m.times;
      filter = std::make_unique<denoise::PassThroughFilter>();
      reverse = std::make_unique<unfolded::LearnedReverseDenoiser>(m, s);
    } else {
      throw ValidationError("DMP needs either a ground-truth image (oracle mode) or a model");
    }
    solver::DmpProblem p;
    p.op = &op->value;
    p.y = y->value.data();
    p.schedule = &schedule;
    p.times = &times;
    p.filter = filter.get();
    p.reverse = reverse.get();
    p.truth = truth.data();
    const auto res = solver::dmp_reconstruct(p, dopt, o.seed);
    *out = wrap<dmpcs_tensor>(as_image(Tensor::from(res.x0), s));
  });
}

void dmpcs_model_config_default(dmpcs_model_config* c) {
  if (!c) return;
  const unfolded::UnfoldedConfig d;
  c->block = d.block;
  c->channels = d.channels;
  c->res_units = d.res_units;
  c->start = d.start;
  c->stride = d.stride;
  c->reverse_width = d.reverse_width;
  c->reverse_depth = d.reverse_depth;
  c->schedule_steps = 200;
  c->beta_start = 1e-4;
  c->beta_end = 0.02;
  c->freeze_diffusion = d.freeze_diffusion;
  c->train_phi = d.train_phi;
  c->stochastic = d.stochastic;
  c->seed = 0;
}

dmpcs_status dmpcs_model_build(const dmpcs_model_config* config, const dmpcs_operator* op,
                               dmpcs_model** out) {
  return guarded([&] {
    need(config, "config");
    need(op, "operator");
    need(out, "out");
    const auto schedule = schedule_of(config->schedule_steps, config->beta_start, config->beta_end);
    *out = wrap<dmpcs_model>(
        unfolded::build_model(to_config(*config), schedule, op->value, config->seed));
  });
}

dmpcs_status dmpcs_model_load(const char* path, dmpcs_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = wrap<dmpcs_model>(io::load_checkpoint(path));
  });
}

dmpcs_status dmpcs_model_save(const dmpcs_model* model, const char* path, const char* run_json) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    nlohmann::json run = run_json ? nlohmann::json::parse(run_json) : nlohmann::json::object();
    io::save_checkpoint(model->value, path, run);
  });
}

dmpcs_status dmpcs_model_operator(const dmpcs_model* model, dmpcs_operator** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = wrap<dmpcs_operator>(model->value.sensing_operator());
  });
}

size_t dmpcs_model_parameter_count(const dmpcs_model* model) {
  return model ? model->value.parameter_count() : 0;
}

dmpcs_status dmpcs_model_reconstruct(const dmpcs_model* model, const dmpcs_tensor* y,
                                     size_t height, size_t width, dmpcs_tensor** out) {
  return guarded([&] {
    need(model, "model");
    need(y, "y");
    need(out, "out");
    const auto op = model->value.sensing_operator();
    check_measurements(op, y->value, scheme_for(op, height, width));
    *out = wrap<dmpcs_tensor>(
        unfolded::forward(model->value, y->value, unfolded::image_options(height, width)));
  });
}

void dmpcs_model_free(dmpcs_model* model) { delete model; }

void dmpcs_train_options_default(dmpcs_train_options* o) {
  if (!o) return;
  const unfolded::TrainOptions d;
  o->data_dir = nullptr;
  o->crop = 32;
  o->flip = 1;
  o->val_fraction = 0.2;
  o->epochs = d.epochs;
  o->batch = d.batch;
  o->lr = d.lr;
  o->lr_min = d.lr_min;
  o->clip_norm = d.clip_norm;
  o->seed = d.seed;
  o->pretrained = nullptr;
  o->progress_csv = nullptr;
}

dmpcs_status dmpcs_train(dmpcs_model* model, const dmpcs_train_options* options,
                         char** history_json) {
  return guarded([&] {
    need(model, "model");
    need(options, "options");
    need(history_json, "history_json");
    auto& m = model->value;
    if (options->pretrained) {
      const auto pre = io::load_checkpoint(options->pretrained);
      unfolded::load_reverse_weights(m, unfolded::reverse_weights(pre));
    }
    const auto ds = dataset_of(*options);
    ProgressLog log(options->progress_csv);
    const auto h = unfolded::train(
        m, [&](std::size_t e) { return ds.epoch_patches(e); }, ds.validation_images(),
        train_options_of(*options), [&](const unfolded::TrainRow& r) { log(r); });
    nlohmann::json j;
    j["loss"] = series(h.loss);
    j["val_psnr"] = series(h.val_psnr);
    j["best_epoch"] = h.best_epoch;
    j["best_val_psnr"] = number_or_null(h.best_val_psnr);
    j["train_items"] = ds.train.size();
    j["validation_items"] = ds.validation.size();
    *history_json = dup(j.dump());
  });
}

dmpcs_status dmpcs_pretrain(dmpcs_model* model, const dmpcs_train_options* options,
                            char** history_json) {
  return guarded([&] {
    need(model, "model");
    need(options, "options");
    need(history_json, "history_json");
    const auto ds = dataset_of(*options);
    ProgressLog log(options->progress_csv);
    const auto h = unfolded::pretrain_reverse_model(
        model->value, [&](std::size_t e) { return ds.epoch_patches(e); }, ds.validation_images(),
        train_options_of(*options), [&](const unfolded::TrainRow& r) { log(r); });
    nlohmann::json j;
    j["loss"] = series(h.loss);
    j["heldout_loss"] = series(h.heldout_loss);
    *history_json = dup(j.dump());
  });
}

void dmpcs_se_options_default(dmpcs_se_options* o) {
  if (!o) return;
  o->algo = "amp";
  o->prior = "bg:0.1";
  o->delta = 0.5;
  o->n = 4096;
  o->iterations = 10;
  o->trials = 20;
  o->onsager = "oracle";
  o->schedule_steps = 1000;
  o->beta_start = 1e-4;
  o->beta_end = 0.02;
  o->start = 1000;
  o->stride = 100;
  o->samples = 100000;
  o->stochastic = 1;
  o->seed = 0;
}

namespace {

experiments::DmpSeResult run_dmp_se(const dmpcs_se_options& o, std::size_t qq_points) {
  experiments::DmpSeConfig c;
  c.prior = solver::Prior::parse(str(o.prior, "gaussian"));
  c.delta = o.delta;
  c.n = o.n;
  c.trials = o.trials;
  c.samples = o.samples;
  c.stochastic = o.stochastic != 0;
  c.onsager = solver::parse_onsager_mode(str(o.onsager, "oracle"));
  c.seed = o.seed;
  const auto schedule = schedule_of(o.schedule_steps, o.beta_start, o.beta_end);
  return experiments::dmp_state_evolution(c, schedule, diffusion::ddim_times(o.start, o.stride),
                                          qq_points);
}

}  // namespace

dmpcs_status dmpcs_se_sim(const dmpcs_se_options* options, char** csv) {
  return guarded([&] {
    need(csv, "csv");
    dmpcs_se_options o;
    dmpcs_se_options_default(&o);
    if (options) o = *options;
    const std::string algo = str(o.algo, "amp");
    if (algo == "amp") {
      experiments::AmpSeConfig c;
      c.prior = solver::Prior::parse(str(o.prior, "bg:0.1"));
      c.delta = o.delta;
      c.n = o.n;
      c.iterations = o.iterations;
      c.trials = o.trials;
      c.onsager = solver::parse_onsager_mode(str(o.onsager, "oracle"));
      c.seed = o.seed;
      *csv = dup(solver::trace_csv(experiments::amp_state_evolution(c)));
    } else if (algo == "dmp") {
      *csv = dup(solver::trace_csv(run_dmp_se(o, 64).trace));
    } else {
      throw ValidationError("unknown algorithm '" + algo + "' (expected amp or dmp)");
    }
  });
}

dmpcs_status dmpcs_qq_dump(const dmpcs_se_options* options, size_t points, char** csv) {
  return guarded([&] {
    need(csv, "csv");
    dmpcs_se_options o;
    dmpcs_se_options_default(&o);
    if (options) o = *options;
    o.trials = 1;
    require(points >= 2, "need at least 2 Q-Q points");
    const auto res = run_dmp_se(o, points);
    const auto times = diffusion::ddim_times(o.start, o.stride);
    std::string out = "time,normal,empirical\n";
    char line[96];
    for (std::size_t k = 0; k < res.qq.size(); ++k)
      for (std::size_t i = 0; i < res.qq[k].normal.size(); ++i) {
        std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\n", times.times[k], res.qq[k].normal[i],
                      res.qq[k].empirical[i]);
        out += line;
      }
    *csv = dup(out);
  });
}

dmpcs_status dmpcs_eval(const dmpcs_tensor* ref, const dmpcs_tensor* rec, double* psnr_db,
                        double* ssim) {
  return guarded([&] {
    need(ref, "reference");
    need(rec, "reconstruction");
    if (psnr_db) *psnr_db = metrics::psnr(ref->value, rec->value);
    if (ssim) *ssim = metrics::ssim(ref->value, rec->value);
  });
}

dmpcs_status dmpcs_flops(const dmpcs_model_config* config, size_t measurements, size_t height,
                         size_t width, size_t probes, const char* format, char** report) {
  return guarded([&] {
    need(config, "config");
    need(report, "report");
    const auto r = metrics::flops_report(to_config(*config), measurements, height, width, probes);
    const std::string f = str(format, "table");
    if (f == "csv")
      *report = dup(r.csv());
    else if (f == "table")
      *report = dup(r.table());
    else
      throw ValidationError("unknown format '" + f + "' (expected csv or table)");
  });
}

dmpcs_status dmpcs_generate_corpus(const char* dir, size_t count, size_t height, size_t width,
                                   uint64_t seed) {
  return guarded([&] {
    need(dir, "dir");
    io::generate_corpus(dir, count, height, width, seed);
  });
}

}  // extern "C"

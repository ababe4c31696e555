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


#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "dmpcs/dmpcs.h"

namespace dmpcs_cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Error raised by a failing C call; carries the status for the exit code.
struct CapiError : std::runtime_error {
  dmpcs_status status;
  CapiError(dmpcs_status s, const std::string& what) : std::runtime_error(what), status(s) {}
};

void check(dmpcs_status s) {
  if (s != DMPCS_OK) throw CapiError(s, dmpcs_last_error());
}

struct TensorFree {
  void operator()(dmpcs_tensor* t) const { dmpcs_tensor_free(t); }
};
struct OperatorFree {
  void operator()(dmpcs_operator* o) const { dmpcs_operator_free(o); }
};
struct ModelFree {
  void operator()(dmpcs_model* m) const { dmpcs_model_free(m); }
};
struct StringFree {
  void operator()(char* s) const { dmpcs_string_free(s); }
};
using TensorPtr = std::unique_ptr<dmpcs_tensor, TensorFree>;
using OperatorPtr = std::unique_ptr<dmpcs_operator, OperatorFree>;
using ModelPtr = std::unique_ptr<dmpcs_model, ModelFree>;
using StringPtr = std::unique_ptr<char, StringFree>;

std::string take(char* s) { return StringPtr(s).get(); }

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw CapiError(DMPCS_ERR_IO, "cannot write " + tmp.string());
    f << text;
    if (!f.flush()) throw CapiError(DMPCS_ERR_IO, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw CapiError(DMPCS_ERR_IO, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CapiError(DMPCS_ERR_IO, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path manifest_path(const fs::path& output) {
  fs::path p = output;
  p += ".manifest.json";
  return p;
}

void write_manifest(const fs::path& output, const std::string& command, const json& config,
                    const json& extra = json::object()) {
  json m;
  m["command"] = command;
  m["config"] = config;
  m["seed"] = config.value("seed", json(0));
  m["versions"] = {{"dmpcs", dmpcs_version()}, {"tensor_format", "DTN1"}, {"checkpoint_format", 1}};
  m["output"] = output.filename().string();
  if (!extra.empty()) m["extra"] = extra;
  write_text(manifest_path(output), m.dump(2) + "\n");
}

// Either stdout or a file plus its manifest.
void emit(const std::string& text, const std::string& command, const json& cfg, std::ostream& out) {
  const std::string output = cfg["output"];
  if (output.empty()) {
    out << text;
    return;
  }
  write_text(output, text);
  write_manifest(output, command, cfg);
  out << "wrote " << output << "\n";
}

std::string need_path(const json& cfg, const char* key) {
  const std::string v = cfg[key];
  if (v.empty()) throw UsageError(std::string("missing required key '") + key + "'");
  return v;
}

// ---- images --------------------------------------------------------------

struct Image {
  std::vector<double> pixels;
  std::size_t height = 0, width = 0;
};

Image load_image(const std::string& path) {
  dmpcs_tensor* raw = nullptr;
  if (ends_with(path, ".pgm") || ends_with(path, ".ppm") || ends_with(path, ".pnm"))
    check(dmpcs_pgm_load(path.c_str(), &raw));
  else
    check(dmpcs_tensor_load(path.c_str(), &raw));
  TensorPtr t(raw);
  const std::size_t rank = dmpcs_tensor_rank(t.get());
  if (rank != 2 && !(rank == 3 && dmpcs_tensor_dim(t.get(), 0) == 1))
    throw UsageError(path + ": expected an [H,W] or [1,H,W] image");
  Image img;
  img.height = dmpcs_tensor_dim(t.get(), rank - 2);
  img.width = dmpcs_tensor_dim(t.get(), rank - 1);
  const double* d = dmpcs_tensor_data(t.get());
  img.pixels.assign(d, d + dmpcs_tensor_size(t.get()));
  return img;
}

TensorPtr make_image(const std::vector<double>& pixels, std::size_t h, std::size_t w) {
  const std::size_t shape[3] = {1, h, w};
  dmpcs_tensor* raw = nullptr;
  check(dmpcs_tensor_create(shape, 3, pixels.data(), &raw));
  return TensorPtr(raw);
}

void save_image(const dmpcs_tensor* t, const std::string& path) {
  if (ends_with(path, ".pgm"))
    check(dmpcs_pgm_save(t, path.c_str()));
  else
    check(dmpcs_tensor_save(t, path.c_str()));
}

struct Padded {
  TensorPtr tensor;
  std::size_t height = 0, width = 0;  // after padding
};

Padded padded_image(const Image& img, std::size_t block) {
  Padded p;
  const auto px = reflect_pad(img.pixels, img.height, img.width, block, &p.height, &p.width);
  p.tensor = make_image(px, p.height, p.width);
  return p;
}

std::size_t block_of(const dmpcs_operator* op) {
  const std::size_t n = dmpcs_operator_cols(op);
  const auto b = static_cast<std::size_t>(std::lround(std::sqrt(double(n))));
  if (b * b != n) throw UsageError("operator width " + std::to_string(n) + " is not a square block");
  return b;
}

OperatorPtr load_operator(const std::string& path) {
  dmpcs_operator* raw = nullptr;
  check(dmpcs_operator_load(path.c_str(), &raw));
  return OperatorPtr(raw);
}

ModelPtr load_model(const std::string& path) {
  dmpcs_model* raw = nullptr;
  check(dmpcs_model_load(path.c_str(), &raw));
  return ModelPtr(raw);
}

OperatorPtr operator_from(const json& cfg, ModelPtr* model_out = nullptr) {
  const std::string model = cfg["model"], phi = cfg["phi"];
  if (!model.empty()) {
    ModelPtr m = load_model(model);
    dmpcs_operator* raw = nullptr;
    check(dmpcs_model_operator(m.get(), &raw));
    if (model_out) *model_out = std::move(m);
    return OperatorPtr(raw);
  }
  if (phi.empty()) throw UsageError("need 'phi' (operator file) or 'model' (checkpoint)");
  return load_operator(phi);
}

// ---- configuration -------------------------------------------------------

dmpcs_model_config model_config(const json& cfg) {
  dmpcs_model_config c;
  dmpcs_model_config_default(&c);
  c.block = cfg["block"];
  c.channels = cfg["channels"];
  c.res_units = cfg["res_units"];
  c.start = cfg["start"];
  c.stride = cfg["stride"];
  c.reverse_width = cfg["reverse_width"];
  c.reverse_depth = cfg["reverse_depth"];
  c.schedule_steps = cfg["schedule_steps"];
  c.beta_start = cfg["beta_start"];
  c.beta_end = cfg["beta_end"];
  c.freeze_diffusion = cfg["freeze_diffusion"].get<bool>();
  c.train_phi = cfg["train_phi"].get<bool>();
  c.stochastic = cfg["dun_stochastic"].get<bool>();
  c.seed = cfg["seed"];
  return c;
}

dmpcs_se_options se_options(const json& cfg, std::string& prior_storage,
                            std::string& algo_storage, std::string& onsager_storage) {
  dmpcs_se_options o;
  dmpcs_se_options_default(&o);
  algo_storage = cfg["algo"];
  if (algo_storage.empty()) algo_storage = "amp";
  prior_storage = cfg["prior"];
  if (prior_storage.empty()) prior_storage = algo_storage == "amp" ? "bg:0.1" : "gaussian";
  onsager_storage = cfg["onsager_mode"];
  o.algo = algo_storage.c_str();
  o.prior = prior_storage.c_str();
  o.onsager = onsager_storage.c_str();
  o.delta = cfg["delta"];
  o.n = cfg["n"];
  o.iterations = cfg["iterations"];
  o.trials = cfg["trials"];
  o.schedule_steps = cfg["schedule_steps"];
  o.beta_start = cfg["beta_start"];
  o.beta_end = cfg["beta_end"];
  o.start = cfg["start"];
  o.stride = cfg["stride"];
  o.samples = cfg["samples"];
  o.stochastic = cfg["stochastic"].get<bool>();
  o.seed = cfg["seed"];
  return o;
}

// ---- commands ------------------------------------------------------------

void cmd_gen_phi(const json& cfg, std::ostream& out) {
  const std::string output = need_path(cfg, "output");
  dmpcs_operator* raw = nullptr;
  check(dmpcs_operator_for_ratio(cfg["cs_ratio"], cfg["block"], cfg["seed"], &raw));
  OperatorPtr op(raw);
  check(dmpcs_operator_save(op.get(), output.c_str()));
  write_manifest(output, "gen-phi", cfg,
                 {{"rows", dmpcs_operator_rows(op.get())}, {"cols", dmpcs_operator_cols(op.get())}});
  out << "wrote " << output << " (" << dmpcs_operator_rows(op.get()) << "x"
      << dmpcs_operator_cols(op.get()) << ")\n";
}

void cmd_gen_corpus(const json& cfg, std::ostream& out) {
  const std::string output = need_path(cfg, "output");
  check(dmpcs_generate_corpus(output.c_str(), cfg["count"], cfg["height"], cfg["width"],
                              cfg["seed"]));
  write_manifest(fs::path(output) / "corpus", "gen-corpus", cfg);
  out << "wrote " << cfg["count"].get<std::size_t>() << " images to " << output << "\n";
}

void cmd_sense(const json& cfg, std::ostream& out) {
  const std::string output = need_path(cfg, "output");
  OperatorPtr op = operator_from(cfg);
  const Image img = load_image(need_path(cfg, "image"));
  Padded p = padded_image(img, block_of(op.get()));
  dmpcs_tensor* raw = nullptr;
  check(dmpcs_sense(op.get(), p.tensor.get(), cfg["sigma"], cfg["seed"], &raw));
  TensorPtr y(raw);
  check(dmpcs_tensor_save(y.get(), output.c_str()));
  write_manifest(output, "sense", cfg,
                 {{"height", img.height},
                  {"width", img.width},
                  {"padded_height", p.height},
                  {"padded_width", p.width}});
  out << "wrote " << output << " [" << dmpcs_tensor_dim(y.get(), 0) << ","
      << dmpcs_tensor_dim(y.get(), 1) << "]\n";
}

// Original image size: explicit keys first, then the sensing manifest.
void image_size(const json& cfg, const std::string& measurements, std::size_t* h, std::size_t* w) {
  *h = cfg["height"];
  *w = cfg["width"];
  if (*h && *w) return;
  const fs::path mp = manifest_path(measurements);
  if (!fs::exists(mp))
    throw UsageError("image size unknown: set height and width or keep " + mp.string());
  const json m = json::parse(read_text(mp));
  *h = m.at("extra").at("height");
  *w = m.at("extra").at("width");
}

void cmd_reconstruct(const json& cfg, std::ostream& out) {
  const std::string output = need_path(cfg, "output");
  const std::string measurements = need_path(cfg, "measurements");
  std::string algo = cfg["algo"];
  if (algo.empty()) algo = "adjoint";
  std::size_t h = 0, w = 0;
  image_size(cfg, measurements, &h, &w);

  ModelPtr model;
  OperatorPtr op = operator_from(cfg, &model);
  const std::size_t block = block_of(op.get());
  const std::size_t ph = (h + block - 1) / block * block, pw = (w + block - 1) / block * block;
  dmpcs_tensor* yraw = nullptr;
  check(dmpcs_tensor_load(measurements.c_str(), &yraw));
  TensorPtr y(yraw);

  dmpcs_tensor* raw = nullptr;
  const std::string onsager = cfg["onsager_mode"];
  if (algo == "adjoint") {
    check(dmpcs_reconstruct_adjoint(op.get(), y.get(), ph, pw, &raw));
  } else if (algo == "amp") {
    dmpcs_amp_options o;
    dmpcs_amp_options_default(&o);
    const std::string den = cfg["denoiser"];
    o.denoiser = den.c_str();
    o.rho = cfg["rho"];
    o.tau = cfg["tau"];
    o.onsager = onsager.c_str();
    o.iterations = cfg["iterations"];
    o.seed = cfg["seed"];
    check(dmpcs_reconstruct_amp(op.get(), y.get(), ph, pw, &o, &raw));
  } else if (algo == "dmp") {
    dmpcs_dmp_options o;
    dmpcs_dmp_options_default(&o);
    const std::string init = cfg["init"], fv = cfg["filter_var"], truth_path = cfg["truth"];
    o.schedule_steps = cfg["schedule_steps"];
    o.beta_start = cfg["beta_start"];
    o.beta_end = cfg["beta_end"];
    o.start = cfg["start"];
    o.stride = cfg["stride"];
    o.onsager = onsager.c_str();
    o.init = init.c_str();
    o.filter_var = fv.c_str();
    o.stochastic = cfg["stochastic"].get<bool>();
    o.seed = cfg["seed"];
    Padded truth;
    if (!truth_path.empty()) {
      truth = padded_image(load_image(truth_path), block);
      o.truth = truth.tensor.get();
    }
    o.model = model.get();
    check(dmpcs_reconstruct_dmp(op.get(), y.get(), ph, pw, &o, &raw));
  } else if (algo == "dun") {
    if (!model) throw UsageError("algo dun needs 'model' (a checkpoint)");
    check(dmpcs_model_reconstruct(model.get(), y.get(), ph, pw, &raw));
  } else {
    throw UsageError("unknown algo '" + algo + "' (expected adjoint, amp, dmp or dun)");
  }
  TensorPtr rec(raw);
  const double* d = dmpcs_tensor_data(rec.get());
  const std::vector<double> full(d, d + dmpcs_tensor_size(rec.get()));
  TensorPtr cropped = make_image(crop(full, pw, h, w), h, w);
  save_image(cropped.get(), output);
  write_manifest(output, "reconstruct", cfg, {{"height", h}, {"width", w}});
  out << "wrote " << output << " (" << algo << ", " << h << "x" << w << ")\n";
}

dmpcs_train_options train_options(const json& cfg, std::string& data, std::string& pre,
                                  std::string& progress) {
  dmpcs_train_options o;
  dmpcs_train_options_default(&o);
  data = need_path(cfg, "data_dir");
  pre = cfg["pretrained"];
  progress = cfg["progress"];
  o.data_dir = data.c_str();
  o.crop = cfg["crop"];
  o.flip = cfg["flip"].get<bool>();
  o.val_fraction = cfg["val_fraction"];
  o.epochs = cfg["epochs"];
  o.batch = cfg["batch"];
  o.lr = cfg["lr"];
  o.lr_min = cfg["lr_min"];
  o.clip_norm = cfg["clip_norm"];
  o.seed = cfg["seed"];
  o.pretrained = pre.empty() ? nullptr : pre.c_str();
  o.progress_csv = progress.empty() ? nullptr : progress.c_str();
  return o;
}

ModelPtr model_for_training(const json& cfg) {
  const std::string init = cfg["init_model"];
  if (!init.empty()) return load_model(init);
  OperatorPtr op;
  const std::string phi = cfg["phi"];
  if (!phi.empty()) {
    op = load_operator(phi);
  } else {
    dmpcs_operator* raw = nullptr;
    check(dmpcs_operator_for_ratio(cfg["cs_ratio"], cfg["block"], cfg["phi_seed"], &raw));
    op.reset(raw);
  }
  const dmpcs_model_config c = model_config(cfg);
  dmpcs_model* raw = nullptr;
  check(dmpcs_model_build(&c, op.get(), &raw));
  return ModelPtr(raw);
}

void cmd_train(const json& cfg, bool pretrain, std::ostream& out) {
  const std::string command = pretrain ? "pretrain" : "train";
  const std::string output = need_path(cfg, "output");
  ModelPtr model = model_for_training(cfg);
  std::string data, pre, progress;
  dmpcs_train_options o = train_options(cfg, data, pre, progress);
  if (pretrain) o.pretrained = nullptr;
  char* raw = nullptr;
  check(pretrain ? dmpcs_pretrain(model.get(), &o, &raw) : dmpcs_train(model.get(), &o, &raw));
  const json history = json::parse(take(raw));
  json run = {{"command", command}, {"config", cfg}, {"history", history}};
  check(dmpcs_model_save(model.get(), output.c_str(), run.dump().c_str()));
  write_manifest(output, command, cfg,
                 {{"parameters", dmpcs_model_parameter_count(model.get())}, {"history", history}});
  if (pretrain) {
    const auto& hl = history["heldout_loss"];
    out << "held-out x0 loss " << hl.front() << " -> " << hl.back() << "\n";
  } else {
    const auto& v = history["val_psnr"];
    out << "validation PSNR " << v.front() << " dB (epoch 0) -> best " << history["best_val_psnr"]
        << " dB (epoch " << history["best_epoch"] << ")\n";
  }
  out << "wrote " << output << "\n";
}

void cmd_se_sim(const json& cfg, std::ostream& out) {
  std::string prior, algo, onsager;
  const dmpcs_se_options o = se_options(cfg, prior, algo, onsager);
  char* raw = nullptr;
  check(dmpcs_se_sim(&o, &raw));
  emit(take(raw), "se-sim", cfg, out);
}

void cmd_qq_dump(const json& cfg, std::ostream& out) {
  std::string prior, algo, onsager;
  json c = cfg;
  c["algo"] = "dmp";
  dmpcs_se_options o = se_options(c, prior, algo, onsager);
  char* raw = nullptr;
  check(dmpcs_qq_dump(&o, cfg["points"], &raw));
  emit(take(raw), "qq-dump", cfg, out);
}

std::string format_db(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char b[32];
  std::snprintf(b, sizeof b, "%.6f", v);
  return b;
}

void cmd_eval(const json& cfg, std::ostream& out) {
  const Image ref = load_image(need_path(cfg, "ref"));
  const Image rec = load_image(need_path(cfg, "rec"));
  TensorPtr a = make_image(ref.pixels, ref.height, ref.width);
  TensorPtr b = make_image(rec.pixels, rec.height, rec.width);
  double psnr = 0, ssim = 0;
  check(dmpcs_eval(a.get(), b.get(), &psnr, &ssim));
  char s[32];
  std::snprintf(s, sizeof s, "%.6f", ssim);
  std::string text;
  if (cfg["format"] == "csv")
    text = "psnr_db,ssim\n" + format_db(psnr) + "," + s + "\n";
  else
    text = "PSNR " + format_db(psnr) + " dB\nSSIM " + s + "\n";
  emit(text, "eval", cfg, out);
}

void cmd_flops(const json& cfg, std::ostream& out) {
  const dmpcs_model_config c = model_config(cfg);
  std::size_t m = cfg["measurements_per_block"];
  if (m == 0) {
    const std::size_t n = c.block * c.block;
    m = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(cfg["cs_ratio"].get<double>() * double(n))));
  }
  const std::string format = cfg["format"];
  char* raw = nullptr;
  check(dmpcs_flops(&c, m, cfg["height"], cfg["width"], cfg["probes"], format.c_str(), &raw));
  emit(take(raw), "flops", cfg, out);
}

// ---- dispatch ------------------------------------------------------------

struct Command {
  const char* name;
  const char* help;
  std::vector<std::string> keys;
};

const std::vector<std::string> kSchedule = {"schedule_steps", "beta_start", "beta_end", "start",
                                            "stride"};
const std::vector<std::string> kModel = {"block",         "channels",      "res_units",
                                         "reverse_width", "reverse_depth", "freeze_diffusion",
                                         "train_phi",     "dun_stochastic"};

std::vector<std::string> join(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> all;
  for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  return all;
}

const std::vector<Command>& commands() {
  static const std::vector<Command> c = {
      {"gen-phi", "draw a Gaussian sensing matrix", {"cs_ratio", "block", "seed", "output"}},
      {"gen-corpus", "write a synthetic grayscale training corpus",
       {"count", "height", "width", "seed", "output"}},
      {"sense", "measure an image block by block",
       {"image", "phi", "model", "sigma", "seed", "output"}},
      {"reconstruct", "recover an image from measurements",
       join({{"algo", "measurements", "phi", "model", "truth", "height", "width", "output", "seed",
              "denoiser", "rho", "tau", "iterations", "onsager_mode", "init", "filter_var",
              "stochastic"},
             kSchedule})},
      {"train", "train the unfolded network",
       join({{"data_dir", "crop", "flip", "val_fraction", "epochs", "batch", "lr", "lr_min", "clip_norm", "seed",
              "pretrained", "init_model", "progress", "output", "phi", "phi_seed", "cs_ratio"},
             kModel, kSchedule})},
      {"pretrain", "pretrain the reverse diffusion model",
       join({{"data_dir", "crop", "flip", "val_fraction", "epochs", "batch", "lr", "lr_min", "clip_norm", "seed",
              "init_model", "progress", "output", "phi", "phi_seed", "cs_ratio"},
             kModel, kSchedule})},
      {"se-sim", "state-evolution prediction vs simulation (CSV)",
       join({{"algo", "prior", "delta", "n", "iterations", "trials", "onsager_mode", "samples",
              "stochastic", "seed", "output"},
             kSchedule})},
      {"qq-dump", "Q-Q data of the filtered DMP residual (CSV)",
       join({{"prior", "delta", "n", "onsager_mode", "samples", "stochastic", "points", "seed",
              "output"},
             kSchedule})},
      {"eval", "PSNR and SSIM of a reconstruction", {"ref", "rec", "format", "output"}},
      {"flops", "per-stage FLOP counts",
       join({{"cs_ratio", "measurements_per_block", "height", "width", "probes", "format",
              "output"},
             kModel, kSchedule})},
  };
  return c;
}

std::string flag_name(const std::string& key) {
  std::string f = key;
  for (char& ch : f)
    if (ch == '_') ch = '-';
  return "--" + f;
}

const std::map<std::string, std::string> kAliases = {{"iters", "iterations"},
                                                     {"y", "measurements"}};

}  // namespace

// ---- schema --------------------------------------------------------------

const std::vector<KeySpec>& schema() {
  using T = KeyType;
  static const std::vector<KeySpec> s = {
      {"seed", T::integer, 0, "master seed"},
      {"strict", T::boolean, true, "strict determinism (runs are single-threaded either way)"},
      {"output", T::string, "", "output path"},
      {"cs_ratio", T::number, 0.1, "CS ratio M/N"},
      {"block", T::integer, 16, "block size B"},
      {"phi", T::string, "", "sensing operator (DTN1)"},
      {"phi_seed", T::integer, 0, "seed of a generated operator"},
      {"measurements_per_block", T::integer, 0, "M; 0 derives it from cs_ratio"},
      {"image", T::string, "", "input image (PGM or DTN1)"},
      {"measurements", T::string, "", "measurement tensor [blocks,M]"},
      {"sigma", T::number, 0.0, "measurement noise std"},
      {"height", T::integer, 0, "image height"},
      {"width", T::integer, 0, "image width"},
      {"algo", T::string, "", "algorithm"},
      {"model", T::string, "", "model checkpoint"},
      {"truth", T::string, "", "ground-truth image for oracle DMP"},
      {"denoiser", T::string, "mmse_bg", "AMP denoiser: mmse_gaussian, mmse_bg, soft_threshold"},
      {"rho", T::number, 0.1, "Bernoulli-Gaussian sparsity"},
      {"tau", T::number, 1.5, "soft threshold relative to the noise level"},
      {"iterations", T::integer, 10, "AMP iterations"},
      {"onsager_mode", T::string, "oracle", "oracle, mc_sure or off"},
      {"init", T::string, "adjoint", "DMP start: adjoint or pure_noise"},
      {"filter_var", T::string, "marginal", "oracle filter variance: marginal or sqrt_alpha"},
      {"stochastic", T::boolean, true, "posterior noise in the DMP reverse hop"},
      {"schedule_steps", T::integer, 1000, "diffusion steps T"},
      {"beta_start", T::number, 1e-4, "first beta"},
      {"beta_end", T::number, 0.02, "last beta"},
      {"start", T::integer, 1000, "first reverse time K"},
      {"stride", T::integer, 100, "reverse time stride"},
      {"channels", T::integer, 8, "feature channels C"},
      {"res_units", T::integer, 4, "residual units per ResBlock"},
      {"reverse_width", T::integer, 16, "reverse model width"},
      {"reverse_depth", T::integer, 3, "reverse model hidden layers"},
      {"freeze_diffusion", T::boolean, false, "freeze the reverse model (DMP-DUN)"},
      {"train_phi", T::boolean, true, "train the sensing matrix"},
      {"dun_stochastic", T::boolean, false, "posterior noise inside the network"},
      {"data_dir", T::string, "", "training images"},
      {"crop", T::integer, 32, "patch size"},
      {"flip", T::boolean, true, "random horizontal flips"},
      {"val_fraction", T::number, 0.2, "held-out share of the corpus"},
      {"epochs", T::integer, 10, "epochs"},
      {"batch", T::integer, 4, "batch size"},
      {"lr", T::number, 3e-3, "initial learning rate"},
      {"lr_min", T::number, 3e-5, "final learning rate"},
      {"clip_norm", T::number, 0.1, "global gradient-norm clip (0 disables)"},
      {"pretrained", T::string, "", "checkpoint whose reverse model is loaded before training"},
      {"init_model", T::string, "", "checkpoint to continue from"},
      {"progress", T::string, "", "progress CSV"},
      {"prior", T::string, "", "gaussian or bg:<rho>"},
      {"delta", T::number, 0.5, "sampling ratio for state evolution"},
      {"n", T::integer, 4096, "signal length"},
      {"trials", T::integer, 20, "Monte-Carlo trials"},
      {"samples", T::integer, 100000, "predictor samples"},
      {"points", T::integer, 64, "Q-Q points"},
      {"ref", T::string, "", "reference image"},
      {"rec", T::string, "", "reconstructed image"},
      {"format", T::string, "table", "csv or table"},
      {"probes", T::integer, 1, "MC-SURE probes"},
      {"count", T::integer, 200, "corpus size"},
  };
  return s;
}

const KeySpec* find_key(const std::string& name) {
  for (const auto& k : schema())
    if (k.name == name) return &k;
  return nullptr;
}

json defaults_for(const std::string& command) {
  json d = json::object();
  for (const auto& k : schema()) d[k.name] = k.fallback;
  if (command == "train" || command == "pretrain" || command == "flops") {
    d["schedule_steps"] = 200;
    d["start"] = 100;
    d["stride"] = 50;
  }
  if (command == "flops") {
    d["height"] = 256;
    d["width"] = 256;
  }
  if (command == "gen-corpus") {
    d["height"] = 48;
    d["width"] = 48;
  }
  if (command == "eval") d["format"] = "table";
  return d;
}

json parse_value(const KeySpec& key, const std::string& text) {
  auto bad = [&](const char* what) {
    return UsageError("key '" + key.name + "': '" + text + "' is not " + what);
  };
  switch (key.type) {
    case KeyType::integer: {
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(text, &used);
      } catch (const std::exception&) {
        throw bad("an integer");
      }
      if (used != text.size() || v < 0) throw bad("a non-negative integer");
      return json(static_cast<std::uint64_t>(v));
    }
    case KeyType::number: {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(text, &used);
      } catch (const std::exception&) {
        throw bad("a number");
      }
      if (used != text.size() || !std::isfinite(v)) throw bad("a finite number");
      return json(v);
    }
    case KeyType::boolean:
      if (text == "true" || text == "1" || text == "on" || text == "yes") return json(true);
      if (text == "false" || text == "0" || text == "off" || text == "no") return json(false);
      throw bad("a boolean");
    case KeyType::string:
      return json(text);
  }
  throw bad("valid");
}

json check_value(const KeySpec& key, const json& value) {
  auto bad = [&](const char* what) {
    return UsageError("key '" + key.name + "' must be " + std::string(what) + ", got " +
                      value.dump());
  };
  switch (key.type) {
    case KeyType::integer:
      if (!value.is_number_unsigned()) {
        if (value.is_number_integer() || !value.is_number()) throw bad("a non-negative integer");
        const double d = value.get<double>();
        if (d < 0 || d != std::floor(d)) throw bad("a non-negative integer");
        return json(static_cast<std::uint64_t>(d));
      }
      return value;
    case KeyType::number:
      if (!value.is_number()) throw bad("a number");
      return json(value.get<double>());
    case KeyType::boolean:
      if (!value.is_boolean()) throw bad("true or false");
      return value;
    case KeyType::string:
      if (!value.is_string()) throw bad("a string");
      return value;
  }
  return value;
}

json resolve_config(const std::string& command, const std::string& config_path,
                    const std::vector<std::string>& sets,
                    const std::map<std::string, std::string>& flags) {
  json cfg = defaults_for(command);
  auto lookup = [](const std::string& name) {
    const KeySpec* k = find_key(name);
    if (!k) throw UsageError("unknown config key '" + name + "'");
    return k;
  };
  if (!config_path.empty()) {
    json file;
    try {
      file = json::parse(read_text(config_path));
    } catch (const json::parse_error& e) {
      throw UsageError(config_path + ": " + e.what());
    }
    if (!file.is_object()) throw UsageError(config_path + ": config must be a flat JSON object");
    for (const auto& [k, v] : file.items()) cfg[k] = check_value(*lookup(k), v);
  }
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + s + "'");
    const std::string k = s.substr(0, eq);
    cfg[k] = parse_value(*lookup(k), s.substr(eq + 1));
  }
  for (const auto& [k, v] : flags) cfg[k] = parse_value(*lookup(k), v);
  return cfg;
}

// ---- padding -------------------------------------------------------------

namespace {
std::size_t reflect_index(long long i, std::size_t n) {
  if (n == 1) return 0;
  const long long period = 2 * (static_cast<long long>(n) - 1);
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < static_cast<long long>(n) ? i : period - i);
}
}  // namespace

std::vector<double> reflect_pad(const std::vector<double>& image, std::size_t height,
                                std::size_t width, std::size_t block, std::size_t* padded_h,
                                std::size_t* padded_w) {
  if (block == 0) throw UsageError("block must be positive");
  if (image.size() != height * width) throw UsageError("image size does not match its shape");
  const std::size_t ph = (height + block - 1) / block * block;
  const std::size_t pw = (width + block - 1) / block * block;
  std::vector<double> out(ph * pw);
  for (std::size_t y = 0; y < ph; ++y) {
    const std::size_t sy = reflect_index(static_cast<long long>(y), height);
    for (std::size_t x = 0; x < pw; ++x)
      out[y * pw + x] = image[sy * width + reflect_index(static_cast<long long>(x), width)];
  }
  *padded_h = ph;
  *padded_w = pw;
  return out;
}

std::vector<double> crop(const std::vector<double>& image, std::size_t padded_w,
                         std::size_t height, std::size_t width) {
  std::vector<double> out(height * width);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) out[y * width + x] = image[y * padded_w + x];
  return out;
}

// ---- entry ---------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"dmpcs: compressive sensing with diffusion message passing"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dmpcs_version()));

  struct Parsed {
    std::string config;
    std::vector<std::string> sets;
    std::map<std::string, std::string> flags;
  };
  std::map<std::string, Parsed> parsed;
  std::map<std::string, CLI::App*> subs;
  for (const auto& c : commands()) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    Parsed& p = parsed[c.name];
    sub->add_option("--config", p.config, "flat JSON config file");
    sub->add_option("--set", p.sets, "override a key: --set key=value")->allow_extra_args(false);
    for (const auto& key : c.keys) {
      const KeySpec* spec = find_key(key);
      std::string names = flag_name(key);
      if (key == "output") names += ",-o";
      for (const auto& [alias, target] : kAliases)
        if (target == key) names += ",--" + alias;
      sub->add_option_function<std::string>(
          names, [&p, key](const std::string& v) { p.flags[key] = v; }, spec ? spec->help : "");
    }
    subs[c.name] = sub;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << dmpcs_version() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }

  std::string name;
  for (auto& [n, sub] : subs)
    if (sub->parsed()) name = n;
  const Parsed& p = parsed[name];
  try {
    const json cfg = resolve_config(name, p.config, p.sets, p.flags);
    if (name == "gen-phi") cmd_gen_phi(cfg, out);
    else if (name == "gen-corpus") cmd_gen_corpus(cfg, out);
    else if (name == "sense") cmd_sense(cfg, out);
    else if (name == "reconstruct") cmd_reconstruct(cfg, out);
    else if (name == "train") cmd_train(cfg, false, out);
    else if (name == "pretrain") cmd_train(cfg, true, out);
    else if (name == "se-sim") cmd_se_sim(cfg, out);
    else if (name == "qq-dump") cmd_qq_dump(cfg, out);
    else if (name == "eval") cmd_eval(cfg, out);
    else if (name == "flops") cmd_flops(cfg, out);
    return kOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const CapiError& e) {
    err << "error: " << e.what() << "\n";
    return e.status == DMPCS_ERR_INVALID_ARGUMENT ? kValidation : kRuntime;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

}  // namespace dmpcs_cli

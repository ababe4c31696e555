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

// Acceptance checks. One line per criterion:
//   criterion <n>[<part>]: PASS|FAIL  <measured values>
// Usage: dmpcs_acceptance [--only N]...   (7 always runs together with 6)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dmpcs/autodiff.hpp"
#include "dmpcs/denoise.hpp"
#include "dmpcs/diffusion.hpp"
#include "dmpcs/experiments.hpp"
#include "dmpcs/io.hpp"
#include "dmpcs/metrics.hpp"
#include "dmpcs/rng.hpp"
#include "dmpcs/sensing.hpp"
#include "dmpcs/solver.hpp"
#include "dmpcs/unfolded.hpp"
#include "../gradcheck.hpp"

using namespace dmpcs;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kAmpSeTol = 0.10;
constexpr double kAmpSeSeconds = 60.0;
constexpr double kOnsagerFactor = 2.0;
constexpr double kDmpSeTol = 0.10;
constexpr double kDmpGaussianity = 0.99;
constexpr double kDmpSeSeconds = 120.0;
constexpr double kSoftThresholdTol = 0.05;
constexpr double kLinearTraceTol = 0.01;
constexpr double kGradTol = 1e-3;
constexpr double kAdjointMarginDb = 2.0;
constexpr double kEpochZeroMarginDb = 3.0;
constexpr double kTrainSeconds = 30.0 * 60.0;
constexpr double kExactTol = 1e-12;

// Desk training setup shared by 6 and 7.
constexpr std::size_t kCorpusSize = 200;
constexpr std::size_t kCorpusSide = 48;
constexpr std::size_t kCrop = 32;
constexpr double kValFraction = 0.2;
constexpr double kRatio = 0.1;
constexpr std::size_t kEpochs = 10;
constexpr std::size_t kBatch = 4;
constexpr double kLr = 3e-3;
constexpr double kLrMin = 3e-5;
constexpr double kClip = 0.1;
constexpr std::size_t kPretrainEpochs = 10;
constexpr double kPretrainLr = 1e-3;

int failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
  std::printf("criterion %s: %s  %s\n", id.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

std::vector<double> measure(const sensing::SensingOperator& op, std::span<const double> x) {
  std::vector<double> y(op.rows());
  sensing::apply_matrix(op.matrix().data(), op.rows(), op.cols(), x, y);
  return y;
}

// ---------------------------------------------------------------------------

void amp_state_evolution() {
  const auto t0 = std::chrono::steady_clock::now();
  experiments::AmpSeConfig cfg;
  const auto tr = experiments::amp_state_evolution(cfg);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  std::size_t worst_t = 0;
  std::string ratios;
  for (std::size_t k = 0; k < tr.predicted.size(); ++k) {
    const double r = tr.empirical[k] / tr.predicted[k];
    ratios += (k ? "," : "") + fmt("%.3f", r);
    if (std::abs(r - 1.0) > worst) {
      worst = std::abs(r - 1.0);
      worst_t = k + 1;
    }
  }
  report("1", worst < kAmpSeTol && secs < kAmpSeSeconds,
         "worst |emp/SE-1|=" + fmt("%.4f", worst) + " at t=" + std::to_string(worst_t) +
             " (tol " + fmt("%.2f", kAmpSeTol) + ") ratios t=1..10 [" + ratios + "] runtime " +
             fmt("%.1f", secs) + "s");
}

void onsager_ablation() {
  experiments::AmpSeConfig cfg;
  const auto on = experiments::amp_state_evolution(cfg);
  cfg.onsager = solver::OnsagerMode::off;
  const auto off = experiments::amp_state_evolution(cfg);
  const std::size_t k = cfg.iterations - 1;
  const double dev_on = std::abs(on.empirical[k] - on.predicted[k]);
  const double dev_off = std::abs(off.empirical[k] - off.predicted[k]);
  report("2", dev_off > kOnsagerFactor * dev_on,
         "iteration 10 |emp-SE|: corrected " + fmt("%.3e", dev_on) + ", off " +
             fmt("%.3e", dev_off) + " (need > " + fmt("%.0f", kOnsagerFactor) + "x)");
}

void dmp_state_evolution() {
  const auto t0 = std::chrono::steady_clock::now();
  experiments::DmpSeConfig cfg;
  const auto schedule = diffusion::build_schedule(1000, 1e-4, 0.02);
  const auto times = diffusion::ddim_times(1000, 100);
  const auto res = experiments::dmp_state_evolution(cfg, schedule, times);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  for (std::size_t k = 0; k < times.step_count(); ++k)
    worst = std::max(worst, std::abs(res.trace.empirical[k] / res.trace.predicted[k] - 1.0));
  const double gauss = *std::min_element(res.gaussianity.begin(), res.gaussianity.end());
  report("3", worst < kDmpSeTol && gauss >= kDmpGaussianity && secs < kDmpSeSeconds,
         "worst |Var(r-sqrt(ab)x)/SE-1|=" + fmt("%.4f", worst) + " over " +
             std::to_string(times.step_count()) + " times, min Q-Q corr " + fmt("%.5f", gauss) +
             ", runtime " + fmt("%.1f", secs) + "s");
}

void mc_sure() {
  Rng rng(12), probe(13);
  auto h = rng.normal_vector(4096);
  for (double& v : h) v *= 2.0;
  const double exact = denoise::soft_threshold_divergence(h, 1.0);
  const auto est = denoise::mc_sure_divergence(
      [](std::span<const double> v) { return denoise::soft_threshold(v, 1.0); }, h, 1e-3, 10,
      probe);
  const double rel_st = std::abs(est.value / exact - 1.0);
  report("4a", rel_st < kSoftThresholdTol,
         "soft threshold estimate " + fmt("%.2f", est.value) + " vs count " + fmt("%.0f", exact) +
             ", rel " + fmt("%.4f", rel_st));

  const std::size_t n = 32;
  Rng arng(9);
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n * n; ++i) a[i] = 0.1 * arng.normal() + (i % (n + 1) == 0);
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += a[i * n + i];
  const auto f = [&](std::span<const double> v) {
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out[i] += a[i * n + j] * v[j];
    return out;
  };
  Rng probe2(11);
  const auto lin = denoise::mc_sure_divergence(f, arng.normal_vector(n), 1e-3, 10000, probe2);
  const double rel_lin = std::abs(lin.value / trace - 1.0);
  report("4b", rel_lin < kLinearTraceTol,
         "linear 32x32 estimate " + fmt("%.4f", lin.value) + " vs trace " + fmt("%.4f", trace) +
             ", rel " + fmt("%.5f", rel_lin) + " over 10^4 probes");
}

// ---------------------------------------------------------------------------

Tensor random_tensor(const Shape& shape, std::uint64_t seed, double offset = 0.0) {
  Rng rng(seed);
  Tensor t(shape);
  for (double& v : t.data()) v = rng.normal() + offset;
  return t;
}

void autodiff() {
  using Vars = std::map<std::string, ad::Var>;
  using testing::check_gradients;
  struct Case {
    std::string name;
    testing::LossBuilder build;
    std::map<std::string, Tensor> params;
  };
  const auto sq = [](ad::Var v) { return ad::mse(v, v.graph->constant(Tensor(v.shape()))); };
  std::vector<Case> cases;
  const Shape s{2, 3, 4};
  cases.push_back({"add", [&](ad::Graph&, const Vars& v) { return sq(ad::add(v.at("a"), v.at("b"))); },
                   {{"a", random_tensor(s, 1)}, {"b", random_tensor(s, 2)}}});
  cases.push_back({"sub", [&](ad::Graph&, const Vars& v) { return sq(ad::sub(v.at("a"), v.at("b"))); },
                   {{"a", random_tensor(s, 3)}, {"b", random_tensor(s, 4)}}});
  cases.push_back({"mul", [&](ad::Graph&, const Vars& v) { return sq(ad::mul(v.at("a"), v.at("b"))); },
                   {{"a", random_tensor(s, 5)}, {"b", random_tensor(s, 6)}}});
  cases.push_back({"scale", [&](ad::Graph&, const Vars& v) { return sq(ad::scale(v.at("a"), -1.7)); },
                   {{"a", random_tensor(s, 7)}}});
  cases.push_back({"mul_scalar",
                   [&](ad::Graph&, const Vars& v) { return sq(ad::mul_scalar(v.at("a"), v.at("s"))); },
                   {{"a", random_tensor(s, 8)}, {"s", random_tensor({1}, 9)}}});
  cases.push_back({"exp", [&](ad::Graph&, const Vars& v) { return sq(ad::exp(v.at("a"))); },
                   {{"a", random_tensor(s, 10)}}});
  cases.push_back({"relu", [&](ad::Graph&, const Vars& v) { return sq(ad::relu(v.at("a"))); },
                   {{"a", random_tensor(s, 11)}}});
  cases.push_back({"mse", [&](ad::Graph&, const Vars& v) { return ad::mse(v.at("a"), v.at("b")); },
                   {{"a", random_tensor(s, 12)}, {"b", random_tensor(s, 13)}}});
  cases.push_back({"conv2d",
                   [&](ad::Graph&, const Vars& v) { return sq(ad::conv2d(v.at("x"), v.at("w"), v.at("b"))); },
                   {{"x", random_tensor({2, 5, 6}, 14)},
                    {"w", random_tensor({3, 2, 3, 3}, 15)},
                    {"b", random_tensor({3}, 16)}}});
  cases.push_back({"matvec", [&](ad::Graph&, const Vars& v) { return sq(ad::matvec(v.at("w"), v.at("v"))); },
                   {{"w", random_tensor({4, 6}, 17)}, {"v", random_tensor({6}, 18)}}});
  cases.push_back({"concat_slice",
                   [&](ad::Graph&, const Vars& v) {
                     const auto c = ad::concat_channels({v.at("a"), v.at("b")});
                     return sq(ad::mul(ad::slice_channels(c, 1, 2), v.at("m")));
                   },
                   {{"a", random_tensor({2, 3, 3}, 19)},
                    {"b", random_tensor({1, 3, 3}, 20)},
                    {"m", random_tensor({2, 3, 3}, 21)}}});
  cases.push_back({"block_sense",
                   [&](ad::Graph&, const Vars& v) { return sq(ad::block_sense(v.at("img"), v.at("phi"), 4)); },
                   {{"img", random_tensor({1, 8, 4}, 22)}, {"phi", random_tensor({5, 16}, 23)}}});
  cases.push_back({"block_adjoint",
                   [&](ad::Graph&, const Vars& v) {
                     return sq(ad::block_adjoint(v.at("y"), v.at("phi"), 4, 8, 4));
                   },
                   {{"y", random_tensor({2, 5}, 24)}, {"phi", random_tensor({5, 16}, 25)}}});

  double worst = 0.0;
  std::string worst_name = "-";
  for (const auto& c : cases) {
    const auto r = check_gradients(c.build, c.params);
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      worst_name = c.name + ":" + r.worst;
    }
  }
  report("5a", worst < kGradTol,
         std::to_string(cases.size()) + " ops, worst rel error " + fmt("%.2e", worst) + " (" +
             worst_name + ")");

  // Full unfolded loss, one 16x16 block at 10% sampling.
  const auto schedule = diffusion::build_schedule(200, 1e-4, 0.02);
  unfolded::UnfoldedConfig cfg;
  const auto op = sensing::gen_sensing_matrix(sensing::measurements_for_ratio(kRatio, 256), 256, 3);
  auto model = unfolded::build_model(cfg, schedule, op, 5);
  Rng rng(6);
  for (auto& [name, t] : model.params)
    if (name != "phi" && name.find("log_lambda") == std::string::npos)
      for (double& v : t.data()) v += 0.05 * rng.normal();
  const Tensor image = io::synthetic_image(16, 16, 4).reshaped({1, 16, 16});
  const sensing::BlockScheme scheme{16, 16, 16};
  const Tensor y = sensing::forward(model.sensing_operator(), sensing::partition_blocks(image, scheme));
  const auto loss = [&](ad::Graph& g, const Vars&) {
    unfolded::ModelGraph mg(g, model);
    return ad::mse(unfolded::forward_graph(mg, g.constant(y), unfolded::image_options(16, 16)),
                   g.constant(image));
  };
  // lambda and Phi on every entry; other tensors on up to 64 evenly spaced entries
  std::map<std::string, Tensor> full, sampled;
  for (const auto& [name, t] : model.params)
    (name == "phi" || name.find("log_lambda") != std::string::npos ? full : sampled)[name] = t;
  const auto rf = check_gradients(loss, full, 1e-6, 1e-8);
  const auto rs = check_gradients(loss, sampled, 1e-6, 1e-8, 64);
  report("5b", rf.max_rel_error < kGradTol && rs.max_rel_error < kGradTol,
         "unfolded loss: lambda/Phi (" + std::to_string(full.size()) + " tensors, all entries) " +
             fmt("%.2e", rf.max_rel_error) + " at " + rf.worst + "; other " +
             std::to_string(sampled.size()) + " tensors " + fmt("%.2e", rs.max_rel_error) +
             " at " + rs.worst);
}

// ---------------------------------------------------------------------------

struct Desk {
  io::DatasetHandle data;
  std::vector<Tensor> val;
  diffusion::DiffusionSchedule schedule = diffusion::build_schedule(200, 1e-4, 0.02);
  sensing::SensingOperator op;
};

Desk make_desk() {
  const fs::path dir = fs::current_path() / "acceptance_corpus";
  io::generate_corpus(dir, kCorpusSize, kCorpusSide, kCorpusSide, 7);
  Desk d;
  d.data = io::open_dataset(dir, kCrop, true, kValFraction, 11);
  d.val = d.data.validation_images();
  d.op = sensing::gen_sensing_matrix(sensing::measurements_for_ratio(kRatio, 256), 256, 3);
  return d;
}

unfolded::TrainOptions train_options() {
  unfolded::TrainOptions o;
  o.epochs = kEpochs;
  o.batch = kBatch;
  o.lr = kLr;
  o.lr_min = kLrMin;
  o.clip_norm = kClip;
  o.seed = 1;
  return o;
}

double adjoint_psnr(const Desk& d) {
  double sum = 0.0;
  for (const auto& img : d.val) {
    const sensing::BlockScheme sc{16, img.dim(1), img.dim(2)};
    const auto y = sensing::forward(d.op, sensing::partition_blocks(img, sc));
    const auto a = sensing::merge_blocks(sensing::adjoint(d.op, y), sc).reshaped(img.shape());
    sum += metrics::psnr(a, img);
  }
  return sum / double(d.val.size());
}

unfolded::TrainHistory train_model(const Desk& d, unfolded::UnfoldedModel& m) {
  return unfolded::train(m, [&](std::size_t e) { return d.data.epoch_patches(e); }, d.val,
                         train_options());
}

std::string db(double v) { return fmt("%.2f", v) + " dB"; }

void training() {
  const auto t0 = std::chrono::steady_clock::now();
  const Desk d = make_desk();
  const double adj = adjoint_psnr(d);

  unfolded::UnfoldedConfig two;
  two.stride = 50;
  auto a = unfolded::build_model(two, d.schedule, d.op, 5);
  const auto ha = train_model(d, a);
  const double secs = seconds_since(t0);
  report("6", ha.best_val_psnr >= adj + kAdjointMarginDb &&
                  ha.best_val_psnr >= ha.val_psnr[0] + kEpochZeroMarginDb && secs < kTrainSeconds,
         "2-step held-out " + db(ha.best_val_psnr) + " (epoch " + std::to_string(ha.best_epoch) +
             "), adjoint " + db(adj) + ", epoch-0 " + db(ha.val_psnr[0]) + ", " +
             std::to_string(a.parameter_count()) + " params, runtime " + fmt("%.0f", secs) + "s");

  unfolded::UnfoldedConfig four = two;
  four.stride = 25;
  auto dm = unfolded::build_model(four, d.schedule, d.op, 5);
  const auto hd = train_model(d, dm);
  report("7a", hd.best_val_psnr >= ha.best_val_psnr,
         "4-step " + db(hd.best_val_psnr) + " vs 2-step " + db(ha.best_val_psnr));

  // reverse model pretrained on diffused patches, then loaded into fresh networks
  auto p = unfolded::build_model(two, d.schedule, d.op, 5);
  unfolded::TrainOptions po = train_options();
  po.epochs = kPretrainEpochs;
  po.lr = kPretrainLr;
  po.lr_min = kPretrainLr * 0.01;
  const auto hp = unfolded::pretrain_reverse_model(
      p, [&](std::size_t e) { return d.data.epoch_patches(e); }, d.val, po);
  const auto pretrained = unfolded::reverse_weights(p);

  auto b = unfolded::build_model(two, d.schedule, d.op, 5);
  unfolded::load_reverse_weights(b, pretrained);
  const auto hb = train_model(d, b);

  unfolded::UnfoldedConfig frozen = two;
  frozen.freeze_diffusion = true;
  auto c = unfolded::build_model(frozen, d.schedule, d.op, 5);
  unfolded::load_reverse_weights(c, pretrained);
  const auto hc = train_model(d, c);

  report("7b", hb.best_val_psnr >= hc.best_val_psnr,
         "unfrozen " + db(hb.best_val_psnr) + " vs frozen reverse " + db(hc.best_val_psnr) +
             " (pretrain held-out loss " + fmt("%.4g", hp.heldout_loss.front()) + " -> " +
             fmt("%.4g", hp.heldout_loss.back()) + ")");
  report("7c", hb.best_val_psnr >= ha.best_val_psnr,
         "pretrained+finetuned " + db(hb.best_val_psnr) + " vs scratch " + db(ha.best_val_psnr) +
             ", total runtime " + fmt("%.0f", seconds_since(t0)) + "s");
}

// ---------------------------------------------------------------------------

void cost_model() {
  const unfolded::UnfoldedConfig cfg;
  const std::size_t m = sensing::measurements_for_ratio(kRatio, 256);
  const auto r = metrics::flops_report(cfg, m, 256, 256);
  const auto again = metrics::flops_report(cfg, m, 256, 256);
  const bool cheaper = r.step_resblock_path() < r.step_mc_sure_path() &&
                       r.total_resblock_path() < r.total_mc_sure_path();
  const bool additive =
      r.total_resblock_path() ==
          r.head + r.steps * (r.gradient_step + r.resblock + r.reverse_model) + r.tail &&
      r.total_mc_sure_path() ==
          r.head + r.steps * (r.gradient_step + r.mc_sure + r.reverse_model) + r.tail;
  // halves of the image add up to the whole
  const auto top = metrics::flops_report(cfg, m, 128, 256);
  const bool split = 2 * (top.total_resblock_path()) == r.total_resblock_path();
  const bool same = r.csv() == again.csv();
  report("8", cheaper && additive && split && same,
         "ResBlock path " + std::to_string(r.total_resblock_path()) + " vs MC-SURE path " +
             std::to_string(r.total_mc_sure_path()) + " FLOPs at 256x256; additive " +
             (additive && split ? "yes" : "no") + ", deterministic " + (same ? "yes" : "no"));
}

void determinism() {
  // same seeds, two runs
  const auto schedule = diffusion::build_schedule(1000, 1e-4, 0.02);
  const auto times = diffusion::ddim_times(1000, 100);
  const denoise::OracleGaussianFilter filter;
  const denoise::OraclePerfectDenoiser reverse;
  const auto op = sensing::gen_sensing_matrix(128, 256, 1);
  Rng rng(2);
  const auto x = rng.normal_vector(256);
  const auto y = measure(op, x);
  solver::DmpProblem p;
  p.op = &op;
  p.y = y;
  p.schedule = &schedule;
  p.times = &times;
  p.filter = &filter;
  p.reverse = &reverse;
  p.truth = x;
  solver::DmpOptions mc;
  mc.onsager = solver::OnsagerMode::mc_sure;
  const bool dmp_same = bit_equal(solver::dmp_reconstruct(p, mc, 3).x0,
                                  solver::dmp_reconstruct(p, mc, 3).x0);

  const denoise::MmseBernoulliGaussianDenoiser bg(0.1);
  solver::AmpOptions ao;
  ao.onsager = solver::OnsagerMode::mc_sure;
  const bool amp_same = bit_equal(solver::amp_reconstruct(y, op, bg, 10, ao, 4).x,
                                  solver::amp_reconstruct(y, op, bg, 10, ao, 4).x);

  const auto dschedule = diffusion::build_schedule(200, 1e-4, 0.02);
  const auto dop = sensing::gen_sensing_matrix(sensing::measurements_for_ratio(kRatio, 256), 256, 3);
  std::vector<Tensor> patches;
  for (std::uint64_t i = 0; i < 4; ++i) patches.push_back(io::synthetic_image(32, 32, i).reshaped({1, 32, 32}));
  unfolded::TrainOptions to;
  to.epochs = 1;
  to.batch = 2;
  auto run_training = [&] {
    auto m = unfolded::build_model({}, dschedule, dop, 5);
    unfolded::train(m, [&](std::size_t) { return patches; }, {patches[0]}, to);
    return m;
  };
  const auto m1 = run_training();
  const auto m2 = run_training();
  bool train_same = true;
  for (const auto& [name, t] : m1.params) train_same &= bit_equal(t.values(), m2.params.at(name).values());
  const sensing::BlockScheme sc{16, 32, 32};
  const Tensor ym = sensing::forward(m1.sensing_operator(), sensing::partition_blocks(patches[1], sc));
  const bool fwd_same = bit_equal(unfolded::forward(m1, ym, unfolded::image_options(32, 32)).values(),
                                  unfolded::forward(m2, ym, unfolded::image_options(32, 32)).values());
  report("9a", dmp_same && amp_same && train_same && fwd_same,
         std::string("bit-identical reruns: DMP ") + (dmp_same ? "yes" : "no") + ", AMP " +
             (amp_same ? "yes" : "no") + ", training " + (train_same ? "yes" : "no") +
             ", network forward " + (fwd_same ? "yes" : "no"));

  // tensor and checkpoint bytes
  Tensor odd({2, 3}, {0.0, -0.0, 1e-310, std::numeric_limits<double>::infinity(),
                      -std::numeric_limits<double>::max(), 0.1});
  const std::string tb = io::encode_tensor(odd);
  const bool tensor_ok = io::encode_tensor(io::decode_tensor(tb)) == tb &&
                         bit_equal(io::decode_tensor(tb).values(), odd.values());
  const fs::path path = fs::current_path() / "acceptance_roundtrip.ckpt";
  io::save_checkpoint(m1, path, {{"note", "round trip"}});
  const std::string first = io::read_file(path);
  nlohmann::json meta;
  const auto loaded = io::load_checkpoint(path, &meta);
  io::save_checkpoint(loaded, path, meta.at("run"));
  const bool ckpt_ok = io::read_file(path) == first &&
                       io::encode_checkpoint(io::decode_checkpoint(first)) == first;
  fs::remove(path);
  report("9b", tensor_ok && ckpt_ok,
         "tensor bytes " + std::string(tensor_ok ? "identical" : "differ") + " (" +
             std::to_string(tb.size()) + " B), checkpoint bytes " +
             (ckpt_ok ? "identical" : "differ") + " (" + std::to_string(first.size()) + " B)");

  // zero-noise oracle from sqrt(ab_K) x
  solver::DmpOptions zo;
  zo.zero_noise = true;
  std::vector<double> xk(x.size());
  const double s = std::sqrt(schedule.alpha_bar(1000));
  for (std::size_t i = 0; i < x.size(); ++i) xk[i] = s * x[i];
  zo.x_init = xk;
  const auto res = solver::dmp_reconstruct(p, zo, 0);
  double err = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(res.x0[i] - x[i]));
  report("9c", err <= kExactTol, "oracle max |x0 - x| = " + fmt("%.3e", err));
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--only N]...\n", argv[0]);
      return 2;
    }
  }
  const auto want = [&](int n) { return only.empty() || only.count(n) != 0; };
  try {
    if (want(1)) amp_state_evolution();
    if (want(2)) onsager_ablation();
    if (want(3)) dmp_state_evolution();
    if (want(4)) mc_sure();
    if (want(5)) autodiff();
    if (want(6) || want(7)) training();
    if (want(8)) cost_model();
    if (want(9)) determinism();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 1;
  }
  return failures == 0 ? 0 : 1;
}

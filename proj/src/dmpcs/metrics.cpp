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

#include "dmpcs/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "dmpcs/errors.hpp"
#include "dmpcs/solver.hpp"
#include "dmpcs/stats.hpp"

namespace dmpcs::metrics {

namespace {

struct Plane {
  std::size_t height = 0, width = 0;
  std::span<const double> v;
};

Plane plane(const Tensor& t, const char* what) {
  if (t.rank() == 2) return {t.dim(0), t.dim(1), t.data()};
  require(t.rank() == 3 && t.dim(0) == 1,
          std::string(what) + " must be a single-channel image, got " + shape_string(t.shape()));
  return {t.dim(1), t.dim(2), t.data()};
}

std::string num(double v, int digits = 17) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b, double peak) {
  require(a.size() == b.size() && a.size() > 0, "psnr: shape mismatch " + shape_string(a.shape()) +
                                                    " vs " + shape_string(b.shape()));
  require(peak > 0.0, "psnr: peak must be positive");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  if (acc == 0.0) return kIdenticalPsnr;
  return 10.0 * std::log10(peak * peak / (acc / double(a.size())));
}

double ssim(const Tensor& a, const Tensor& b) {
  const Plane pa = plane(a, "ssim input"), pb = plane(b, "ssim input");
  require(pa.height == pb.height && pa.width == pb.width, "ssim: shape mismatch");
  constexpr int radius = 5;
  require(pa.height >= 11 && pa.width >= 11, "ssim needs images of at least 11x11");
  constexpr double sigma = 1.5, k1 = 0.01, k2 = 0.03;
  const double c1 = k1 * k1, c2 = k2 * k2;

  double w1[2 * radius + 1];
  double norm = 0.0;
  for (int k = -radius; k <= radius; ++k) norm += w1[k + radius] = std::exp(-k * k / (2 * sigma * sigma));
  for (double& w : w1) w /= norm;

  const std::size_t h = pa.height, w = pa.width;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = radius; i + radius < h; ++i) {
    for (std::size_t j = radius; j + radius < w; ++j) {
      double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
      for (int di = -radius; di <= radius; ++di) {
        for (int dj = -radius; dj <= radius; ++dj) {
          const double wt = w1[di + radius] * w1[dj + radius];
          const std::size_t idx = (i + di) * w + (j + dj);
          const double x = pa.v[idx], y = pb.v[idx];
          mx += wt * x;
          my += wt * y;
          mxx += wt * x * x;
          myy += wt * y * y;
          mxy += wt * x * y;
        }
      }
      const double vx = mxx - mx * mx, vy = myy - my * my, vxy = mxy - mx * my;
      total += ((2 * mx * my + c1) * (2 * vxy + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / double(count);
}

double gaussianity_corr(std::span<const double> noise) {
  require(noise.size() >= 16, "gaussianity_corr needs at least 16 samples");
  const solver::QqData q = solver::qq_quantiles(noise, noise.size());
  return stats::pearson(q.normal, q.empirical);
}

MetricReport evaluate(const std::vector<Tensor>& refs, const std::vector<Tensor>& recs,
                      const std::vector<std::string>& names) {
  require(!refs.empty() && refs.size() == recs.size(), "evaluate: need matching image lists");
  MetricReport r;
  bool all_identical = true;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    ImageMetrics m;
    m.name = i < names.size() ? names[i] : "image" + std::to_string(i);
    m.psnr_db = psnr(recs[i], refs[i]);
    m.ssim = ssim(recs[i], refs[i]);
    all_identical = all_identical && std::isinf(m.psnr_db);
    r.ssim += m.ssim / double(refs.size());
    r.images.push_back(m);
  }
  r.psnr_db = kIdenticalPsnr;
  if (!all_identical) {
    // identical images inside a mixed set count as 100 dB
    double s = 0.0;
    for (const auto& m : r.images) s += std::isinf(m.psnr_db) ? 100.0 : m.psnr_db;
    r.psnr_db = s / double(r.images.size());
  }
  return r;
}

std::string MetricReport::csv() const {
  std::ostringstream os;
  os << "image,psnr_db,ssim\n";
  for (const auto& m : images) os << m.name << ',' << num(m.psnr_db) << ',' << num(m.ssim) << '\n';
  os << "mean," << num(psnr_db) << ',' << num(ssim) << '\n';
  return os.str();
}

std::string MetricReport::table() const {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-24s %12s %10s\n", "image", "PSNR (dB)", "SSIM");
  os << buf;
  for (const auto& m : images) {
    std::snprintf(buf, sizeof buf, "%-24s %12s %10.6f\n", m.name.c_str(), num(m.psnr_db, 6).c_str(),
                  m.ssim);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%-24s %12s %10.6f\n", "mean", num(psnr_db, 6).c_str(), ssim);
  os << buf;
  if (!std::isnan(gaussianity_corr)) {
    std::snprintf(buf, sizeof buf, "gaussianity_corr %.6f\n", gaussianity_corr);
    os << buf;
  }
  return os.str();
}

std::uint64_t conv_flops(std::size_t cin, std::size_t cout, std::size_t height, std::size_t width) {
  return 2ULL * cin * cout * 9ULL * height * width;
}

namespace {

std::uint64_t resblock_flops(std::size_t in, std::size_t c, std::size_t out, std::size_t units,
                             std::size_t h, std::size_t w) {
  return conv_flops(in, c, h, w) + 2 * units * conv_flops(c, c, h, w) + conv_flops(c, out, h, w);
}

}  // namespace

CostReport flops_report(const unfolded::UnfoldedConfig& cfg, std::size_t measurements,
                        std::size_t height, std::size_t width, std::size_t probes) {
  const sensing::BlockScheme scheme{cfg.block, height, width};
  scheme.validate();
  require(probes >= 1, "need at least one probe");
  const std::size_t c = cfg.channels;
  CostReport r;
  r.steps = cfg.steps();
  r.probes = probes;
  r.gradient_step = 2ULL * 2ULL * measurements * scheme.block_length() * scheme.block_count();
  r.resblock = resblock_flops(1 + c, c, 1 + c, cfg.res_units, height, width);
  r.reverse_model = conv_flops(1, cfg.reverse_width, height, width) +
                    (cfg.reverse_depth - 1) * conv_flops(cfg.reverse_width, cfg.reverse_width, height, width) +
                    conv_flops(cfg.reverse_width, 1, height, width);
  r.mc_sure = 2ULL * probes * r.reverse_model;
  r.head = resblock_flops(1, c, 1 + c, cfg.res_units, height, width);
  r.tail = resblock_flops(cfg.tail_channels, c, 1, cfg.res_units, height, width);
  return r;
}

std::string CostReport::csv() const {
  std::ostringstream os;
  os << "component,flops\n"
     << "gradient_step," << gradient_step << '\n'
     << "resblock," << resblock << '\n'
     << "reverse_model," << reverse_model << '\n'
     << "mc_sure," << mc_sure << '\n'
     << "head," << head << '\n'
     << "tail," << tail << '\n'
     << "step_resblock_path," << step_resblock_path() << '\n'
     << "step_mc_sure_path," << step_mc_sure_path() << '\n'
     << "total_resblock_path," << total_resblock_path() << '\n'
     << "total_mc_sure_path," << total_mc_sure_path() << '\n';
  return os.str();
}

std::string CostReport::table() const {
  std::ostringstream os;
  char buf[128];
  auto row = [&](const char* name, std::uint64_t v) {
    std::snprintf(buf, sizeof buf, "%-22s %16llu %10.4f M\n", name, static_cast<unsigned long long>(v),
                  double(v) / 1e6);
    os << buf;
  };
  row("gradient step", gradient_step);
  row("ResBlock", resblock);
  row("reverse model", reverse_model);
  row("MC-SURE", mc_sure);
  row("head", head);
  row("tail", tail);
  row("per step (ResBlock)", step_resblock_path());
  row("per step (MC-SURE)", step_mc_sure_path());
  row("total (ResBlock)", total_resblock_path());
  row("total (MC-SURE)", total_mc_sure_path());
  return os.str();
}

}  // namespace dmpcs::metrics

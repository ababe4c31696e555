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


#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "dmpcs/denoise.hpp"
#include "dmpcs/errors.hpp"
#include "dmpcs/metrics.hpp"
#include "dmpcs/rng.hpp"
#include "dmpcs/stats.hpp"

using namespace dmpcs;
using namespace dmpcs::denoise;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

double integrate(const std::function<double(double)>& f) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -kInf, kInf, 15, 1e-14);
}

double phi(double x, double var) { return std::exp(-x * x / (2 * var)) / std::sqrt(2 * M_PI * var); }

// E[x | h] for x ~ (1-rho) delta_0 + rho N(0,1), h = x + sigma z, by quadrature.
double posterior_mean_quadrature(double h, double sigma, double rho) {
  const double v = sigma * sigma;
  const double num = rho * integrate([&](double x) { return x * phi(x, 1.0) * phi(h - x, v); });
  const double slab = rho * integrate([&](double x) { return phi(x, 1.0) * phi(h - x, v); });
  return num / ((1 - rho) * phi(h, v) + slab);
}

}  // namespace

TEST(SoftThreshold, Values) {
  const auto out = soft_threshold(std::vector<double>{2.0, -0.5, -3.0}, 1.0);
  EXPECT_EQ(out, (std::vector<double>{1.0, 0.0, -2.0}));
  EXPECT_EQ(soft_threshold_divergence(std::vector<double>{2.0, 0.5, -3.0}, 1.0), 2.0);
  const std::vector<double> h{0.3, -1.2, 5.0, 0.0};
  EXPECT_EQ(soft_threshold(h, 0.0), h);
  EXPECT_THROW(soft_threshold(h, -0.1), ValidationError);
}

TEST(SoftThreshold, DivergenceAtZeroThresholdIsN) {
  Rng rng(1);
  const auto h = rng.normal_vector(64);
  EXPECT_EQ(soft_threshold_divergence(h, 0.0), 64.0);
}

TEST(MmseGaussian, Values) {
  const std::vector<double> h{2.0, -0.4};
  EXPECT_EQ(mmse_gaussian(h, 0.0), h);
  EXPECT_EQ(mmse_gaussian(std::vector<double>{2.0}, 1.0)[0], 1.0);
}

TEST(MmseGaussian, MatchesQuadrature) {
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const double h = 3 * rng.normal(), sigma = 0.2 + rng.uniform();
    EXPECT_NEAR(mmse_gaussian(std::vector<double>{h}, sigma)[0],
                posterior_mean_quadrature(h, sigma, 1.0), 1e-8);
  }
}

TEST(MmseBernoulliGaussian, Properties) {
  EXPECT_EQ(mmse_bernoulli_gaussian(0.0, 0.5, 0.1), 0.0);
  EXPECT_NEAR(mmse_bernoulli_gaussian(1.3, 0.7, 1.0), 1.3 / (1 + 0.49), 1e-15);
  EXPECT_NEAR(mmse_bernoulli_gaussian(1.5, 0.5, 0.1), posterior_mean_quadrature(1.5, 0.5, 0.1), 1e-8);
  for (double h : {-4.0, -1.0, 0.3, 2.5}) {
    EXPECT_DOUBLE_EQ(mmse_bernoulli_gaussian(-h, 0.4, 0.2), -mmse_bernoulli_gaussian(h, 0.4, 0.2));
    EXPECT_LE(std::abs(mmse_bernoulli_gaussian(h, 0.4, 0.2)), std::abs(h));
  }
  EXPECT_THROW(MmseBernoulliGaussianDenoiser(0.0), ValidationError);
  EXPECT_THROW(MmseBernoulliGaussianDenoiser(1.5), ValidationError);
}

TEST(MmseBernoulliGaussian, DerivativeMatchesDifference) {
  for (double h : {-2.0, -0.3, 0.0, 0.8, 3.0}) {
    const double e = 1e-6;
    const double fd = (mmse_bernoulli_gaussian(h + e, 0.6, 0.15) -
                       mmse_bernoulli_gaussian(h - e, 0.6, 0.15)) / (2 * e);
    EXPECT_NEAR(mmse_bernoulli_gaussian_derivative(h, 0.6, 0.15), fd, 1e-7);
  }
}

TEST(Denoisers, LipschitzAtMostOne) {
  Rng rng(3);
  const SoftThresholdDenoiser st(0.7);
  const MmseGaussianDenoiser mg;
  const MmseBernoulliGaussianDenoiser bg(0.1);
  DenoiseContext ctx;
  ctx.noise_var = 0.3;
  for (const Denoiser* d : std::initializer_list<const Denoiser*>{&st, &mg, &bg}) {
    for (int i = 0; i < 50; ++i) {
      const auto a = rng.normal_vector(32), b = rng.normal_vector(32);
      const auto fa = d->apply(a, ctx), fb = d->apply(b, ctx);
      double num = 0, den = 0;
      for (std::size_t k = 0; k < 32; ++k) {
        num += std::pow(fa[k] - fb[k], 2);
        den += std::pow(a[k] - b[k], 2);
      }
      EXPECT_LE(std::sqrt(num), std::sqrt(den) + 1e-10) << to_string(d->kind());
    }
  }
}

TEST(OraclePerfect, Examples) {
  const auto s = diffusion::build_schedule(50, 1e-4, 0.05);
  const std::vector<double> x{0.5, -1.0, 0.25}, zero(3, 0.0);
  // t = 1 has no posterior variance, so noise does not matter
  const std::vector<double> r1{0.2, 0.1, -0.4};
  EXPECT_EQ(oracle_perfect_denoiser(r1, 1, 0, x, s, std::vector<double>{1.0, 2.0, 3.0}),
            oracle_perfect_denoiser(r1, 1, 0, x, s, zero));
  std::vector<double> rt(3);
  for (std::size_t i = 0; i < 3; ++i) rt[i] = std::sqrt(s.alpha_bar(20)) * x[i];
  const auto out = oracle_perfect_denoiser(rt, 20, 19, x, s, zero);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(out[i], std::sqrt(s.alpha_bar(19)) * x[i], 1e-12);
  EXPECT_THROW(oracle_perfect_denoiser(rt, 20, 19, {}, s, zero), ValidationError);
}

TEST(OraclePerfect, MeanOverDraws) {
  const auto s = diffusion::build_schedule(50, 1e-4, 0.05);
  const std::size_t n = 100000;
  Rng rng(4);
  const std::vector<double> x(n, 0.8), r(n, 0.3);
  const auto out = oracle_perfect_denoiser(r, 30, 29, x, s, rng.normal_vector(n));
  const auto c = diffusion::posterior_coefficients(s, 30, 29);
  const double mu = c.signal * 0.3 + c.clean * 0.8;
  EXPECT_NEAR(stats::mean(out), mu, 0.02 * mu);
}

TEST(OraclePerfect, ZeroNoiseChainRecoversSignal) {
  const auto s = diffusion::build_schedule(100, 1e-4, 0.02);
  const auto times = diffusion::ddim_times(100, 25);
  Rng rng(5);
  const auto x = rng.normal_vector(16);
  std::vector<double> cur(16, 0.0);
  for (std::size_t k = 0; k + 1 < times.times.size(); ++k)
    cur = oracle_perfect_denoiser(cur, times.times[k], times.times[k + 1], x, s,
                                  std::vector<double>(16, 0.0));
  for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(cur[i], x[i], 1e-14);
}

TEST(OracleFilter, ZeroVarianceIsScaledTruth) {
  const auto s = diffusion::build_schedule(100, 1e-4, 0.02);
  const std::vector<double> x{1.0, -2.0}, d{5.0, 5.0}, noise{0.3, -0.3};
  const auto r = oracle_gaussian_filter(d, 40, x, s, 0.0, noise);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(r[i], std::sqrt(s.alpha_bar(40)) * x[i]);
}

TEST(OracleFilter, ResidualIsGaussianWithTargetVariance) {
  const auto s = diffusion::build_schedule(1000, 1e-4, 0.02);
  const std::size_t t = 500;
  const double target = filter_target_variance(s, t, FilterVariance::marginal);
  EXPECT_DOUBLE_EQ(target, 1 - s.alpha_bar(t));
  EXPECT_DOUBLE_EQ(filter_target_variance(s, t, FilterVariance::sqrt_alpha),
                   1 - std::sqrt(s.alpha_bar(t)));
  Rng rng(6);
  for (std::size_t n : {4096u, 100000u}) {
    const auto x = rng.normal_vector(n);
    const OracleGaussianFilter f;
    const auto noise = rng.normal_vector(n);
    const auto r = f.apply(std::vector<double>(n), {t, &s, x, noise});
    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) resid[i] = r[i] - std::sqrt(s.alpha_bar(t)) * x[i];
    if (n == 4096) EXPECT_GE(metrics::gaussianity_corr(resid), 0.99);
    else EXPECT_NEAR(stats::variance(resid) / target, 1.0, 0.03);
  }
  EXPECT_THROW(OracleGaussianFilter().apply(std::vector<double>(3), {t, &s, {}, {}}),
               ValidationError);
}

TEST(McSure, IdentityDenoiser) {
  Rng rng(7), probe(8);
  const auto h = rng.normal_vector(4096);
  const auto est = mc_sure_divergence(
      [](std::span<const double> v) { return std::vector<double>(v.begin(), v.end()); }, h, 1e-3,
      10, probe);
  EXPECT_NEAR(est.value / 4096.0, 1.0, 0.03);
  EXPECT_EQ(est.probes, 10u);
}

TEST(McSure, LinearDenoiserTrace) {
  Rng rng(9);
  auto linear = [](std::size_t n, std::vector<double>& a) {
    return [n, &a](std::span<const double> v) {
      std::vector<double> out(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i] += a[i * n + j] * v[j];
      return out;
    };
  };
  auto make = [&](std::size_t n, double spread) {
    std::vector<double> a(n * n);
    for (std::size_t i = 0; i < n * n; ++i) a[i] = spread * rng.normal() + (i % (n + 1) == 0);
    return a;
  };
  auto trace = [](const std::vector<double>& a, std::size_t n) {
    double t = 0;
    for (std::size_t i = 0; i < n; ++i) t += a[i * n + i];
    return t;
  };
  auto a8 = make(8, 0.5);
  Rng p1(10), p2(11);
  EXPECT_NEAR(mc_sure_divergence(linear(8, a8), rng.normal_vector(8), 1e-3, 100, p1).value /
                  trace(a8, 8), 1.0, 0.05);
  // Hutchinson spread is about sqrt(2/n) per probe; n = 32 keeps 1% at four sigma.
  auto a32 = make(32, 0.1);
  EXPECT_NEAR(mc_sure_divergence(linear(32, a32), rng.normal_vector(32), 1e-3, 10000, p2).value /
                  trace(a32, 32), 1.0, 0.01);
}

TEST(McSure, SoftThresholdCount) {
  Rng rng(12), probe(13);
  auto h = rng.normal_vector(4096);
  for (double& v : h) v *= 2.0;
  const double exact = soft_threshold_divergence(h, 1.0);
  const auto est = mc_sure_divergence(
      [](std::span<const double> v) { return soft_threshold(v, 1.0); }, h, 1e-3, 10, probe);
  EXPECT_NEAR(est.value / exact, 1.0, 0.05);
}

TEST(McSure, RejectsBadArguments) {
  Rng rng(1);
  const std::vector<double> h{1.0};
  auto id = [](std::span<const double> v) { return std::vector<double>(v.begin(), v.end()); };
  EXPECT_THROW(mc_sure_divergence(id, h, 0.0, 1, rng), ValidationError);
  EXPECT_THROW(mc_sure_divergence(id, h, 1e-3, 0, rng), ValidationError);
}

TEST(PassThrough, LeavesInput) {
  const PassThroughFilter f;
  const std::vector<double> d{0.1, -2.0};
  EXPECT_EQ(f.apply(d, {}), d);
  EXPECT_FALSE(f.needs_ground_truth());
}

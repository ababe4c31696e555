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

#include "dmpcs/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "dmpcs/errors.hpp"

namespace dmpcs::stats {

double mean(std::span<const double> v) {
  require(!v.empty(), "mean of empty data");
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / double(v.size());
}

double variance(std::span<const double> v) {
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / double(v.size());
}

double rms(std::span<const double> v) {
  require(!v.empty(), "rms of empty data");
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc / double(v.size()));
}

double pearson(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && a.size() >= 2, "pearson needs equal lengths >= 2");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  require(saa > 0.0 && sbb > 0.0, "pearson of a constant sequence");
  return sab / std::sqrt(saa * sbb);
}

double normal_pdf(double x, double variance) {
  return std::exp(-0.5 * x * x / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

std::vector<double> probability_levels(std::size_t n) {
  std::vector<double> p(n);
  for (std::size_t k = 0; k < n; ++k) p[k] = (double(k) + 0.5) / double(n);
  return p;
}

double sorted_quantile(std::span<const double> sorted, double p) {
  require(!sorted.empty(), "quantile of empty data");
  const double pos = p * double(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - double(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double gaussian_expectation(const std::function<double(double)>& f, double var,
                            double feature_scale) {
  require(var > 0.0, "gaussian_expectation needs a positive variance");
  const double sd = std::sqrt(var);
  auto weighted = [&](double h) { return normal_pdf(h, var) * f(h); };

  std::vector<double> cuts{0.0};
  for (double k : {1.0, 2.0, 4.0, 8.0}) cuts.push_back(k * sd);
  if (feature_scale > 0.0 && feature_scale < sd)
    for (double k : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0})
      if (k * feature_scale < 8.0 * sd) cuts.push_back(k * feature_scale);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  constexpr unsigned depth = 12;
  constexpr double tol = 1e-13;
  double total = 0.0;
  for (double sign : {1.0, -1.0}) {
    auto side = [&](double u) { return weighted(sign * u); };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      total += GK::integrate(side, cuts[i], cuts[i + 1], depth, tol);
    total += GK::integrate(side, cuts.back(), std::numeric_limits<double>::infinity(), depth, tol);
  }
  return total;
}

}  // namespace dmpcs::stats

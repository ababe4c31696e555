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

#include <functional>
#include <span>
#include <vector>

namespace dmpcs::stats {

double mean(std::span<const double> v);
/// Population variance (divides by n).
double variance(std::span<const double> v);
double rms(std::span<const double> v);
double pearson(std::span<const double> a, std::span<const double> b);

double normal_pdf(double x, double variance = 1.0);
double normal_quantile(double p);

/// Plotting positions (k + 0.5) / n for k = 0..n-1.
std::vector<double> probability_levels(std::size_t n);

/// Linear-interpolated empirical quantile of already-sorted data.
double sorted_quantile(std::span<const double> sorted, double p);

/// Integral over the real line of N(h; 0, var) f(h). `feature_scale` marks
/// where f may change quickly (for example the width of a denoiser's
/// shrinkage zone); extra breakpoints are placed there so a narrow feature
/// is never skipped by the adaptive rule.
double gaussian_expectation(const std::function<double(double)>& f, double var,
                            double feature_scale);

}  // namespace dmpcs::stats

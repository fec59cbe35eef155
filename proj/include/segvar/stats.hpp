// Copyright 2026 The segvar Authors
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

#include <optional>
#include <span>

namespace segvar {

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1],
/// evaluated by its continued fraction (modified Lentz).
double incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1 denominator); absent when n < 2.
std::optional<double> sample_std(std::span<const double> xs);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

/// Paired two-sided t-test on d = a - b. Throws InvalidArgument when the
/// lengths differ or n < 2, DegenerateVariance when every difference is equal.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace segvar

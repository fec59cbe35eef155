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

#include "segvar/stats.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "segvar/error.hpp"

namespace segvar {

namespace {

double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  fail(ErrorCode::Internal, "incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, ErrorCode::InvalidArgument, "incomplete_beta needs a, b > 0");
  require(x >= 0.0 && x <= 1.0, ErrorCode::InvalidArgument, "incomplete_beta needs x in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  require(df > 0.0, ErrorCode::InvalidArgument, "degrees of freedom must be > 0");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

double mean(std::span<const double> xs) {
  require(!xs.empty(), ErrorCode::EmptyInput, "mean of an empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

std::optional<double> sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return std::nullopt;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::InvalidArgument, "paired t-test needs equal-length samples");
  require(a.size() >= 2, ErrorCode::InvalidArgument, "paired t-test needs n >= 2");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  bool all_equal = true;
  for (double v : d) all_equal = all_equal && v == d.front();
  require(!all_equal, ErrorCode::DegenerateVariance, "paired differences have zero variance");
  const double n = static_cast<double>(d.size());
  const double md = mean(d);
  const double sd = *sample_std(d);
  require(sd > 0.0, ErrorCode::DegenerateVariance, "paired differences have zero variance");
  TTestResult r;
  r.n = d.size();
  r.df = n - 1.0;
  r.t = md / (sd / std::sqrt(n));
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

}  // namespace segvar

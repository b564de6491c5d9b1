// Copyright 2026 The PrefAlign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PREFALIGN_STATS_H_
#define PREFALIGN_STATS_H_

#include <span>
#include <vector>

namespace prefalign {

// Linear-interpolated quantile (type 7) of an unsorted sample.
double Quantile(std::span<const double> values, double q);
inline double Median(std::span<const double> values) {
  return Quantile(values, 0.5);
}
double Mean(std::span<const double> values);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares y = slope * x + intercept. Throws DegenerateFit
// when fewer than two distinct x values are supplied.
LineFit FitLine(std::span<const double> x, std::span<const double> y);

// FitLine on (log x, log y); every value must be positive.
LineFit FitLogLog(std::span<const double> x, std::span<const double> y);

}  // namespace prefalign

#endif  // PREFALIGN_STATS_H_

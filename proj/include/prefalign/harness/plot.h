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

// Self-contained SVG line charts of record medians with interquartile bands.

#ifndef PREFALIGN_HARNESS_PLOT_H_
#define PREFALIGN_HARNESS_PLOT_H_

#include <string>
#include <vector>

#include "json.hpp"
#include "prefalign/harness/records.h"

namespace prefalign {

struct PlotSpec {
  std::string x_field = "size";
  std::string y_field = "gap";
  // Records are split into one line per distinct value of this column;
  // empty draws a single series.
  std::string series_field;
  bool log_x = false;
  bool log_y = false;
  std::string title;
  int width = 640;
  int height = 420;
};

// Fields: x, y, series, log_x, log_y, title, width, height.
PlotSpec ParsePlotSpec(const nlohmann::json& j);

// EmptyData when no record yields a drawable point (log axes drop
// nonpositive values). Output bytes depend only on the inputs.
std::string EmitPlot(const std::vector<RunRecord>& records,
                     const PlotSpec& spec);
void WritePlot(const std::vector<RunRecord>& records, const PlotSpec& spec,
               const std::string& path);

}  // namespace prefalign

#endif  // PREFALIGN_HARNESS_PLOT_H_

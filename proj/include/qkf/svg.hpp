// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace qkf::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool lines = true;    // connect points in order
  bool markers = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  /// Emitted as an XML comment right after the root element.
  std::string comment;
  double width = 640, height = 420;
  /// Non-finite points are dropped; fixed axis ranges when lo < hi.
  double x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;
};

/// Standalone SVG document with axes, ticks and a legend.
std::string plot(const PlotSpec& spec, const std::vector<Series>& series);

/// Box plot per group (min, quartiles, median, max), e.g. accuracy spread per stage.
std::string box_plot(const PlotSpec& spec, const std::vector<std::string>& groups,
                     const std::vector<std::vector<double>>& values);

std::string escape(const std::string& s);

}  // namespace qkf::svg

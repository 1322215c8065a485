#pragma once

#include <string>
#include <vector>

namespace descentlab {

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal standalone SVG line chart on log-log axes.  Nonpositive points are
// dropped; decade ticks are drawn on both axes.
void write_loglog_chart(const std::string& path, const std::string& title,
                        const std::vector<SvgSeries>& series);

}  // namespace descentlab

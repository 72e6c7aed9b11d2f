#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lilxing::cli {

struct RateSeries {
  double epsilon = 0;
  std::vector<double> loglog;  // x: log log(1/t)
  std::vector<double> log_p;   // y: log p_hat
};

/// Scatter of log p_hat against log log(1/t), one colour per epsilon, each
/// with a dashed reference line of slope -epsilon through the series mean.
void write_rate_plot(std::ostream& out, const std::vector<RateSeries>& series,
                     const std::string& title);

}  // namespace lilxing::cli

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace spkn {

struct RunSample {
  double accuracy = 0.0;
  double wall_time_s = 0.0;
};

struct RunStats {
  std::vector<RunSample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  std::vector<double> accuracies() const;
  std::vector<double> wall_times() const;
};

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> xs);

/// Two-sided standard normal quantile for a confidence level, e.g. 0.999 -> 3.2905.
double normal_quantile_two_sided(double level);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return lo <= v && v <= hi; }
  /// A mean difference is significant when its interval excludes zero.
  bool significant() const { return !contains(0.0); }
};

/// (mean_a - mean_b) +- z * sqrt(sd_a^2/n_a + sd_b^2/n_b).
Interval mean_diff_ci(std::span<const double> a, std::span<const double> b, double level = 0.999);

}  // namespace spkn

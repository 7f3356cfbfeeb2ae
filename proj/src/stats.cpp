#include "spkn/stats.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace spkn {

std::vector<double> RunStats::accuracies() const {
  std::vector<double> out;
  for (const auto& s : samples) out.push_back(s.accuracy);
  return out;
}

std::vector<double> RunStats::wall_times() const {
  std::vector<double> out;
  for (const auto& s : samples) out.push_back(s.wall_time_s);
  return out;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double normal_quantile_two_sided(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("confidence level must lie in (0,1)");
  }
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + level / 2.0);
}

Interval mean_diff_ci(std::span<const double> a, std::span<const double> b, double level) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("mean_diff_ci needs at least two samples per group");
  }
  const double z = normal_quantile_two_sided(level);
  const double sa = stddev(a), sb = stddev(b);
  const double half = z * std::sqrt(sa * sa / static_cast<double>(a.size()) +
                                    sb * sb / static_cast<double>(b.size()));
  const double diff = mean(a) - mean(b);
  return {diff - half, diff + half};
}

}  // namespace spkn

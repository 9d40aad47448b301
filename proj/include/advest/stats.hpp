#pragma once

#include <cmath>

namespace advest {

/// Welford running mean/variance; identical samples give an exact zero
/// spread instead of cancellation noise.
struct RunningStats {
  long n = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n);
    m2_ += d * (x - mean_);
  }
  double mean() const { return n > 0 ? mean_ : 0.0; }
  double pop_std() const {
    return n > 0 ? std::sqrt(m2_ / static_cast<double>(n)) : 0.0;
  }
};

}  // namespace advest

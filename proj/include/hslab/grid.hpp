#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "hslab/errors.hpp"

namespace hslab {

// `count` log-spaced points from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) {
    throw GridError("log_grid requires 0 < lo < hi and at least two points");
  }
  std::vector<double> out(count);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  if (count < 2) throw GridError("linspace requires at least two points");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return out;
}

// Number of decades covered by a positive grid.
inline double decades(const std::vector<double>& grid) {
  if (grid.empty()) return 0.0;
  double lo = grid.front(), hi = grid.front();
  for (double g : grid) {
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  return lo > 0.0 ? std::log10(hi / lo) : 0.0;
}

}  // namespace hslab

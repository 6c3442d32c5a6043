#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "swbreak/grid.hpp"

namespace swbreak::detail {

// Lagrange weights for a 6-node stencil at integer offsets {-2..3}, evaluated
// at local coordinate a (a = 0 at offset 0).  Exact pass-through: at a = 0
// the offset-0 weight is exactly 1 and the rest exactly 0.
inline void lagrange6_weights(double a, double wts[6]) {
  for (int k = 0; k < 6; ++k) {
    double num = 1.0, den = 1.0;
    for (int j = 0; j < 6; ++j) {
      if (j == k) continue;
      num *= a - static_cast<double>(j - 2);
      den *= static_cast<double>(k - j);
    }
    wts[k] = num / den;
  }
}

// Value of the quintic Lagrange interpolant of a periodic grid field at x.
inline double interp6_periodic(const std::vector<double>& f, const Grid& g, double x) {
  const double u = (x - g.x0) / g.dx();
  const double base = std::floor(u);
  double wts[6];
  lagrange6_weights(u - base, wts);
  const auto i = static_cast<std::ptrdiff_t>(base);
  double acc = 0.0;
  for (int k = 0; k < 6; ++k) acc += wts[k] * f[g.wrap(i + k - 2)];
  return acc;
}

}  // namespace swbreak::detail

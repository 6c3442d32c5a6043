#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "swbreak/errors.hpp"

namespace swbreak {

// Uniform periodic grid on [x0, x0 + length), node i at x0 + i*dx.
// The right endpoint is excluded: node n would alias node 0.
struct Grid {
  std::size_t n = 0;
  double x0 = 0.0;
  double length = 0.0;

  Grid() = default;
  Grid(std::size_t n_, double x0_, double length_) : n(n_), x0(x0_), length(length_) {
    if (n < 8) throw DomainError("Grid: need at least 8 nodes");
    if (!(length > 0.0)) throw DomainError("Grid: length must be positive");
  }

  // Centered box [-L/2, L/2).
  static Grid centered(std::size_t n, double length) { return Grid(n, -0.5 * length, length); }

  double dx() const { return length / static_cast<double>(n); }
  double x(std::size_t i) const { return x0 + static_cast<double>(i) * dx(); }

  // Wrap an index into [0, n).
  std::size_t wrap(std::ptrdiff_t i) const {
    const auto nn = static_cast<std::ptrdiff_t>(n);
    i %= nn;
    if (i < 0) i += nn;
    return static_cast<std::size_t>(i);
  }

  // Wrap a coordinate into [x0, x0 + length).
  double wrap_x(double x) const {
    double r = std::fmod(x - x0, length);
    if (r < 0.0) r += length;
    return x0 + r;
  }

  // Signed minimal-image separation a - b in (-length/2, length/2].
  double min_image(double a, double b) const {
    double d = std::fmod(a - b, length);
    if (d > 0.5 * length) d -= length;
    if (d <= -0.5 * length) d += length;
    return d;
  }

  std::vector<double> nodes() const {
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = x(i);
    return xs;
  }

  bool operator==(const Grid& o) const {
    return n == o.n && x0 == o.x0 && length == o.length;
  }
};

}  // namespace swbreak

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "interp.hpp"
#include "swbreak/errors.hpp"
#include "swbreak/renormalization.hpp"

namespace swbreak::detail {

// Interpolating view of a stored frame: exact pass-through at frame nodes,
// quintic interpolation elsewhere.  side arrays: y[m-1-j] = -y[m+j].
struct FrameView {
  const SelfSimilarFrame& f;
  std::size_t m;        // nodes per log side
  double log_ratio;     // log spacing between adjacent |y| nodes

  explicit FrameView(const SelfSimilarFrame& fr)
      : f(fr),
        m(fr.y.size() / 2),
        log_ratio(std::log(10.0) / static_cast<double>(fr.nodes_per_decade)) {}

  double patch_cover() const {
    return f.py.back() - 3.0 * f.patch_step;  // widest y served by patch stencils
  }
  double y_max() const { return f.y.back(); }

  enum class Field { W, Z, B };

  const std::vector<double>& log_array(Field which) const {
    switch (which) {
      case Field::W: return f.W;
      case Field::Z: return f.Z;
      default: return f.B;
    }
  }

  double eval(double yv, Field which) const {
    // exact patch node?
    if (which != Field::B && !f.py.empty()) {
      const double u = yv / f.patch_step + static_cast<double>(f.patch_half_count);
      const auto idx = static_cast<std::ptrdiff_t>(std::llround(u));
      if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(f.py.size()) &&
          f.py[static_cast<std::size_t>(idx)] == yv)
        return (which == Field::W ? f.pW : f.pZ)[static_cast<std::size_t>(idx)];
    }
    const double ay = std::abs(yv);
    // exact log node?
    if (ay >= f.y_min) {
      const auto j = static_cast<std::ptrdiff_t>(std::llround(std::log(ay / f.y_min) / log_ratio));
      if (j >= 0 && j < static_cast<std::ptrdiff_t>(m)) {
        const std::size_t idx = yv > 0.0 ? m + static_cast<std::size_t>(j)
                                         : m - 1 - static_cast<std::size_t>(j);
        if (f.y[idx] == yv) return log_array(which)[idx];
      }
    }
    if (which != Field::B && std::abs(yv) <= patch_cover()) return patch_interp(yv, which);
    if (ay <= y_max()) return log_interp(yv, which);
    throw ExtractionError("frame evaluation: target outside the stored range");
  }

  double patch_interp(double yv, Field which) const {
    const std::vector<double>& p = which == Field::W ? f.pW : f.pZ;
    const double u = yv / f.patch_step + static_cast<double>(f.patch_half_count);
    const double base = std::floor(u);
    auto i0 = static_cast<std::ptrdiff_t>(base) - 2;
    i0 = std::clamp<std::ptrdiff_t>(i0, 0, static_cast<std::ptrdiff_t>(p.size()) - 6);
    double wts[6];
    detail::lagrange6_weights(u - static_cast<double>(i0 + 2), wts);
    double acc = 0.0;
    for (int k = 0; k < 6; ++k) acc += wts[k] * p[static_cast<std::size_t>(i0) + k];
    return acc;
  }

  double log_interp(double yv, Field which) const {
    const std::vector<double>& arr = log_array(which);
    const double jf = std::log(std::abs(yv) / f.y_min) / log_ratio;
    auto i0 = static_cast<std::ptrdiff_t>(std::floor(jf)) - 2;
    i0 = std::clamp<std::ptrdiff_t>(i0, 0, static_cast<std::ptrdiff_t>(m) - 6);
    double wts[6];
    detail::lagrange6_weights(jf - static_cast<double>(i0 + 2), wts);
    double acc = 0.0;
    for (int k = 0; k < 6; ++k) {
      const std::size_t j = static_cast<std::size_t>(i0) + static_cast<std::size_t>(k);
      const std::size_t idx = yv > 0.0 ? m + j : m - 1 - j;
      acc += wts[k] * arr[idx];
    }
    return acc;
  }
};

}  // namespace swbreak::detail

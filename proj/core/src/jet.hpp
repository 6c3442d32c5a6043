#pragma once

#include <array>
#include <cmath>

namespace swbreak::detail {

// Order-5 Taylor jet: c[k] = f^(k)(x) / k!.  Arithmetic on jets gives exact
// derivatives of composite expressions (cutoffs, bumps, sech^2) without any
// hand-derived chain-rule tables.
struct Jet {
  std::array<double, 6> c{};

  static Jet constant(double v) {
    Jet j;
    j.c[0] = v;
    return j;
  }
  // The identity function evaluated at x.
  static Jet variable(double x) {
    Jet j;
    j.c[0] = x;
    j.c[1] = 1.0;
    return j;
  }

  double deriv(int k) const {
    static constexpr double fact[6] = {1, 1, 2, 6, 24, 120};
    return c[std::size_t(k)] * fact[k];
  }

  friend Jet operator+(const Jet& a, const Jet& b) {
    Jet r;
    for (int k = 0; k < 6; ++k) r.c[k] = a.c[k] + b.c[k];
    return r;
  }
  friend Jet operator-(const Jet& a, const Jet& b) {
    Jet r;
    for (int k = 0; k < 6; ++k) r.c[k] = a.c[k] - b.c[k];
    return r;
  }
  friend Jet operator*(double s, const Jet& a) {
    Jet r;
    for (int k = 0; k < 6; ++k) r.c[k] = s * a.c[k];
    return r;
  }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    for (int k = 0; k < 6; ++k)
      for (int j = 0; j <= k; ++j) r.c[k] += a.c[j] * b.c[k - j];
    return r;
  }
  // 1/a, requires a.c[0] != 0.
  Jet reciprocal() const {
    Jet r;
    r.c[0] = 1.0 / c[0];
    for (int k = 1; k < 6; ++k) {
      double acc = 0.0;
      for (int j = 1; j <= k; ++j) acc += c[j] * r.c[k - j];
      r.c[k] = -acc / c[0];
    }
    return r;
  }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * b.reciprocal(); }

  // exp(a) by the power-series recursion k b_k = sum j a_j b_{k-j}.
  Jet exp() const {
    Jet r;
    r.c[0] = std::exp(c[0]);
    for (int k = 1; k < 6; ++k) {
      double acc = 0.0;
      for (int j = 1; j <= k; ++j) acc += double(j) * c[j] * r.c[k - j];
      r.c[k] = acc / double(k);
    }
    return r;
  }
};

}  // namespace swbreak::detail

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "swbreak/grid.hpp"

namespace swbreak {

// Bottom profile b(x) with analytic derivatives up to order 6.
//
// Families:
//   flat       b == 0
//   sine       b = A sin(2*pi*mode*x/L + phase), period L
//   gaussian   b = A exp(-(x-c)^2/(2 width^2)), periodized over [x0, x0+L)
//   tabulated  trigonometric interpolant of samples on a uniform grid
//
// All derivative evaluators are closed-form (or term-wise exact for the
// trig series); nothing is finite-differenced inside the library.
class Topography {
 public:
  Topography() = default;  // flat

  static Topography flat();
  static Topography sine(double amplitude, int mode, double phase, double length);
  static Topography gaussian(double amplitude, double center, double width, double length);
  // Trig interpolation of samples given at grid nodes; the Nyquist mode is
  // dropped, so inputs are assumed band-limited below it.
  static Topography tabulated(const std::vector<double>& samples, const Grid& grid);

  // d^k b / dx^k at x, k = 0..6.
  double deriv(double x, int k) const;
  double operator()(double x) const { return deriv(x, 0); }

  bool is_flat() const { return kind_ == Kind::flat; }
  const char* family() const;
  double length() const { return length_; }  // period; 0 for flat (any period)

  // deriv(k) evaluated at every node of g.
  std::vector<double> sample_deriv(const Grid& g, int k) const;

  // Sampled sup norm of |d^k b| over one period.
  double max_abs_deriv(int k, std::size_t samples = 8192) const;

 private:
  enum class Kind { flat, sine, gaussian, tabulated };

  Kind kind_ = Kind::flat;
  double amplitude_ = 0.0;
  double center_ = 0.0;
  double width_ = 0.0;
  double phase_ = 0.0;
  double length_ = 0.0;
  int mode_ = 0;
  // tabulated: one-sided trig coefficients relative to x0_.
  double x0_ = 0.0;
  std::vector<double> cos_coef_, sin_coef_;
};

}  // namespace swbreak

#include "swbreak/topography.hpp"

#include <cmath>

#include "fft_util.hpp"
#include "swbreak/errors.hpp"

namespace swbreak {

namespace {
constexpr int kMaxOrder = 6;
constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_order(int k) {
  if (k < 0 || k > kMaxOrder) throw DomainError("topography derivative order must be in 0..6");
}
}  // namespace

Topography Topography::flat() { return Topography{}; }

Topography Topography::sine(double amplitude, int mode, double phase, double length) {
  if (!(length > 0.0)) throw DomainError("sine topography needs a positive period");
  if (mode < 1) throw DomainError("sine topography needs mode >= 1");
  Topography t;
  t.kind_ = Kind::sine;
  t.amplitude_ = amplitude;
  t.mode_ = mode;
  t.phase_ = phase;
  t.length_ = length;
  return t;
}

Topography Topography::gaussian(double amplitude, double center, double width, double length) {
  if (!(length > 0.0)) throw DomainError("gaussian topography needs a positive period");
  if (!(width > 0.0)) throw DomainError("gaussian topography needs a positive width");
  // Periodization truncates to |image| <= 4; keep the tail under rounding.
  if (width > length / 6.0)
    throw ConstructionError("gaussian topography width must not exceed length/6");
  Topography t;
  t.kind_ = Kind::gaussian;
  t.amplitude_ = amplitude;
  t.center_ = center;
  t.width_ = width;
  t.length_ = length;
  return t;
}

Topography Topography::tabulated(const std::vector<double>& samples, const Grid& grid) {
  if (samples.size() != grid.n) throw DomainError("tabulated topography: sample count != grid size");
  Topography t;
  t.kind_ = Kind::tabulated;
  t.length_ = grid.length;
  t.x0_ = grid.x0;
  const auto spec = detail::rfft(samples);
  const double inv_n = 1.0 / double(grid.n);
  // One-sided series b(x) = a0 + sum_m [a_m cos + b_m sin](2 pi m (x-x0)/L);
  // the Nyquist bin is dropped (band-limited input assumed).
  const std::size_t modes = grid.n / 2;
  t.cos_coef_.resize(modes);
  t.sin_coef_.resize(modes);
  t.cos_coef_[0] = spec[0].real() * inv_n;
  t.sin_coef_[0] = 0.0;
  for (std::size_t m = 1; m < modes; ++m) {
    t.cos_coef_[m] = 2.0 * spec[m].real() * inv_n;
    t.sin_coef_[m] = -2.0 * spec[m].imag() * inv_n;
  }
  return t;
}

const char* Topography::family() const {
  switch (kind_) {
    case Kind::flat: return "flat";
    case Kind::sine: return "sine";
    case Kind::gaussian: return "gaussian";
    case Kind::tabulated: return "tabulated";
  }
  return "flat";
}

double Topography::deriv(double x, int k) const {
  check_order(k);
  if (!std::isfinite(x)) throw DomainError("topography evaluated at non-finite x");
  switch (kind_) {
    case Kind::flat:
      return 0.0;
    case Kind::sine: {
      // d^k sin(t) = sin(t + k pi/2)
      const double omega = kTwoPi * double(mode_) / length_;
      return amplitude_ * std::pow(omega, k) *
             std::sin(omega * x + phase_ + 0.5 * M_PI * double(k));
    }
    case Kind::gaussian: {
      // d^k exp(-t^2/2) = (-1)^k He_k(t) exp(-t^2/2), summed over images.
      double acc = 0.0;
      for (int img = -4; img <= 4; ++img) {
        const double t = (x - center_ + double(img) * length_) / width_;
        double he_prev = 1.0, he = t;  // He_0, He_1
        if (k == 0) {
          acc += std::exp(-0.5 * t * t);
          continue;
        }
        for (int j = 1; j < k; ++j) {
          const double next = t * he - double(j) * he_prev;
          he_prev = he;
          he = next;
        }
        acc += he * std::exp(-0.5 * t * t);
      }
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      return amplitude_ * sign * std::pow(width_, -k) * acc;
    }
    case Kind::tabulated: {
      double acc = 0.0;
      const double shift = 0.5 * M_PI * double(k);
      for (std::size_t m = (k == 0 ? 0 : 1); m < cos_coef_.size(); ++m) {
        const double omega = kTwoPi * double(m) / length_;
        const double th = omega * (x - x0_) + shift;
        acc += std::pow(omega, k) * (cos_coef_[m] * std::cos(th) + sin_coef_[m] * std::sin(th));
      }
      return acc;
    }
  }
  return 0.0;
}

std::vector<double> Topography::sample_deriv(const Grid& g, int k) const {
  check_order(k);
  std::vector<double> out(g.n);
  if (kind_ == Kind::flat) return out;
  for (std::size_t i = 0; i < g.n; ++i) out[i] = deriv(g.x(i), k);
  return out;
}

double Topography::max_abs_deriv(int k, std::size_t samples) const {
  check_order(k);
  if (kind_ == Kind::flat) return 0.0;
  const double period = length_;
  double worst = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = x0_ + period * double(i) / double(samples);
    worst = std::max(worst, std::abs(deriv(x, k)));
  }
  return worst;
}

}  // namespace swbreak

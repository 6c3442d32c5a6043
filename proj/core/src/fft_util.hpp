#pragma once

#include <complex>
#include <vector>

namespace swbreak::detail {

// Forward real-to-complex FFT (unnormalized, FFTW sign convention):
//   out[m] = sum_j in[j] exp(-2 pi i m j / n),  m = 0..n/2.
// Plan creation is serialized internally, so this is safe to call from
// concurrent sweep workers.
std::vector<std::complex<double>> rfft(const std::vector<double>& in);

}  // namespace swbreak::detail

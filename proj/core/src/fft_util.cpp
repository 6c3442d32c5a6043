#include "fft_util.hpp"

#include <fftw3.h>

#include <mutex>

#include "swbreak/errors.hpp"

namespace swbreak::detail {

namespace {
// FFTW planning is not thread-safe; execution via fftw_execute_dft_r2c on
// private buffers is.  We keep the whole (plan, execute, destroy) sequence
// under one lock: the transforms used here are small and infrequent.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

std::vector<std::complex<double>> rfft(const std::vector<double>& in) {
  if (in.size() < 2) throw DomainError("rfft needs at least 2 samples");
  const std::size_t n = in.size();
  std::vector<double> buf(in);
  std::vector<std::complex<double>> out(n / 2 + 1);
  std::lock_guard<std::mutex> lock(fftw_mutex());
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), buf.data(),
                                        reinterpret_cast<fftw_complex*>(out.data()),
                                        FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
  if (!plan) throw DomainError("rfft planning failed");
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  return out;
}

}  // namespace swbreak::detail

#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <memory>
#include <mutex>

namespace gpfourier::detail {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};

}  // namespace

std::vector<std::complex<double>> fft(std::span<const std::complex<double>> x, int sign) {
  const int n = static_cast<int>(x.size());
  std::vector<std::complex<double>> out(x.size());
  if (n == 0) return out;

  std::unique_ptr<fftw_complex, FftwFree> buf(fftw_alloc_complex(static_cast<std::size_t>(n)));
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(n, buf.get(), buf.get(), sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                            FFTW_ESTIMATE);
  }
  std::copy(x.begin(), x.end(), reinterpret_cast<std::complex<double>*>(buf.get()));
  fftw_execute(plan);
  const auto* res = reinterpret_cast<const std::complex<double>*>(buf.get());
  std::copy(res, res + n, out.begin());
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

}  // namespace gpfourier::detail

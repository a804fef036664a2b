#include "leakaudit/fft.hpp"

#include "leakaudit/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace leakaudit::fft {

namespace {

enum class PlanKind { r2c, c2r, c2c_backward };

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

template <class T>
std::unique_ptr<T[], FftwFree> allocate(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
  if (p == nullptr) throw std::bad_alloc();
  return std::unique_ptr<T[], FftwFree>(p);
}

class PlanCache {
public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(PlanKind kind, std::size_t n) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(kind, n);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const int size = static_cast<int>(n);
    fftw_plan plan = nullptr;
    switch (kind) {
      case PlanKind::r2c: {
        auto in = allocate<double>(n);
        auto out = allocate<fftw_complex>(n / 2 + 1);
        plan = fftw_plan_dft_r2c_1d(size, in.get(), out.get(), FFTW_ESTIMATE);
        break;
      }
      case PlanKind::c2r: {
        auto in = allocate<fftw_complex>(n / 2 + 1);
        auto out = allocate<double>(n);
        plan = fftw_plan_dft_c2r_1d(size, in.get(), out.get(), FFTW_ESTIMATE);
        break;
      }
      case PlanKind::c2c_backward: {
        auto in = allocate<fftw_complex>(n);
        auto out = allocate<fftw_complex>(n);
        plan = fftw_plan_dft_1d(size, in.get(), out.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
        break;
      }
    }
    if (plan == nullptr) throw NumericalError("fft: plan creation failed");
    plans_.emplace(key, plan);
    return plan;
  }

private:
  std::mutex mutex_;
  std::map<std::tuple<PlanKind, std::size_t>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

} // namespace

std::size_t next_fast_size(std::size_t n) {
  if (n <= 1) return 1;
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2u, 3u, 5u, 7u}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

std::vector<Complex> forward_real(std::span<const double> x, std::size_t n_fft) {
  if (n_fft == 0 || x.size() > n_fft) throw ParameterError("fft: n_fft must be >= input length");
  fftw_plan plan = cache().get(PlanKind::r2c, n_fft);
  auto in = allocate<double>(n_fft);
  auto out = allocate<fftw_complex>(n_fft / 2 + 1);
  std::copy(x.begin(), x.end(), in.get());
  std::fill(in.get() + x.size(), in.get() + n_fft, 0.0);
  fftw_execute_dft_r2c(plan, in.get(), out.get());
  std::vector<Complex> result(n_fft / 2 + 1);
  for (std::size_t i = 0; i < result.size(); ++i) result[i] = {out[i][0], out[i][1]};
  return result;
}

std::vector<double> inverse_real(std::span<const Complex> half_spectrum, std::size_t n_fft) {
  if (half_spectrum.size() != n_fft / 2 + 1) throw ParameterError("fft: half spectrum size mismatch");
  fftw_plan plan = cache().get(PlanKind::c2r, n_fft);
  auto in = allocate<fftw_complex>(half_spectrum.size());
  auto out = allocate<double>(n_fft);
  std::memcpy(in.get(), half_spectrum.data(), half_spectrum.size() * sizeof(Complex));
  fftw_execute_dft_c2r(plan, in.get(), out.get());
  const double scale = 1.0 / static_cast<double>(n_fft);
  std::vector<double> result(out.get(), out.get() + n_fft);
  for (double& v : result) v *= scale;
  return result;
}

std::vector<Complex> inverse_complex(std::span<const Complex> spectrum) {
  const std::size_t n = spectrum.size();
  if (n == 0) return {};
  fftw_plan plan = cache().get(PlanKind::c2c_backward, n);
  auto in = allocate<fftw_complex>(n);
  auto out = allocate<fftw_complex>(n);
  std::memcpy(in.get(), spectrum.data(), n * sizeof(Complex));
  fftw_execute_dft(plan, in.get(), out.get());
  std::vector<Complex> result(n);
  for (std::size_t i = 0; i < n; ++i) result[i] = {out[i][0], out[i][1]};
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : result) v *= scale;
  return result;
}

} // namespace leakaudit::fft

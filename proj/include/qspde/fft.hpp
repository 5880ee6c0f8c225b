#pragma once

// Thin wrapper over FFTW3 complex-to-complex transforms.  Plans are created
// once per (dim, n, direction) under a mutex with FFTW_ESTIMATE|FFTW_UNALIGNED
// so they are deterministic, reusable on any buffer, and cheap to build;
// fftw_execute_dft itself is thread-safe.

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include <fftw3.h>

namespace qspde::detail {

class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  // In-place c2c transform of one component; sign is FFTW_FORWARD or
  // FFTW_BACKWARD.  No normalization is applied here.
  void execute(int dim, int n, int sign, std::complex<double>* data) {
    fftw_plan plan = get_plan(dim, n, sign);
    auto* buf = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan, buf, buf);
  }

  FftPlanCache(const FftPlanCache&) = delete;
  FftPlanCache& operator=(const FftPlanCache&) = delete;

 private:
  FftPlanCache() = default;
  ~FftPlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get_plan(int dim, int n, int sign) {
    const auto key = std::make_tuple(dim, n, sign);
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    // Dummy buffer only shapes the plan; FFTW_UNALIGNED keeps it valid for
    // arbitrary execute-time buffers.
    std::vector<std::complex<double>> scratch(static_cast<std::size_t>(dim == 2 ? n * n : n * n * n));
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = dim == 2 ? fftw_plan_dft_2d(n, n, buf, buf, sign, flags)
                              : fftw_plan_dft_3d(n, n, n, buf, buf, sign, flags);
    plans_.emplace(key, plan);
    return plan;
  }

  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

}  // namespace qspde::detail

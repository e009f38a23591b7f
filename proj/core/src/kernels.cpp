#include "csca/kernels.hpp"

#include <algorithm>
#include <atomic>

#ifdef CSCA_HAVE_OPENMP
#include <omp.h>
#endif

namespace csca::kernels {

namespace {
std::atomic<int> g_threads{1};
}  // namespace

void set_num_threads(int n) { g_threads = std::max(1, n); }
int num_threads() { return g_threads.load(); }

template <typename T>
void gemm_nn(std::size_t m, std::size_t k, std::size_t p, std::span<const T> a,
             std::span<const T> b, std::span<T> c) {
  const T* ap = a.data();
  const T* bp = b.data();
  T* cp = c.data();
  const auto rows = static_cast<std::ptrdiff_t>(m);
#ifdef CSCA_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(num_threads()) if (num_threads() > 1)
#endif
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    T* crow = cp + i * p;
    const T* arow = ap + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T av = arow[kk];
      const T* brow = bp + kk * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void gemm_nt(std::size_t m, std::size_t k, std::size_t p, std::span<const T> a,
             std::span<const T> b, std::span<T> c) {
  const T* ap = a.data();
  const T* bp = b.data();
  T* cp = c.data();
  const auto rows = static_cast<std::ptrdiff_t>(m);
#ifdef CSCA_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(num_threads()) if (num_threads() > 1)
#endif
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const T* arow = ap + i * k;
    T* crow = cp + i * p;
    for (std::size_t j = 0; j < p; ++j) {
      const T* brow = bp + j * k;
      T acc = T(0);
      for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      crow[j] += acc;
    }
  }
}

template <typename T>
void gemm_tn(std::size_t m, std::size_t k, std::size_t p, std::span<const T> a,
             std::span<const T> b, std::span<T> c) {
  const T* ap = a.data();
  const T* bp = b.data();
  T* cp = c.data();
  const auto rows = static_cast<std::ptrdiff_t>(k);
#ifdef CSCA_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(num_threads()) if (num_threads() > 1)
#endif
  for (std::ptrdiff_t kk = 0; kk < rows; ++kk) {
    T* crow = cp + kk * p;
    for (std::size_t i = 0; i < m; ++i) {
      const T av = ap[i * k + kk];
      const T* brow = bp + i * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += av * brow[j];
    }
  }
}

template void gemm_nn<float>(std::size_t, std::size_t, std::size_t, std::span<const float>,
                             std::span<const float>, std::span<float>);
template void gemm_nn<double>(std::size_t, std::size_t, std::size_t, std::span<const double>,
                              std::span<const double>, std::span<double>);
template void gemm_nt<float>(std::size_t, std::size_t, std::size_t, std::span<const float>,
                             std::span<const float>, std::span<float>);
template void gemm_nt<double>(std::size_t, std::size_t, std::size_t, std::span<const double>,
                              std::span<const double>, std::span<double>);
template void gemm_tn<float>(std::size_t, std::size_t, std::size_t, std::span<const float>,
                             std::span<const float>, std::span<float>);
template void gemm_tn<double>(std::size_t, std::size_t, std::size_t, std::span<const double>,
                              std::span<const double>, std::span<double>);

}  // namespace csca::kernels

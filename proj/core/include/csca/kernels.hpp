#pragma once

#include <cstddef>
#include <span>

namespace csca::kernels {

// Row-parallel degree used by gemm. Each output row is produced by a single
// thread with a fixed summation order, so results do not depend on it.
void set_num_threads(int n);
int num_threads();

// c[M×P] += a[M×K] · b[K×P]
template <typename T>
void gemm_nn(std::size_t m, std::size_t k, std::size_t p, std::span<const T> a,
             std::span<const T> b, std::span<T> c);

// c[M×P] += a[M×K] · b[P×K]ᵀ
template <typename T>
void gemm_nt(std::size_t m, std::size_t k, std::size_t p, std::span<const T> a,
             std::span<const T> b, std::span<T> c);

// c[K×P] += a[M×K]ᵀ · b[M×P]
template <typename T>
void gemm_tn(std::size_t m, std::size_t k, std::size_t p, std::span<const T> a,
             std::span<const T> b, std::span<T> c);

}  // namespace csca::kernels

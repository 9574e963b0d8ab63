#pragma once

#include <cstddef>
#include <string_view>

// Dense double-precision inner loops used by the autodiff tensor.
// A scalar reference is always present; vector variants are compiled per ISA
// and picked at runtime. All matrices are row-major and contiguous.
namespace prefnet::nn::kernels {

struct KernelTable {
  const char* name;
  // C[m x n] += A[m x k] · B[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
  // C[m x n] += A^T · B with A stored [k x m]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
  // C[m x n] += A · B^T with B stored [n x k]
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
  // y += alpha · x
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
  double (*dot)(std::size_t n, const double* x, const double* y);
  // out += x ⊙ y
  void (*mul_acc)(std::size_t n, const double* x, const double* y, double* out);
};

const KernelTable& scalar_kernels();
// nullptr when the variant was not compiled or the CPU lacks the ISA.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// Selected once: PREFNET_SIMD=scalar|avx2|neon forces a table, otherwise the
// widest supported variant wins.
const KernelTable& active();
// Test hook; returns the previously active table.
const KernelTable& set_active(const KernelTable& table);

}  // namespace prefnet::nn::kernels

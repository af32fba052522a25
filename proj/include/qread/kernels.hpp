#pragma once

// Dense matrix kernels behind network training and inference. Each kernel
// has an OpenMP version and a serial reference; both call the same
// per-row helpers, so outputs are bit-identical regardless of thread
// count. The benchmark tool compares the two.
//
// All matrices are row-major, double precision.

#include <cstddef>

namespace qread::kernels {

// C[n x m] = A[n x k] * B[m x k]^T   (dot of row i of A with row j of B)
void matmul_nt(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m);
void matmul_nt_serial(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m);

// C[m x k] = A[n x m]^T * B[n x k]   (gradient accumulation: C[j][:] = sum_i A[i][j] * B[i][:])
void matmul_tn(const double* a, const double* b, double* c, std::size_t n, std::size_t m, std::size_t k);
void matmul_tn_serial(const double* a, const double* b, double* c, std::size_t n, std::size_t m, std::size_t k);

// C[n x k] = A[n x m] * B[m x k]
void matmul_nn(const double* a, const double* b, double* c, std::size_t n, std::size_t m, std::size_t k);
void matmul_nn_serial(const double* a, const double* b, double* c, std::size_t n, std::size_t m, std::size_t k);

// out[j] = sum_i A[i][j]
void col_sums(const double* a, double* out, std::size_t n, std::size_t m);
void col_sums_serial(const double* a, double* out, std::size_t n, std::size_t m);

// Branch-free four-lane dot product with a fixed combine order.
double dot(const double* x, const double* y, std::size_t n);

}  // namespace qread::kernels

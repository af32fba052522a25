#include "qread/kernels.hpp"

#include <algorithm>
#include <cstring>

namespace qread::kernels {

namespace {

#if defined(__GNUC__)
#define QREAD_NOINLINE __attribute__((noinline))
#else
#define QREAD_NOINLINE
#endif

// Helpers are noinline so the serial and OpenMP drivers share one compiled
// body; equality between the two paths is then structural, not a property
// of the optimizer.

QREAD_NOINLINE double dot4(const double* x, const double* y, std::size_t n) {
    double d0 = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        d0 += x[i] * y[i];
        d1 += x[i + 1] * y[i + 1];
        d2 += x[i + 2] * y[i + 2];
        d3 += x[i + 3] * y[i + 3];
    }
    for (; i < n; ++i) d0 += x[i] * y[i];
    return (d0 + d1) + (d2 + d3);
}

// One output row of matmul_nt: c_row[j] = <a_row, b_row_j>.
QREAD_NOINLINE void nt_row(const double* a_row, const double* b, double* c_row,
                           std::size_t k, std::size_t m) {
    std::size_t j = 0;
    for (; j + 2 <= m; j += 2) {
        const double* b0 = b + j * k;
        const double* b1 = b0 + k;
        double d00 = 0.0, d01 = 0.0, d10 = 0.0, d11 = 0.0;
        std::size_t l = 0;
        for (; l + 2 <= k; l += 2) {
            double a0 = a_row[l];
            double a1 = a_row[l + 1];
            d00 += a0 * b0[l];
            d01 += a1 * b0[l + 1];
            d10 += a0 * b1[l];
            d11 += a1 * b1[l + 1];
        }
        for (; l < k; ++l) {
            d00 += a_row[l] * b0[l];
            d10 += a_row[l] * b1[l];
        }
        c_row[j] = d00 + d01;
        c_row[j + 1] = d10 + d11;
    }
    for (; j < m; ++j) c_row[j] = dot4(a_row, b + j * k, k);
}

// One output row of matmul_tn: c_row_j[:] = sum_i a[i][j] * b[i][:].
QREAD_NOINLINE void tn_row(const double* a, const double* b, double* c_row,
                           std::size_t n, std::size_t m, std::size_t k, std::size_t j) {
    std::memset(c_row, 0, k * sizeof(double));
    for (std::size_t i = 0; i < n; ++i) {
        double coef = a[i * m + j];
        const double* b_row = b + i * k;
        for (std::size_t l = 0; l < k; ++l) c_row[l] += coef * b_row[l];
    }
}

// One output row of matmul_nn: c_row[:] = sum_j a_row[j] * b_row_j[:].
QREAD_NOINLINE void nn_row(const double* a_row, const double* b, double* c_row,
                           std::size_t m, std::size_t k) {
    std::memset(c_row, 0, k * sizeof(double));
    for (std::size_t j = 0; j < m; ++j) {
        double coef = a_row[j];
        const double* b_row = b + j * k;
        for (std::size_t l = 0; l < k; ++l) c_row[l] += coef * b_row[l];
    }
}

QREAD_NOINLINE void col_sum_one(const double* a, double* out, std::size_t n, std::size_t m,
                                std::size_t j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i * m + j];
    out[j] = s;
}

}  // namespace

double dot(const double* x, const double* y, std::size_t n) { return dot4(x, y, n); }

void matmul_nt(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        nt_row(a + i * k, b, c + i * m, k, m);
}

void matmul_nt_serial(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                      std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) nt_row(a + i * k, b, c + i * m, k, m);
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t n, std::size_t m,
               std::size_t k) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(m); ++j)
        tn_row(a, b, c + j * k, n, m, k, static_cast<std::size_t>(j));
}

void matmul_tn_serial(const double* a, const double* b, double* c, std::size_t n, std::size_t m,
                      std::size_t k) {
    for (std::size_t j = 0; j < m; ++j) tn_row(a, b, c + j * k, n, m, k, j);
}

void matmul_nn(const double* a, const double* b, double* c, std::size_t n, std::size_t m,
               std::size_t k) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        nn_row(a + i * m, b, c + i * k, m, k);
}

void matmul_nn_serial(const double* a, const double* b, double* c, std::size_t n, std::size_t m,
                      std::size_t k) {
    for (std::size_t i = 0; i < n; ++i) nn_row(a + i * m, b, c + i * k, m, k);
}

void col_sums(const double* a, double* out, std::size_t n, std::size_t m) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(m); ++j)
        col_sum_one(a, out, n, m, static_cast<std::size_t>(j));
}

void col_sums_serial(const double* a, double* out, std::size_t n, std::size_t m) {
    for (std::size_t j = 0; j < m; ++j) col_sum_one(a, out, n, m, j);
}

}  // namespace qread::kernels

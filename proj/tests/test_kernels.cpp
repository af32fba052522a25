#include <cstring>
#include <vector>

#include <doctest.h>

#include "qread/kernels.hpp"
#include "qread/parallel.hpp"
#include "qread/rng.hpp"

using namespace qread;

namespace {

std::vector<double> random_matrix(std::size_t n, std::uint64_t seed) {
    std::vector<double> m(n);
    Rng rng(seed);
    for (auto& v : m) v = rng.uniform(-2.0, 2.0);
    return m;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("matmul_nt matches a naive reference") {
    const std::size_t n = 7, k = 13, m = 5;
    auto a = random_matrix(n * k, 1);
    auto b = random_matrix(m * k, 2);
    std::vector<double> c(n * m);
    kernels::matmul_nt(a.data(), b.data(), c.data(), n, k, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double ref = 0.0;
            for (std::size_t l = 0; l < k; ++l) ref += a[i * k + l] * b[j * k + l];
            CHECK(c[i * m + j] == doctest::Approx(ref).epsilon(1e-12));
        }
}

TEST_CASE("matmul_tn matches a naive reference") {
    const std::size_t n = 9, m = 4, k = 6;
    auto a = random_matrix(n * m, 3);
    auto b = random_matrix(n * k, 4);
    std::vector<double> c(m * k);
    kernels::matmul_tn(a.data(), b.data(), c.data(), n, m, k);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t l = 0; l < k; ++l) {
            double ref = 0.0;
            for (std::size_t i = 0; i < n; ++i) ref += a[i * m + j] * b[i * k + l];
            CHECK(c[j * k + l] == doctest::Approx(ref).epsilon(1e-12));
        }
}

TEST_CASE("matmul_nn matches a naive reference") {
    const std::size_t n = 5, m = 8, k = 3;
    auto a = random_matrix(n * m, 5);
    auto b = random_matrix(m * k, 6);
    std::vector<double> c(n * k);
    kernels::matmul_nn(a.data(), b.data(), c.data(), n, m, k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < k; ++l) {
            double ref = 0.0;
            for (std::size_t j = 0; j < m; ++j) ref += a[i * m + j] * b[j * k + l];
            CHECK(c[i * k + l] == doctest::Approx(ref).epsilon(1e-12));
        }
}

TEST_CASE("OpenMP kernels are bit-identical to the serial references") {
    const std::size_t n = 33, k = 129, m = 17;
    auto a = random_matrix(n * k, 7);
    auto b = random_matrix(m * k, 8);
    auto bt = random_matrix(n * m, 9);
    auto bn = random_matrix(m * k, 10);

    std::vector<double> c_ref(n * m), c_par(n * m);
    kernels::matmul_nt_serial(a.data(), b.data(), c_ref.data(), n, k, m);

    std::vector<double> tn_ref(m * k), tn_par(m * k);
    kernels::matmul_tn_serial(bt.data(), a.data(), tn_ref.data(), n, m, k);

    std::vector<double> nn_ref(n * k), nn_par(n * k);
    kernels::matmul_nn_serial(bt.data(), bn.data(), nn_ref.data(), n, m, k);

    std::vector<double> cs_ref(m), cs_par(m);
    kernels::col_sums_serial(bt.data(), cs_ref.data(), n, m);

    for (int threads : {1, 2, max_threads()}) {
        ThreadLimit limit(threads);
        kernels::matmul_nt(a.data(), b.data(), c_par.data(), n, k, m);
        kernels::matmul_tn(bt.data(), a.data(), tn_par.data(), n, m, k);
        kernels::matmul_nn(bt.data(), bn.data(), nn_par.data(), n, m, k);
        kernels::col_sums(bt.data(), cs_par.data(), n, m);
        CAPTURE(threads);
        CHECK(bitwise_equal(c_ref, c_par));
        CHECK(bitwise_equal(tn_ref, tn_par));
        CHECK(bitwise_equal(nn_ref, nn_par));
        CHECK(bitwise_equal(cs_ref, cs_par));
    }
}

TEST_CASE("dot handles short and unaligned lengths") {
    auto x = random_matrix(11, 11);
    auto y = random_matrix(11, 12);
    for (std::size_t len : {0u, 1u, 3u, 4u, 7u, 11u}) {
        double ref = 0.0;
        for (std::size_t i = 0; i < len; ++i) ref += x[i] * y[i];
        CHECK(kernels::dot(x.data(), y.data(), len) == doctest::Approx(ref).epsilon(1e-13));
    }
}

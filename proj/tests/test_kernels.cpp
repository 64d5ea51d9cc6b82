#include <doctest.h>

#include "epitwin/kern/kernels.hpp"
#include "epitwin/util/rng.hpp"

#include <cmath>
#include <cstring>
#include <vector>

using namespace epitwin;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v)
        x = rng.uniform(-10.0, 10.0);
    return v;
}

struct BackendGuard {
    kern::Backend saved = kern::backend();
    ~BackendGuard() { kern::set_backend(saved); }
};

} // namespace

TEST_CASE("reduce_sum is bit-identical across backends and sizes")
{
    BackendGuard guard;
    // Sizes straddling the chunk and grain boundaries.
    for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{1023}, std::size_t{1024},
                          std::size_t{1025}, std::size_t{20000}, std::size_t{100001}}) {
        auto v = random_vec(n, 42 + n);
        kern::set_backend(kern::Backend::serial);
        double s_serial = kern::reduce_sum(v.data(), n);
        kern::set_backend(kern::Backend::openmp);
        double s_omp = kern::reduce_sum(v.data(), n);
        CHECK(std::memcmp(&s_serial, &s_omp, sizeof(double)) == 0);
    }
}

TEST_CASE("map kernels agree exactly between serial and openmp")
{
    BackendGuard guard;
    const std::size_t n = 50000; // above the parallel grain
    auto a = random_vec(n, 1);
    auto b = random_vec(n, 2);
    std::vector<double> out_serial(n), out_omp(n);
    auto id = [](std::size_t i) { return i; };

    kern::set_backend(kern::Backend::serial);
    kern::map2(a.data(), b.data(), out_serial.data(), n,
               [](double x, double y) { return x * y + 0.5 * y; }, id, id);
    kern::set_backend(kern::Backend::openmp);
    kern::map2(a.data(), b.data(), out_omp.data(), n,
               [](double x, double y) { return x * y + 0.5 * y; }, id, id);
    CHECK(std::memcmp(out_serial.data(), out_omp.data(), n * sizeof(double)) == 0);

    kern::set_backend(kern::Backend::serial);
    kern::map1(a.data(), out_serial.data(), n, [](double x) { return std::tanh(x); });
    kern::set_backend(kern::Backend::openmp);
    kern::map1(a.data(), out_omp.data(), n, [](double x) { return std::tanh(x); });
    CHECK(std::memcmp(out_serial.data(), out_omp.data(), n * sizeof(double)) == 0);
}

TEST_CASE("matmul variants match a naive reference and are backend-stable")
{
    BackendGuard guard;
    const std::size_t m = 37, k = 19, n = 23;
    auto a = random_vec(m * k, 7);
    auto b = random_vec(k * n, 8);

    std::vector<double> ref(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0;
            for (std::size_t p = 0; p < k; ++p)
                s += a[i * k + p] * b[p * n + j];
            ref[i * n + j] = s;
        }

    std::vector<double> c(m * n);
    for (auto backend : {kern::Backend::serial, kern::Backend::openmp}) {
        kern::set_backend(backend);
        kern::matmul_nn(a.data(), b.data(), c.data(), m, k, n);
        CHECK(std::memcmp(c.data(), ref.data(), c.size() * sizeof(double)) == 0);
    }

    // a^T * (a * b) has shape (k x n); cross-check transpose kernels
    // against explicitly materialised transposes.
    std::vector<double> at(k * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p)
            at[p * m + i] = a[i * k + p];
    std::vector<double> want(k * n), got(k * n);
    kern::matmul_nn(at.data(), ref.data(), want.data(), k, m, n);
    kern::matmul_tn(a.data(), ref.data(), got.data(), m, k, n);
    CHECK(std::memcmp(want.data(), got.data(), want.size() * sizeof(double)) == 0);

    // ref * b^T has shape (m x k).
    std::vector<double> bt(n * k);
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j)
            bt[j * k + p] = b[p * n + j];
    std::vector<double> want2(m * k), got2(m * k);
    kern::matmul_nn(ref.data(), bt.data(), want2.data(), m, n, k);
    kern::matmul_nt(ref.data(), b.data(), got2.data(), m, n, k);
    CHECK(std::memcmp(want2.data(), got2.data(), want2.size() * sizeof(double)) == 0);
}

TEST_CASE("add_inplace accumulates identically on both backends")
{
    BackendGuard guard;
    const std::size_t n = 40000;
    auto base = random_vec(n, 11);
    auto g = random_vec(n, 12);

    auto acc1 = base;
    kern::set_backend(kern::Backend::serial);
    kern::add_inplace(acc1.data(), g.data(), n);

    auto acc2 = base;
    kern::set_backend(kern::Backend::openmp);
    kern::add_inplace(acc2.data(), g.data(), n);

    CHECK(std::memcmp(acc1.data(), acc2.data(), n * sizeof(double)) == 0);
}

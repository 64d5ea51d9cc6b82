#include "epitwin/kern/kernels.hpp"

#include <atomic>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace epitwin::kern {

namespace {

std::atomic<Backend> g_backend{
#ifdef _OPENMP
    Backend::openmp
#else
    Backend::serial
#endif
};

} // namespace

Backend backend()
{
    return g_backend.load(std::memory_order_relaxed);
}

void set_backend(Backend b)
{
    g_backend.store(b, std::memory_order_relaxed);
}

bool openmp_compiled()
{
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

int max_threads()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

bool detail::use_parallel(std::size_t n)
{
#ifdef _OPENMP
    // A nested team inside an existing parallel region would serialise
    // anyway; skip the pragma overhead there.
    return backend() == Backend::openmp && n >= parallel_grain && omp_get_level() == 0;
#else
    (void)n;
    return false;
#endif
}

void add_inplace(double* acc, const double* g, std::size_t n)
{
    if (detail::use_parallel(n)) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
            acc[i] += g[i];
    } else {
        for (std::size_t i = 0; i < n; ++i)
            acc[i] += g[i];
    }
}

namespace {

double sum_range(const double* x, std::size_t lo, std::size_t hi)
{
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i)
        s += x[i];
    return s;
}

} // namespace

double reduce_sum(const double* x, std::size_t n)
{
    if (n == 0)
        return 0.0;
    const std::size_t nchunks = (n + reduce_chunk - 1) / reduce_chunk;
    if (nchunks == 1)
        return sum_range(x, 0, n);

    std::vector<double> partial(nchunks);
    auto chunk_sum = [&](std::size_t c) {
        const std::size_t lo = c * reduce_chunk;
        const std::size_t hi = lo + reduce_chunk < n ? lo + reduce_chunk : n;
        partial[c] = sum_range(x, lo, hi);
    };
    if (detail::use_parallel(n)) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(nchunks); ++c)
            chunk_sum(static_cast<std::size_t>(c));
    } else {
        for (std::size_t c = 0; c < nchunks; ++c)
            chunk_sum(c);
    }
    // Fold in chunk order regardless of how partials were produced.
    double s = 0.0;
    for (std::size_t c = 0; c < nchunks; ++c)
        s += partial[c];
    return s;
}

void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n)
{
    auto row = [&](std::size_t i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p)
                s += a[i * k + p] * b[p * n + j];
            c[i * n + j] = s;
        }
    };
    if (detail::use_parallel(m * n * k)) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i)
            row(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < m; ++i)
            row(i);
    }
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n)
{
    auto row = [&](std::size_t i) { // row of c, i in [0, k)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < m; ++p)
                s += a[p * k + i] * b[p * n + j];
            c[i * n + j] = s;
        }
    };
    if (detail::use_parallel(m * n * k)) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(k); ++i)
            row(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < k; ++i)
            row(i);
    }
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t n, std::size_t k)
{
    auto row = [&](std::size_t i) { // row of c, i in [0, m)
        for (std::size_t j = 0; j < k; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < n; ++p)
                s += a[i * n + p] * b[j * n + p];
            c[i * k + j] = s;
        }
    };
    if (detail::use_parallel(m * n * k)) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i)
            row(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < m; ++i)
            row(i);
    }
}

} // namespace epitwin::kern

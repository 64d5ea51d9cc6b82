#pragma once

#include <cstddef>

namespace epitwin::kern {

/// Every kernel exists in two variants: a plain serial loop (the
/// reference) and an OpenMP one. Both produce bit-identical results:
/// elementwise kernels assign disjoint outputs, and reductions use a
/// fixed chunk decomposition combined in chunk order, independent of
/// the thread count. Tests compare the two variants exactly.
enum class Backend { serial, openmp };

Backend backend();
void set_backend(Backend b);
bool openmp_compiled();
int max_threads();

/// Arrays smaller than this run the serial loop even on the openmp
/// backend; spawning a team costs more than the work.
inline constexpr std::size_t parallel_grain = 16384;

/// Reduction blocking. Partial sums are produced per chunk and folded
/// in chunk order, so the association pattern never depends on the
/// schedule.
inline constexpr std::size_t reduce_chunk = 1024;

namespace detail {
bool use_parallel(std::size_t n);
}

template <class F>
void map1(const double* x, double* out, std::size_t n, F f)
{
    if (detail::use_parallel(n)) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
            out[i] = f(x[i]);
    } else {
        for (std::size_t i = 0; i < n; ++i)
            out[i] = f(x[i]);
    }
}

/// Elementwise combine with index mappers, so the tensor layer can
/// express broadcasting without copying operands.
template <class F, class IxA, class IxB>
void map2(const double* a, const double* b, double* out, std::size_t n, F f, IxA ixa, IxB ixb)
{
    if (detail::use_parallel(n)) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
            out[i] = f(a[ixa(static_cast<std::size_t>(i))], b[ixb(static_cast<std::size_t>(i))]);
    } else {
        for (std::size_t i = 0; i < n; ++i)
            out[i] = f(a[ixa(i)], b[ixb(i)]);
    }
}

/// acc[i] += g[i]; the gradient accumulation hot path.
void add_inplace(double* acc, const double* g, std::size_t n);

/// Chunked deterministic sum.
double reduce_sum(const double* x, std::size_t n);

/// c = a(m x k) * b(k x n), row-major. Parallel over rows of c; each
/// output element is a serial dot product.
void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n);
/// c = a^T(m x k => k x m)... c(k x n) = a^T * b with a(m x k), b(m x n).
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n);
/// c(m x k) = a(m x n) * b^T with b(k x n).
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t n, std::size_t k);

} // namespace epitwin::kern

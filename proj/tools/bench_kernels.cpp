// Times the OpenMP kernels against the serial reference across sizes,
// and the end-to-end training step at the bundled scenario scale.

#include "epitwin/ad/ops.hpp"
#include "epitwin/kern/kernels.hpp"
#include "epitwin/util/rng.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

using namespace epitwin;

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(int reps, const std::function<void()>& fn)
{
    fn(); // warm up
    auto start = Clock::now();
    for (int i = 0; i < reps; ++i)
        fn();
    auto stop = Clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

std::vector<double> random_vec(std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v)
        x = rng.uniform(-1.0, 1.0);
    return v;
}

void bench_case(const char* name, int reps, const std::function<void()>& fn)
{
    kern::set_backend(kern::Backend::serial);
    double serial = time_ms(reps, fn);
    kern::set_backend(kern::Backend::openmp);
    double omp = time_ms(reps, fn);
    std::printf("%-28s serial %10.3f ms   openmp %10.3f ms   speedup %5.2fx\n", name, serial,
                omp, omp > 0 ? serial / omp : 0.0);
}

} // namespace

int main()
{
    std::printf("openmp compiled: %s, max threads: %d, grain: %zu\n",
                kern::openmp_compiled() ? "yes" : "no", kern::max_threads(),
                kern::parallel_grain);

    for (std::size_t n : {std::size_t{1} << 14, std::size_t{1} << 18, std::size_t{1} << 22}) {
        auto a = random_vec(n, 1);
        auto b = random_vec(n, 2);
        std::vector<double> out(n);
        char label[64];

        std::snprintf(label, sizeof label, "map2 mul n=%zu", n);
        auto id = [](std::size_t i) { return i; };
        bench_case(label, 20, [&] {
            kern::map2(a.data(), b.data(), out.data(), n,
                       [](double x, double y) { return x * y; }, id, id);
        });

        std::snprintf(label, sizeof label, "reduce_sum n=%zu", n);
        volatile double sink = 0;
        bench_case(label, 20, [&] { sink = kern::reduce_sum(a.data(), n); });
        (void)sink;
    }

    for (std::size_t m : {std::size_t{64}, std::size_t{256}, std::size_t{512}}) {
        auto a = random_vec(m * m, 3);
        auto b = random_vec(m * m, 4);
        std::vector<double> c(m * m);
        char label[64];
        std::snprintf(label, sizeof label, "matmul %zux%zu", m, m);
        bench_case(label, m >= 512 ? 3 : 10,
                   [&] { kern::matmul_nn(a.data(), b.data(), c.data(), m, m, m); });
    }

    // Tape-level composite: forward + backward of a small dense chain,
    // the pattern the training loop spends its time in.
    {
        auto bench_tape = [&](std::size_t rows, std::size_t cols, const char* label) {
            auto xv = random_vec(rows * cols, 5);
            auto wv = random_vec(cols * cols, 6);
            bench_case(label, 50, [&] {
                ad::Tape tape;
                ad::Tensor x = tape.var(ad::Tensor::from({rows, cols}, xv));
                ad::Tensor w = tape.var(ad::Tensor::from({cols, cols}, wv));
                ad::Tensor h = x;
                for (int i = 0; i < 8; ++i)
                    h = ad::tanh(ad::matmul(h, w));
                auto grads = tape.backward(ad::mean(h));
                (void)grads;
            });
        };
        bench_tape(64, 64, "tape chain 64x64");
        bench_tape(256, 128, "tape chain 256x128");
    }
    return 0;
}

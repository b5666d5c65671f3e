// OpenMP kernels against their serial references.
#include <random>

#include <benchmark/benchmark.h>

#include "zoomsr/nn/kernels.hpp"
#include "zoomsr/stereo.hpp"

using namespace zoomsr;
using nn::Tensor;

namespace {

Tensor random_tensor(std::vector<int> shape, std::uint64_t seed) {
    Tensor t(std::move(shape));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    for (auto& v : t.storage()) v = u(rng);
    return t;
}

struct ConvCase {
    Tensor in, w, b, out, grad_in, grad_w, grad_b;
    ConvCase(int c, int size)
        : in(random_tensor({c, size, size}, 1)),
          w(random_tensor({c, c, 3, 3}, 2)),
          b(random_tensor({c}, 3)),
          out(random_tensor({c, size - 2, size - 2}, 4)),
          grad_in(Tensor::zeros_like(in)),
          grad_w(Tensor::zeros_like(w)),
          grad_b(Tensor::zeros_like(b)) {}
};

template <bool Parallel>
void BM_ConvForward(benchmark::State& st) {
    ConvCase k(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
    for (auto _ : st) {
        if constexpr (Parallel)
            nn::kernels::conv2d_forward(k.in, k.w, &k.b, 1, k.out);
        else
            nn::kernels::reference::conv2d_forward(k.in, k.w, &k.b, 1, k.out);
        benchmark::DoNotOptimize(k.out.storage().data());
    }
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& st) {
    ConvCase k(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
    for (auto _ : st) {
        if constexpr (Parallel) {
            nn::kernels::conv2d_backward_input(k.out, k.w, 1, k.grad_in);
            nn::kernels::conv2d_backward_weight(k.out, k.in, 1, k.grad_w, &k.grad_b);
        } else {
            nn::kernels::reference::conv2d_backward_input(k.out, k.w, 1, k.grad_in);
            nn::kernels::reference::conv2d_backward_weight(k.out, k.in, 1, k.grad_w, &k.grad_b);
        }
        benchmark::DoNotOptimize(k.grad_w.storage().data());
    }
}

stereo::CostVolume random_costs(int h, int w, int d) {
    stereo::CostVolume v(h, w, d);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> u(0, 2000);
    for (auto& c : v.data) c = u(rng);
    return v;
}

template <bool Parallel>
void BM_Sgm(benchmark::State& st) {
    const auto v = random_costs(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)), 64);
    for (auto _ : st) {
        auto out = Parallel ? stereo::sgm_aggregate(v, 648, 2592) : stereo::reference::sgm_aggregate(v, 648, 2592);
        benchmark::DoNotOptimize(out.data.data());
    }
}

}  // namespace

BENCHMARK(BM_ConvForward<true>)->Args({16, 64})->Args({32, 128})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForward<false>)->Args({16, 64})->Args({32, 128})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<true>)->Args({16, 64})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<false>)->Args({16, 64})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sgm<true>)->Args({96, 160})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sgm<false>)->Args({96, 160})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

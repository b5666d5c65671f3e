#include <doctest.h>

#include "gradcheck.hpp"
#include "zoomsr/nn/autograd.hpp"
#include "zoomsr/nn/kernels.hpp"
#include "zoomsr/nn/params.hpp"

#include <fstream>

using namespace zoomsr;
using namespace zoomsr::nn;
using zoomsr::testing::gradcheck;
using zoomsr::testing::random_tensor;

namespace {

// Scalar probe <out, R> with a fixed random R so every output coordinate matters.
Var probe(const Var& out, std::uint64_t seed = 99) {
    return sum(mul(out, constant(random_tensor(out.value().shape(), seed))));
}

constexpr double kRelTol = 1e-3;

}  // namespace

TEST_CASE("parallel conv kernels match the serial reference") {
    for (int stride : {1, 2}) {
        const Tensor in = random_tensor({5, 11, 9}, 1);
        const Tensor w = random_tensor({7, 5, 3, 3}, 2);
        const Tensor b = random_tensor({7}, 3);
        const auto g = kernels::conv_geometry(in, w, stride);
        Tensor fast({7, g.out_height(), g.out_width()}), ref = fast;
        kernels::conv2d_forward(in, w, &b, stride, fast);
        kernels::reference::conv2d_forward(in, w, &b, stride, ref);
        for (std::size_t i = 0; i < fast.size(); ++i) CHECK(fast[i] == doctest::Approx(ref[i]).epsilon(1e-12));

        const Tensor go = random_tensor(fast.shape(), 4);
        Tensor gi_fast = Tensor::zeros_like(in), gi_ref = gi_fast;
        kernels::conv2d_backward_input(go, w, stride, gi_fast);
        kernels::reference::conv2d_backward_input(go, w, stride, gi_ref);
        for (std::size_t i = 0; i < gi_fast.size(); ++i) CHECK(gi_fast[i] == doctest::Approx(gi_ref[i]).epsilon(1e-12));

        Tensor gw_fast = Tensor::zeros_like(w), gw_ref = gw_fast, gb_fast({7}), gb_ref({7});
        kernels::conv2d_backward_weight(go, in, stride, gw_fast, &gb_fast);
        kernels::reference::conv2d_backward_weight(go, in, stride, gw_ref, &gb_ref);
        for (std::size_t i = 0; i < gw_fast.size(); ++i) CHECK(gw_fast[i] == doctest::Approx(gw_ref[i]).epsilon(1e-12));
        for (std::size_t i = 0; i < 7; ++i) CHECK(gb_fast[i] == doctest::Approx(gb_ref[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv kernel rejects mismatched channels") {
    Tensor out({2, 3, 3});
    CHECK_THROWS_AS(kernels::conv2d_forward(Tensor({3, 5, 5}), Tensor({2, 4, 3, 3}), nullptr, 1, out), DimensionError);
}

TEST_CASE("replicate padding preserves constants and its adjoint conserves mass") {
    const Tensor c({2, 3, 4}, 0.7);
    const Tensor p = kernels::pad_replicate(c, 2);
    CHECK(p.height() == 7);
    for (double v : p.storage()) CHECK(v == 0.7);
    Tensor g = Tensor::zeros_like(c);
    kernels::pad_replicate_backward(Tensor(p.shape(), 1.0), 2, g);
    double total = 0;
    for (double v : g.storage()) total += v;
    CHECK(total == doctest::Approx(static_cast<double>(p.size())));
}

TEST_CASE("gradient check: conv2d (stride 1 and 2) with replicate padding") {
    Var x = parameter(random_tensor({3, 6, 6}, 10));
    Var w = parameter(random_tensor({4, 3, 3, 3}, 11));
    Var b = parameter(random_tensor({4}, 12));
    for (int stride : {1, 2}) {
        const auto r = gradcheck([&] { return probe(conv2d(x, w, b, stride)); }, {x, w, b});
        CHECK(r.worst_rel < kRelTol);
    }
}

TEST_CASE("gradient check: transposed convolution reference layer") {
    Var x = parameter(random_tensor({2, 4, 4}, 20));
    Var w = parameter(random_tensor({2, 3, 3, 3}, 21));
    Var b = parameter(random_tensor({3}, 22));
    const Var out = conv_transpose2d(x, w, b, 2);
    CHECK(out.value().height() == 8);
    CHECK(out.value().channels() == 3);
    const auto r = gradcheck([&] { return probe(conv_transpose2d(x, w, b, 2)); }, {x, w, b});
    CHECK(r.worst_rel < kRelTol);
}

TEST_CASE("gradient check: activations") {
    // Keep inputs away from the LeakyReLU / clamp kinks so the central difference is smooth.
    Tensor t = random_tensor({2, 4, 4}, 30, -1.0, 1.0);
    for (auto& v : t.storage())
        if (std::abs(v) < 0.05) v += 0.1;
    Var x = parameter(t);
    CHECK(gradcheck([&] { return probe(leaky_relu(x, 0.2)); }, {x}).worst_rel < kRelTol);
    CHECK(gradcheck([&] { return probe(relu(x)); }, {x}).worst_rel < kRelTol);
    CHECK(gradcheck([&] { return probe(sigmoid(x)); }, {x}).worst_rel < kRelTol);
    CHECK(gradcheck([&] { return probe(tanh(x)); }, {x}).worst_rel < kRelTol);

    Tensor c = random_tensor({2, 4, 4}, 31, -0.4, 1.4);
    for (auto& v : c.storage())
        if (std::abs(v) < 0.01 || std::abs(v - 1.0) < 0.01) v += 0.03;
    Var xc = parameter(c);
    CHECK(gradcheck([&] { return probe(clamp01(xc)); }, {xc}).worst_rel < kRelTol);
}

TEST_CASE("gradient check: resampling and pooling") {
    Var x = parameter(random_tensor({2, 4, 6}, 40));
    CHECK(gradcheck([&] { return probe(upsample_nearest(x, 2)); }, {x}).worst_rel < kRelTol);
    CHECK(gradcheck([&] { return probe(upsample_bilinear(x, 2)); }, {x}).worst_rel < kRelTol);
    CHECK(gradcheck([&] { return probe(upsample_bilinear(x, 4)); }, {x}).worst_rel < kRelTol);
    CHECK(gradcheck([&] { return probe(maxpool2(x)); }, {x}).worst_rel < kRelTol);
    CHECK(gradcheck([&] { return probe(pad_replicate(x, 2)); }, {x}).worst_rel < kRelTol);
}

TEST_CASE("gradient check: structural and dense ops") {
    Var a = parameter(random_tensor({2, 3, 3}, 50));
    Var b = parameter(random_tensor({3, 3, 3}, 51));
    Var c = parameter(random_tensor({2, 3, 3}, 52));
    CHECK(gradcheck([&] { return probe(concat({a, b, c})); }, {a, b, c}).worst_rel < kRelTol);
    CHECK(gradcheck([&] { return probe(slice_channels(b, 1, 2)); }, {b}).worst_rel < kRelTol);
    CHECK(gradcheck([&] { return probe(add(a, c)); }, {a, c}).worst_rel < kRelTol);
    CHECK(gradcheck([&] { return probe(sub(a, c)); }, {a, c}).worst_rel < kRelTol);
    CHECK(gradcheck([&] { return probe(mul(a, c)); }, {a, c}).worst_rel < kRelTol);
    CHECK(gradcheck([&] { return probe(add_scalar(scale(a, -2.5), 1.0)); }, {a}).worst_rel < kRelTol);
    CHECK(gradcheck([&] { return mean(a); }, {a}).worst_rel < kRelTol);

    Var w = parameter(random_tensor({5, 18}, 53));
    Var bias = parameter(random_tensor({5}, 54));
    CHECK(gradcheck([&] { return probe(linear(a, w, bias)); }, {a, w, bias}).worst_rel < kRelTol);

    Var s1 = parameter(random_tensor({1}, 55)), s2 = parameter(random_tensor({1}, 56));
    CHECK(gradcheck([&] { return probe(stack({s1, s2})); }, {s1, s2}).worst_rel < kRelTol);
    CHECK(gradcheck([&] { return weighted_sum({s1, s2}, {0.3, -2.0}); }, {s1, s2}).worst_rel < kRelTol);
}

TEST_CASE("gradient check: loss reductions") {
    Var p = parameter(random_tensor({3, 4, 4}, 60, 0, 1));
    Var t = parameter(random_tensor({3, 4, 4}, 61, 0, 1));
    CHECK(gradcheck([&] { return charbonnier_mean(t, p, 1e-3); }, {p, t}).worst_rel < kRelTol);
    CHECK(gradcheck([&] { return mse_mean(t, p); }, {p, t}).worst_rel < kRelTol);

    Var cr = parameter(random_tensor({3}, 62, -2, 2));
    Var cf = parameter(random_tensor({4}, 63, -2, 2));
    CHECK(gradcheck([&] { return relativistic_loss(cr, cf, true); }, {cr, cf}).worst_rel < kRelTol);
    CHECK(gradcheck([&] { return relativistic_loss(cr, cf, false); }, {cr, cf}).worst_rel < kRelTol);

    Var logits = parameter(random_tensor({4}, 64, -2, 2));
    CHECK(gradcheck([&] { return softmax_cross_entropy(logits, 2); }, {logits}).worst_rel < kRelTol);
}

TEST_CASE("shared subgraphs accumulate gradients from every use") {
    Var x = parameter(random_tensor({1, 2, 2}, 70));
    const auto r = gradcheck(
        [&] {
            const Var y = leaky_relu(x, 0.2);
            return sum(mul(y, add(y, x)));
        },
        {x});
    CHECK(r.worst_rel < kRelTol);
}

TEST_CASE("NoGradGuard stops graph recording") {
    Var x = parameter(random_tensor({1, 2, 2}, 71));
    {
        NoGradGuard guard;
        CHECK_FALSE(sum(x).requires_grad());
    }
    CHECK(sum(x).requires_grad());
}

TEST_CASE("adam moves parameters against the gradient") {
    ParamStore ps;
    ps.add("w", Tensor({2}, std::vector<double>{1.0, -1.0}));
    Adam opt(AdamConfig{0.1});
    for (int i = 0; i < 50; ++i) {
        ps.zero_grad();
        backward(mse_mean(ps.at("w"), constant(Tensor({2}))));
        opt.step(ps);
    }
    CHECK(std::abs(ps.at("w").value()[0]) < 0.2);
    CHECK(std::abs(ps.at("w").value()[1]) < 0.2);
}

TEST_CASE("checkpoint container round trips bit-exactly") {
    Checkpoint ck;
    ck.meta["kind"] = "test";
    ck.meta["n"] = 3;
    ck.arrays["a/w"] = random_tensor({2, 3, 3, 3}, 80, -1e6, 1e6);
    ck.arrays["b"] = Tensor({1}, std::vector<double>{0.1 + 0.2});
    const auto path = std::filesystem::temp_directory_path() / "zoomsr_ckpt_rt.bin";
    save_checkpoint(ck, path);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back.meta == ck.meta);
    REQUIRE(back.arrays.size() == 2);
    for (const auto& [k, t] : ck.arrays) CHECK(back.arrays.at(k) == t);

    {
        std::ofstream bad(path, std::ios::binary);
        bad << "garbage";
    }
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
}

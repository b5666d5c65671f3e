#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "zoomsr/distill.hpp"
#include "zoomsr/synthetic.hpp"

using namespace zoomsr;
using namespace zoomsr::distill;
using nn::Var;
using zoomsr::testing::random_image;

namespace {

net::GeneratorConfig small(int blocks, int width = 6, int levels = 2) {
    net::GeneratorConfig g;
    g.levels = levels;
    g.residual_blocks = blocks;
    g.feature_channels = width;
    g.dense_layers = 1;
    g.growth = 3;
    return g;
}

std::vector<Image> scenes(int n, int size) {
    std::vector<Image> out;
    for (int i = 0; i < n; ++i) out.push_back(synthetic::scene(size, size, 70 + i));
    return out;
}

DistillConfig quick(int iterations) {
    DistillConfig c;
    c.iterations = iterations;
    c.batch_size = 2;
    c.crop_size = 8;
    c.output_layer = 3;
    c.fixed_batch = true;
    c.learning_rate = 2e-3;
    return c;
}

net::Generator::Output forward(const net::Generator& g, const Image& lr) {
    nn::NoGradGuard guard;
    return g.forward(nn::constant(nn::to_tensor(lr)));
}

nn::Tensor filled(const std::vector<int>& shape, std::uint64_t seed) {
    return nn::to_tensor(random_image(shape[1], shape[2], shape[0], seed, -1, 1));
}

}  // namespace

TEST_CASE("section taps: two per level, six for three levels") {
    const net::Generator g(small(1, 6, 3), 1);
    const auto out = forward(g, random_image(8, 8, 3, 1));
    const auto taps = section_taps(out);
    REQUIRE(taps.size() == 6);
    CHECK(taps[0].value().height() == 8);
    CHECK(taps[2].value().height() == 16);
    CHECK(taps[5].value().height() == 32);
}

TEST_CASE("distill loss is zero for an identical student and non-negative otherwise") {
    const net::FeatureExtractor fx;
    const net::Generator teacher(small(3), 2);
    const net::Generator twin(teacher.config(), teacher.params().clone());
    const Image lr = random_image(8, 8, 3, 3);
    nn::NoGradGuard guard;
    CHECK(distill_loss(forward(teacher, lr), forward(twin, lr), {}, fx, 3).value().item() == 0.0);
    for (int seed = 0; seed < 4; ++seed) {
        const net::Generator student(small(1), 10 + seed);
        CHECK(distill_loss(forward(teacher, lr), forward(student, lr), {}, fx, 3).value().item() > 0.0);
    }
}

TEST_CASE("distill loss matches a scalar loop over taps") {
    const net::FeatureExtractor fx;
    // Two levels -> four taps; final outputs equal so only the tap terms remain.
    net::Generator::Output t, s;
    const std::vector<std::vector<int>> shapes{{4, 5, 5}, {4, 5, 5}, {4, 10, 10}, {4, 10, 10}};
    double expected = 0;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const nn::Tensor a = filled(shapes[i], 100 + i), b = filled(shapes[i], 200 + i);
        double sq = 0;
        for (std::size_t k = 0; k < a.size(); ++k) sq += (a[k] - b[k]) * (a[k] - b[k]);
        expected += sq / static_cast<double>(a.size());
        auto& tt = i % 2 == 0 ? t.section_entry : t.section_exit;
        auto& ss = i % 2 == 0 ? s.section_entry : s.section_exit;
        tt.push_back(nn::constant(a));
        ss.push_back(nn::constant(b));
    }
    const nn::Tensor out = nn::to_tensor(random_image(16, 16, 3, 9));
    t.levels = {nn::constant(out)};
    s.levels = {nn::constant(out)};
    CHECK(distill_loss(t, s, {}, fx, 2).value().item() == doctest::Approx(expected).epsilon(1e-12));

    // A constant offset d over every element contributes d^2 per tap.
    net::Generator::Output u = t;
    for (auto* list : {&u.section_entry, &u.section_exit})
        for (auto& v : *list) {
            nn::Tensor shifted = v.value();
            for (auto& x : shifted.storage()) x += 0.5;
            v = nn::constant(shifted);
        }
    CHECK(distill_loss(t, u, {}, fx, 2).value().item() == doctest::Approx(4 * 0.25).epsilon(1e-12));

    s.section_exit[1] = nn::constant(filled({4, 10, 9}, 5));
    CHECK_THROWS_AS(distill_loss(t, s, {}, fx, 2), DimensionError);
}

TEST_CASE("projections appear only when widths differ") {
    CHECK(make_projections(small(3, 6), small(1, 6), 1).size() == 0);
    const auto p = make_projections(small(3, 8), small(1, 4), 1);
    CHECK(p.size() == 8);
    CHECK(p.at("tap0.w").value().shape() == std::vector<int>{8, 4, 1, 1});
    CHECK_THROWS(make_projections(small(3, 6, 2), small(1, 6, 3), 1));

    const net::FeatureExtractor fx;
    const net::Generator teacher(small(2, 8), 3), student(small(1, 4), 4);
    const Image lr = random_image(8, 8, 3, 5);
    CHECK(std::isfinite(distill_loss(forward(teacher, lr), forward(student, lr), p, fx, 3).value().item()));
    CHECK_THROWS_AS(distill_loss(forward(teacher, lr), forward(student, lr), {}, fx, 3), DimensionError);
}

TEST_CASE("stage 1 lowers the loss, freezes the teacher and is deterministic") {
    const net::Generator teacher(small(3), 11);
    const nn::ParamStore before = teacher.params().clone();
    Distiller d(teacher, small(1), {}, quick(60), scenes(2, 40));
    const auto losses = d.fit();
    REQUIRE(losses.size() == 60);
    double first = 0, last = 0;
    for (int i = 0; i < 10; ++i) {
        first += losses[i];
        last += losses[50 + i];
    }
    CHECK(last < first);
    for (const auto& [name, v] : d.teacher().params()) CHECK(v.value() == before.at(name).value());

    Distiller again(teacher, small(1), {}, quick(60), scenes(2, 40));
    CHECK(again.fit() == losses);
    CHECK_THROWS(Distiller(teacher, small(3), {}, quick(1), scenes(1, 40)));
}

TEST_CASE("stage 2 starts from the retained weights and requires stage 1") {
    const net::Generator teacher(small(3), 12);
    Distiller d(teacher, small(1), {}, quick(3), scenes(2, 40));
    const auto dir = zoomsr::testing::scratch_dir("distill");
    nn::save_checkpoint(d.checkpoint(), dir / "partial.bin");  // not yet complete
    d.fit();
    const nn::Checkpoint ck = d.checkpoint();
    CHECK(is_stage1_checkpoint(ck));

    train::TrainConfig tc;
    tc.levels = 2;
    tc.crop_size = 8;
    tc.batch_size = 1;
    tc.iterations = 2;
    const net::DiscriminatorConfig dc{32, 4, 8, 2, 6};
    train::Trainer t = stage2_trainer(ck, tc, dc, {}, scenes(2, 40));
    for (const auto& [name, v] : t.models().generator.params()) CHECK(v.value() == d.student().params().at(name).value());
    t.fit();

    CHECK_THROWS(stage2_trainer(nn::load_checkpoint(dir / "partial.bin"), tc, dc, {}, scenes(2, 40)));
    train::Trainer plain(tc, small(1), dc, {}, scenes(2, 40));
    CHECK_THROWS(stage2_trainer(plain.checkpoint(), tc, dc, {}, scenes(2, 40)));
}

TEST_CASE("student latency is below the teacher's") {
    const net::Generator teacher(small(8, 8, 3), 1), student(small(3, 8, 3), 2);
    const Image lr = random_image(16, 16, 3, 4);
    CHECK(median_latency_ms(student, lr) < median_latency_ms(teacher, lr));
}

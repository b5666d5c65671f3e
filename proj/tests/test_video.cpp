#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "zoomsr/video.hpp"

using namespace zoomsr;
using namespace zoomsr::video;
using zoomsr::testing::random_image;

namespace {

// Smooth RGB texture sampled on an integer grid offset by (ox, oy).
Image texture(int h, int w, int ox, int oy) {
    Image img(h, w, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double u = x - ox, v = y - oy;
            const double t = 0.5 + 0.2 * std::sin(u * 0.37 + v * 0.11) + 0.15 * std::cos(u * 0.13 - v * 0.41) +
                             0.1 * std::sin(u * 0.71 + v * 0.53);
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = std::clamp(t + 0.03 * c, 0.0, 1.0);
        }
    return img;
}

net::GeneratorConfig video_config(int r = 4) {
    net::GeneratorConfig cfg;
    cfg.levels = 2;
    cfg.residual_blocks = 1;
    cfg.feature_channels = 6;
    cfg.dense_layers = 1;
    cfg.growth = 3;
    cfg.input_channels = step_input_channels(r);
    return cfg;
}

VideoSequence moving_sequence(int frames, int h, int w) {
    VideoSequence seq;
    for (int t = 0; t < frames; ++t) seq.frames.push_back(texture(h, w, t, t % 2));
    return seq;
}

}  // namespace

TEST_CASE("flow of identical frames is near zero") {
    const Image a = texture(48, 48, 0, 0);
    const FlowField f = estimate_flow(a, a);
    CHECK(f.channels() == 2);
    // The polynomial-expansion border handling leaves a small residual within half a window of the edge.
    double interior = 0, all = 0;
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x)
            for (int c = 0; c < 2; ++c) {
                const double v = std::abs(f.at(y, x, c));
                all = std::max(all, v);
                if (y >= 7 && y < 41 && x >= 7 && x < 41) interior = std::max(interior, v);
            }
    CHECK(interior < 0.05);
    CHECK(all < 0.1);
}

TEST_CASE("flow recovers integer translations up to 5 px") {
    for (int dx = 1; dx <= 5; ++dx)
        for (int dy : {0, 2}) {
            const Image a = texture(64, 64, 0, 0), b = texture(64, 64, dx, dy);
            const FlowField f = estimate_flow(a, b);
            double sx = 0, sy = 0;
            int n = 0;
            for (int y = 12; y < 52; ++y)
                for (int x = 12; x < 52; ++x, ++n) {
                    sx += f.at(y, x, 0);
                    sy += f.at(y, x, 1);
                }
            CAPTURE(dx);
            CAPTURE(dy);
            CHECK(std::abs(sx / n - dx) < 0.25);
            CHECK(std::abs(sy / n - dy) < 0.25);
        }
}

TEST_CASE("forward and backward flow are opposite on the interior") {
    const Image a = texture(64, 64, 0, 0), b = texture(64, 64, 3, 1);
    const FlowField f = estimate_flow(a, b), g = estimate_flow(b, a);
    for (int y = 16; y < 48; y += 4)
        for (int x = 16; x < 48; x += 4)
            for (int c = 0; c < 2; ++c) CHECK(std::abs(f.at(y, x, c) + g.at(y, x, c)) < 0.5);
}

TEST_CASE("flow is bounded by max_flow") {
    const Image a = texture(64, 64, 0, 0), b = texture(64, 64, 5, 0);
    const FlowField f = estimate_flow(a, b, FlowParams{.max_flow = 2.0});
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) CHECK(std::hypot(f.at(y, x, 0), f.at(y, x, 1)) <= 2.0 + 1e-9);
    CHECK_THROWS_AS(estimate_flow(a, Image(64, 63, 3)), DimensionError);
}

TEST_CASE("step input: channel law, zero state and channel order") {
    for (int r : {2, 4, 8}) {
        const RecurrentState s = initial_state(16, 12, r);
        const Image in = build_step_input(s, random_image(16, 12, 3, 1), FlowField(16, 12, 2), 16.0);
        CHECK(in.channels() == step_input_channels(r));
        CHECK(in.height() == 16);
    }
    CHECK(step_input_channels(4) == 53);

    RecurrentState s = initial_state(64, 64, 4);
    const Image lr = random_image(64, 64, 3, 2);
    const Image first = build_step_input(s, lr, FlowField(64, 64, 2), 16.0);
    CHECK(first.channels() == 53);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            for (int c = 0; c < 48; ++c) REQUIRE(first.at(y, x, c) == 0.0);

    // Distinct constants reveal the order: packed SR, flow / max_flow, current LR.
    s.prev_sr_packed = Image(8, 8, 48, 0.25);
    const Image probe = build_step_input(s, Image(8, 8, 3, 0.75), FlowField(8, 8, 2, 4.0), 16.0);
    for (int c = 0; c < 53; ++c) CHECK(probe.at(3, 5, c) == (c < 48 ? 0.25 : c < 50 ? 0.25 : 0.75));
    s.prev_sr_packed = Image(8, 8, 48, 0.5);
    const Image probe2 = build_step_input(s, Image(8, 8, 3, 0.75), FlowField(8, 8, 2, 8.0), 16.0);
    CHECK(probe2.at(0, 0, 47) == 0.5);
    CHECK(probe2.at(0, 0, 48) == 0.5);
    CHECK(probe2.at(0, 0, 50) == 0.75);
    CHECK_THROWS_AS(build_step_input(s, Image(8, 8, 3), FlowField(8, 7, 2), 16.0), DimensionError);
}

TEST_CASE("first step equals single-image SR of the zero-padded input") {
    const net::Generator g(video_config(), 5);
    const Image lr = random_image(8, 8, 3, 3);
    const auto step = sr_step(initial_state(8, 8), lr, g);
    const auto direct = g.infer(concat_channels({Image(8, 8, 50), lr}));
    CHECK(step.sr == direct[1]);
    CHECK(step.sr.height() == 32);
    // The new state packs the SR frame losslessly and remembers the LR frame.
    CHECK(depth_to_space(step.state.prev_sr_packed, 4) == step.sr);
    CHECK(step.state.prev_lr == lr);
    CHECK(step.state.started);

    const net::Generator single(net::GeneratorConfig{.levels = 2}, 1);
    CHECK_THROWS_AS(sr_step(initial_state(8, 8), lr, single), DimensionError);
}

TEST_CASE("video SR is causal and length-preserving") {
    const net::Generator g(video_config(), 6);
    const VideoSequence seq = moving_sequence(5, 16, 16);
    const VideoSequence full = super_resolve_video(seq, g);
    REQUIRE(full.frames.size() == 5);
    for (int k = 1; k <= 5; ++k) {
        VideoSequence prefix;
        prefix.frames.assign(seq.frames.begin(), seq.frames.begin() + k);
        const VideoSequence part = super_resolve_video(prefix, g);
        REQUIRE(part.frames.size() == static_cast<std::size_t>(k));
        for (int t = 0; t < k; ++t) CHECK(part.frames[t] == full.frames[t]);
    }
    VideoSequence one;
    one.frames = {seq.frames[0]};
    CHECK(super_resolve_video(one, g).frames[0] == sr_step(initial_state(16, 16), seq.frames[0], g).sr);
}

TEST_CASE("feedback changes later frames") {
    const net::Generator g(video_config(), 7);
    VideoSequence still;
    still.frames.assign(3, texture(16, 16, 0, 0));
    const auto out = super_resolve_video(still, g);
    // Same LR and zero flow, but the packed feedback differs from the zero state.
    CHECK(out.frames[0] != out.frames[1]);
}

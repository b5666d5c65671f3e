#include "zoomsr/video.hpp"

#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/video/tracking.hpp>

namespace zoomsr::video {

namespace {

cv::Mat luma_u8(const Image& img) {
    const Image g = to_grayscale(img);
    cv::Mat m(g.height(), g.width(), CV_8UC1);
    for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x)
            m.at<std::uint8_t>(y, x) = cv::saturate_cast<std::uint8_t>(std::lround(g.at(y, x, 0) * 255.0));
    return m;
}

int log2_exact(int r) {
    int s = 0;
    while ((1 << s) < r) ++s;
    return (1 << s) == r ? s : -1;
}

}  // namespace

void FlowParams::validate() const {
    if (pyramid_levels < 1 || window < 3 || iterations < 1 || !(max_flow > 0))
        throw std::invalid_argument("flow params: levels >= 1, window >= 3, iterations >= 1, max_flow > 0");
}

FlowField estimate_flow(const Image& prev_lr, const Image& cur_lr, const FlowParams& p) {
    p.validate();
    if (!prev_lr.same_shape(cur_lr)) throw DimensionError("estimate_flow: frames differ in shape");
    cv::Mat flow;
    cv::calcOpticalFlowFarneback(luma_u8(prev_lr), luma_u8(cur_lr), flow, 0.5, p.pyramid_levels - 1, p.window,
                                 p.iterations, 5, 1.1, 0);
    FlowField out(prev_lr.height(), prev_lr.width(), 2);
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) {
            double dx = flow.at<cv::Vec2f>(y, x)[0], dy = flow.at<cv::Vec2f>(y, x)[1];
            if (!std::isfinite(dx) || !std::isfinite(dy)) dx = dy = 0.0;
            const double len = std::hypot(dx, dy);
            if (len > p.max_flow) {
                dx *= p.max_flow / len;
                dy *= p.max_flow / len;
            }
            out.at(y, x, 0) = dx;
            out.at(y, x, 1) = dy;
        }
    return out;
}

RecurrentState initial_state(int height, int width, int feedback_scale) {
    if (height < 1 || width < 1) throw DimensionError("initial_state: empty stream");
    if (log2_exact(feedback_scale) < 1) throw std::invalid_argument("feedback scale must be a power of two >= 2");
    return {Image(height, width, 3), Image(height, width, 3 * feedback_scale * feedback_scale), feedback_scale, false};
}

Image build_step_input(const RecurrentState& s, const Image& cur_lr, const FlowField& flow, double max_flow) {
    const int h = cur_lr.height(), w = cur_lr.width(), r = s.feedback_scale;
    if (cur_lr.channels() != 3) throw DimensionError("build_step_input: LR frame must be RGB");
    if (s.prev_sr_packed.height() != h || s.prev_sr_packed.width() != w || s.prev_sr_packed.channels() != 3 * r * r)
        throw DimensionError("build_step_input: recurrent state does not match the frame");
    if (flow.height() != h || flow.width() != w || flow.channels() != 2)
        throw DimensionError("build_step_input: flow does not match the frame");
    Image scaled = flow;
    for (auto& v : scaled.data()) v /= max_flow;
    return concat_channels({s.prev_sr_packed, scaled, cur_lr});
}

void check_video_generator(const net::GeneratorConfig& cfg, int feedback_scale) {
    const int level = log2_exact(feedback_scale);
    if (level < 1) throw std::invalid_argument("feedback scale must be a power of two >= 2");
    if (cfg.input_channels != step_input_channels(feedback_scale))
        throw DimensionError("generator takes " + std::to_string(cfg.input_channels) +
                             " input channels; the recurrence at x" + std::to_string(feedback_scale) + " needs " +
                             std::to_string(step_input_channels(feedback_scale)));
    if (cfg.levels < level) throw DimensionError("generator has no level for the feedback scale");
}

StepResult sr_step(const RecurrentState& state, const Image& cur_lr, const net::Generator& g,
                   const FlowParams& fp) {
    check_video_generator(g.config(), state.feedback_scale);
    const FlowField flow = state.started ? estimate_flow(state.prev_lr, cur_lr, fp)
                                         : FlowField(cur_lr.height(), cur_lr.width(), 2);
    return sr_step(state, cur_lr, flow, g, fp.max_flow);
}

StepResult sr_step(const RecurrentState& state, const Image& cur_lr, const FlowField& flow, const net::Generator& g,
                   double max_flow) {
    const int r = state.feedback_scale;
    check_video_generator(g.config(), r);
    const FlowField used = state.started ? flow : FlowField(cur_lr.height(), cur_lr.width(), 2);
    StepResult out;
    out.levels = g.infer(build_step_input(state, cur_lr, used, max_flow));
    out.sr = out.levels.at(log2_exact(r) - 1);
    out.state = {cur_lr, space_to_depth(out.sr, r), r, true};
    return out;
}

VideoSequence super_resolve_video(const VideoSequence& seq, const net::Generator& g, int feedback_scale,
                                  const FlowParams& fp) {
    seq.validate();
    check_video_generator(g.config(), feedback_scale);
    VideoSequence out;
    out.frame_rate = seq.frame_rate;
    RecurrentState s = initial_state(seq.frames[0].height(), seq.frames[0].width(), feedback_scale);
    for (const auto& f : seq.frames) {
        auto step = sr_step(s, f, g, fp);
        out.frames.push_back(std::move(step.sr));
        s = std::move(step.state);
    }
    return out;
}

}  // namespace zoomsr::video

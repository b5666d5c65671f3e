#pragma once

#include "zoomsr/image.hpp"
#include "zoomsr/networks.hpp"

namespace zoomsr::video {

struct FlowParams {
    int pyramid_levels = 3;  // including the full-resolution level
    int window = 15;
    int iterations = 3;
    double max_flow = 16.0;  // pixels; longer vectors are shortened to this length

    void validate() const;
};

/// (H, W, 2) displacement field, channel 0 = dx, channel 1 = dy, such that
/// prev(y, x) ~ cur(y + dy, x + dx).
using FlowField = Image;

/// Dense polynomial-expansion flow on 8-bit luma of the two frames.
FlowField estimate_flow(const Image& prev_lr, const Image& cur_lr, const FlowParams& params = {});

struct RecurrentState {
    Image prev_lr;          // (H, W, 3)
    Image prev_sr_packed;   // (H, W, 3 r^2)
    int feedback_scale = 4;
    bool started = false;   // false until the first frame has been consumed
};

/// Zero state for an H x W stream.
RecurrentState initial_state(int height, int width, int feedback_scale = 4);

inline int step_input_channels(int feedback_scale) { return 3 + 2 + 3 * feedback_scale * feedback_scale; }

/// concat(packed previous SR, flow / max_flow, current LR).
Image build_step_input(const RecurrentState& state, const Image& cur_lr, const FlowField& flow, double max_flow);

struct StepResult {
    Image sr;                 // feedback-level output
    net::PyramidOutput levels;
    RecurrentState state;
};

/// One recurrent step. The first step of a stream uses zero flow.
StepResult sr_step(const RecurrentState& state, const Image& cur_lr, const net::Generator& g,
                   const FlowParams& flow = {});
/// Same step with a precomputed flow field (ignored, i.e. zero, on the first step).
StepResult sr_step(const RecurrentState& state, const Image& cur_lr, const FlowField& flow, const net::Generator& g,
                   double max_flow);

/// Causal frame-by-frame SR of a whole sequence at the feedback scale.
VideoSequence super_resolve_video(const VideoSequence& seq, const net::Generator& g, int feedback_scale = 4,
                                  const FlowParams& flow = {});

/// Throws DimensionError unless `g` can run the recurrence at `feedback_scale`.
void check_video_generator(const net::GeneratorConfig& cfg, int feedback_scale);

}  // namespace zoomsr::video

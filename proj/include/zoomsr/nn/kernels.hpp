#pragma once

// Convolution kernels on (C, H, W) planes. The input is already padded, so these are
// "valid" correlations:  out[o][y][x] = b[o] + sum_{i,ky,kx} w[o][i][ky][kx] * in[i][y*s+ky][x*s+kx].
//
// `kernels::` holds the OpenMP-parallel versions used by the network code. Each output element
// is owned by exactly one thread and accumulated in a fixed order, so results do not depend
// on the thread count. `kernels::reference::` keeps straightforward serial loops that the
// tests and benchmarks compare against.

#include "zoomsr/nn/tensor.hpp"

namespace zoomsr::nn::kernels {

struct ConvGeometry {
    int in_channels, in_height, in_width;
    int out_channels, kernel, stride;
    int out_height() const { return (in_height - kernel) / stride + 1; }
    int out_width() const { return (in_width - kernel) / stride + 1; }
};

ConvGeometry conv_geometry(const Tensor& input, const Tensor& weight, int stride);

/// out must be shaped (O, OH, OW); it is overwritten.
void conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor* bias, int stride, Tensor& out);
/// Accumulates into grad_input (shape of input).
void conv2d_backward_input(const Tensor& grad_out, const Tensor& weight, int stride, Tensor& grad_input);
/// Accumulates into grad_weight and (optionally) grad_bias.
void conv2d_backward_weight(const Tensor& grad_out, const Tensor& input, int stride, Tensor& grad_weight,
                            Tensor* grad_bias);

/// Replicate (edge-clamp) padding by p on each spatial side.
Tensor pad_replicate(const Tensor& x, int p);
/// Adjoint of pad_replicate: folds the padded gradient back onto the source, accumulating.
void pad_replicate_backward(const Tensor& grad_padded, int p, Tensor& grad_x);

namespace reference {

void conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor* bias, int stride, Tensor& out);
void conv2d_backward_input(const Tensor& grad_out, const Tensor& weight, int stride, Tensor& grad_input);
void conv2d_backward_weight(const Tensor& grad_out, const Tensor& input, int stride, Tensor& grad_weight,
                            Tensor* grad_bias);

}  // namespace reference

}  // namespace zoomsr::nn::kernels

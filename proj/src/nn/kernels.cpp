#include "zoomsr/nn/kernels.hpp"

#include <algorithm>

namespace zoomsr::nn::kernels {

ConvGeometry conv_geometry(const Tensor& input, const Tensor& weight, int stride) {
    if (input.rank() != 3 || weight.rank() != 4)
        throw DimensionError("conv2d: expected (C,H,W) input and (O,I,K,K) weight");
    if (weight.dim(1) != input.channels())
        throw DimensionError("conv2d: weight expects " + std::to_string(weight.dim(1)) + " input channels, got " +
                             std::to_string(input.channels()));
    if (weight.dim(2) != weight.dim(3)) throw DimensionError("conv2d: non-square kernel");
    if (stride < 1) throw DimensionError("conv2d: stride must be >= 1");
    ConvGeometry g{input.channels(), input.height(), input.width(), weight.dim(0), weight.dim(2), stride};
    if (g.in_height < g.kernel || g.in_width < g.kernel) throw DimensionError("conv2d: input smaller than kernel");
    return g;
}

void conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor* bias, int stride, Tensor& out) {
    const auto g = conv_geometry(input, weight, stride);
    const int oh = g.out_height(), ow = g.out_width(), k = g.kernel, s = g.stride;
    const int ih = g.in_height, iw = g.in_width, ic = g.in_channels;
    const double* in = input.raw();
    const double* w = weight.raw();
    double* o = out.raw();

#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < g.out_channels; ++oc) {
        const double b = bias ? (*bias)[oc] : 0.0;
        const double* wo = w + static_cast<std::size_t>(oc) * ic * k * k;
        for (int y = 0; y < oh; ++y) {
            double* orow = o + (static_cast<std::size_t>(oc) * oh + y) * ow;
            std::fill(orow, orow + ow, b);
            for (int i = 0; i < ic; ++i) {
                const double* plane = in + static_cast<std::size_t>(i) * ih * iw;
                const double* wi = wo + static_cast<std::size_t>(i) * k * k;
                for (int ky = 0; ky < k; ++ky) {
                    const double* irow = plane + static_cast<std::size_t>(y * s + ky) * iw;
                    for (int kx = 0; kx < k; ++kx) {
                        const double wv = wi[ky * k + kx];
                        const double* src = irow + kx;
                        if (s == 1) {
                            for (int x = 0; x < ow; ++x) orow[x] += wv * src[x];
                        } else {
                            for (int x = 0; x < ow; ++x) orow[x] += wv * src[x * s];
                        }
                    }
                }
            }
        }
    }
}

void conv2d_backward_input(const Tensor& grad_out, const Tensor& weight, int stride, Tensor& grad_input) {
    const auto g = conv_geometry(grad_input, weight, stride);
    const int oh = g.out_height(), ow = g.out_width(), k = g.kernel, s = g.stride;
    const int ih = g.in_height, iw = g.in_width, ic = g.in_channels;
    const double* go = grad_out.raw();
    const double* w = weight.raw();
    double* gi = grad_input.raw();

#pragma omp parallel for schedule(static)
    for (int i = 0; i < ic; ++i) {
        double* plane = gi + static_cast<std::size_t>(i) * ih * iw;
        for (int oc = 0; oc < g.out_channels; ++oc) {
            const double* wi = w + (static_cast<std::size_t>(oc) * ic + i) * k * k;
            for (int y = 0; y < oh; ++y) {
                const double* grow = go + (static_cast<std::size_t>(oc) * oh + y) * ow;
                for (int ky = 0; ky < k; ++ky) {
                    double* irow = plane + static_cast<std::size_t>(y * s + ky) * iw;
                    for (int kx = 0; kx < k; ++kx) {
                        const double wv = wi[ky * k + kx];
                        double* dst = irow + kx;
                        if (s == 1) {
                            for (int x = 0; x < ow; ++x) dst[x] += wv * grow[x];
                        } else {
                            for (int x = 0; x < ow; ++x) dst[x * s] += wv * grow[x];
                        }
                    }
                }
            }
        }
    }
}

void conv2d_backward_weight(const Tensor& grad_out, const Tensor& input, int stride, Tensor& grad_weight,
                            Tensor* grad_bias) {
    const auto g = conv_geometry(input, grad_weight, stride);
    const int oh = g.out_height(), ow = g.out_width(), k = g.kernel, s = g.stride;
    const int ih = g.in_height, iw = g.in_width, ic = g.in_channels;
    const double* go = grad_out.raw();
    const double* in = input.raw();
    double* gw = grad_weight.raw();

#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < g.out_channels; ++oc) {
        const double* gplane = go + static_cast<std::size_t>(oc) * oh * ow;
        if (grad_bias) {
            double acc = 0.0;
            for (int j = 0; j < oh * ow; ++j) acc += gplane[j];
            (*grad_bias)[oc] += acc;
        }
        for (int i = 0; i < ic; ++i) {
            const double* plane = in + static_cast<std::size_t>(i) * ih * iw;
            double* wi = gw + (static_cast<std::size_t>(oc) * ic + i) * k * k;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    double acc = 0.0;
                    for (int y = 0; y < oh; ++y) {
                        const double* grow = gplane + static_cast<std::size_t>(y) * ow;
                        const double* src = plane + static_cast<std::size_t>(y * s + ky) * iw + kx;
                        if (s == 1) {
                            for (int x = 0; x < ow; ++x) acc += grow[x] * src[x];
                        } else {
                            for (int x = 0; x < ow; ++x) acc += grow[x] * src[x * s];
                        }
                    }
                    wi[ky * k + kx] += acc;
                }
            }
        }
    }
}

Tensor pad_replicate(const Tensor& x, int p) {
    if (p == 0) return x;
    const int c = x.channels(), h = x.height(), w = x.width();
    Tensor out({c, h + 2 * p, w + 2 * p});
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h + 2 * p; ++y) {
            const int sy = std::clamp(y - p, 0, h - 1);
            for (int xx = 0; xx < w + 2 * p; ++xx) out.at(ch, y, xx) = x.at(ch, sy, std::clamp(xx - p, 0, w - 1));
        }
    return out;
}

void pad_replicate_backward(const Tensor& grad_padded, int p, Tensor& grad_x) {
    const int c = grad_x.channels(), h = grad_x.height(), w = grad_x.width();
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h + 2 * p; ++y) {
            const int sy = std::clamp(y - p, 0, h - 1);
            for (int xx = 0; xx < w + 2 * p; ++xx)
                grad_x.at(ch, sy, std::clamp(xx - p, 0, w - 1)) += grad_padded.at(ch, y, xx);
        }
}

namespace reference {

void conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor* bias, int stride, Tensor& out) {
    const auto g = conv_geometry(input, weight, stride);
    for (int o = 0; o < g.out_channels; ++o)
        for (int y = 0; y < g.out_height(); ++y)
            for (int x = 0; x < g.out_width(); ++x) {
                double acc = bias ? (*bias)[o] : 0.0;
                for (int i = 0; i < g.in_channels; ++i)
                    for (int ky = 0; ky < g.kernel; ++ky)
                        for (int kx = 0; kx < g.kernel; ++kx) {
                            const std::size_t wi = ((static_cast<std::size_t>(o) * g.in_channels + i) * g.kernel + ky) *
                                                       g.kernel + kx;
                            acc += weight[wi] * input.at(i, y * stride + ky, x * stride + kx);
                        }
                out.at(o, y, x) = acc;
            }
}

void conv2d_backward_input(const Tensor& grad_out, const Tensor& weight, int stride, Tensor& grad_input) {
    const auto g = conv_geometry(grad_input, weight, stride);
    for (int o = 0; o < g.out_channels; ++o)
        for (int y = 0; y < g.out_height(); ++y)
            for (int x = 0; x < g.out_width(); ++x)
                for (int i = 0; i < g.in_channels; ++i)
                    for (int ky = 0; ky < g.kernel; ++ky)
                        for (int kx = 0; kx < g.kernel; ++kx) {
                            const std::size_t wi = ((static_cast<std::size_t>(o) * g.in_channels + i) * g.kernel + ky) *
                                                       g.kernel + kx;
                            grad_input.at(i, y * stride + ky, x * stride + kx) += weight[wi] * grad_out.at(o, y, x);
                        }
}

void conv2d_backward_weight(const Tensor& grad_out, const Tensor& input, int stride, Tensor& grad_weight,
                            Tensor* grad_bias) {
    const auto g = conv_geometry(input, grad_weight, stride);
    for (int o = 0; o < g.out_channels; ++o)
        for (int y = 0; y < g.out_height(); ++y)
            for (int x = 0; x < g.out_width(); ++x) {
                const double go = grad_out.at(o, y, x);
                if (grad_bias) (*grad_bias)[o] += go;
                for (int i = 0; i < g.in_channels; ++i)
                    for (int ky = 0; ky < g.kernel; ++ky)
                        for (int kx = 0; kx < g.kernel; ++kx) {
                            const std::size_t wi = ((static_cast<std::size_t>(o) * g.in_channels + i) * g.kernel + ky) *
                                                       g.kernel + kx;
                            grad_weight[wi] += go * input.at(i, y * stride + ky, x * stride + kx);
                        }
            }
}

}  // namespace reference

}  // namespace zoomsr::nn::kernels

#include "zoomsr/nn/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "zoomsr/nn/kernels.hpp"

namespace zoomsr::nn {

namespace {

thread_local bool g_grad_enabled = true;

using NodePtr = std::shared_ptr<Node>;

Var make_op(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> bw) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    bool needs = false;
    if (g_grad_enabled)
        for (const auto& in : inputs) needs = needs || in.requires_grad();
    if (needs) {
        node->requires_grad = true;
        node->inputs.reserve(inputs.size());
        for (const auto& in : inputs) node->inputs.push_back(in.node());
        node->backward = std::move(bw);
    }
    return Var(std::move(node));
}

// Gradient sink for input i, or nullptr when that input does not need one.
Tensor* sink(Node& n, std::size_t i) {
    auto& in = n.inputs[i];
    return in->requires_grad ? &in->grad_buffer() : nullptr;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double logistic(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a.value().same_shape(b.value()))
        throw DimensionError(std::string(op) + ": shape mismatch " + a.value().shape_string() + " vs " +
                             b.value().shape_string());
}

void require_chw(const Var& x, const char* op) {
    if (x.value().rank() != 3) throw DimensionError(std::string(op) + ": expected (C,H,W) tensor");
}

struct AxisTap {
    int lo, hi;
    double w_hi;
};

std::vector<AxisTap> bilinear_taps(int in_size, int out_size) {
    std::vector<AxisTap> taps(out_size);
    const double s = static_cast<double>(in_size) / out_size;
    for (int i = 0; i < out_size; ++i) {
        const double src = std::clamp((i + 0.5) * s - 0.5, 0.0, static_cast<double>(in_size - 1));
        const int lo = static_cast<int>(std::floor(src));
        taps[i] = {lo, std::min(lo + 1, in_size - 1), src - lo};
    }
    return taps;
}

}  // namespace

Tensor& Node::grad_buffer() {
    if (grad.size() != value.size() || grad.shape() != value.shape()) grad = Tensor::zeros_like(value);
    return grad;
}

void Var::zero_grad() {
    if (node_ && node_->grad.size()) node_->grad.fill(0.0);
}

Var constant(Tensor value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    return Var(std::move(node));
}

Var parameter(Tensor value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad = true;
    return Var(std::move(node));
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() noexcept { return g_grad_enabled; }

void backward(const Var& root) {
    if (!root.defined() || root.value().size() != 1) throw DimensionError("backward: root must be a scalar");
    if (!root.requires_grad()) return;

    // Iterative post-order DFS -> topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
    seen.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (child->requires_grad && !seen.count(child)) {
                seen.insert(child);
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    // Intermediate gradients start from zero for this pass; leaves keep accumulating.
    for (Node* n : order)
        if (n->backward) n->grad_buffer().fill(0.0);
    root.node()->grad_buffer()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward) (*it)->backward(**it);
}

// ---- layers --------------------------------------------------------------------------

Var pad_replicate(const Var& x, int pad) {
    require_chw(x, "pad_replicate");
    if (pad == 0) return x;
    return make_op(kernels::pad_replicate(x.value(), pad), {x}, [pad](Node& n) {
        if (auto* g = sink(n, 0)) kernels::pad_replicate_backward(n.grad, pad, *g);
    });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad) {
    require_chw(x, "conv2d");
    if (pad < 0) pad = weight.value().dim(2) / 2;
    const Var padded = pad_replicate(x, pad);
    const auto geo = kernels::conv_geometry(padded.value(), weight.value(), stride);
    if (bias.defined() && bias.value().size() != static_cast<std::size_t>(geo.out_channels))
        throw DimensionError("conv2d: bias length mismatch");
    Tensor out({geo.out_channels, geo.out_height(), geo.out_width()});
    kernels::conv2d_forward(padded.value(), weight.value(), bias.defined() ? &bias.value() : nullptr, stride, out);
    std::vector<Var> inputs{padded, weight};
    if (bias.defined()) inputs.push_back(bias);
    return make_op(std::move(out), inputs, [stride](Node& n) {
        if (auto* gx = sink(n, 0)) kernels::conv2d_backward_input(n.grad, n.inputs[1]->value, stride, *gx);
        Tensor* gw = sink(n, 1);
        Tensor* gb = n.inputs.size() > 2 ? sink(n, 2) : nullptr;
        if (gw) {
            kernels::conv2d_backward_weight(n.grad, n.inputs[0]->value, stride, *gw, gb);
        } else if (gb) {
            const int hw = n.grad.height() * n.grad.width();
            for (int o = 0; o < n.grad.channels(); ++o)
                for (int j = 0; j < hw; ++j) (*gb)[o] += n.grad[static_cast<std::size_t>(o) * hw + j];
        }
    });
}

Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias, int stride) {
    require_chw(x, "conv_transpose2d");
    const Tensor& w = weight.value();  // (I, O, K, K): I = x channels
    if (w.rank() != 4 || w.dim(0) != x.value().channels())
        throw DimensionError("conv_transpose2d: weight must be (in, out, k, k)");
    const int k = w.dim(2), out_c = w.dim(1);
    const int h = x.value().height(), wd = x.value().width();
    const int full_h = (h - 1) * stride + k, full_w = (wd - 1) * stride + k;
    const int off = (k - 1) / 2;
    const int oh = h * stride, ow = wd * stride;
    if (off + oh > full_h || off + ow > full_w) throw DimensionError("conv_transpose2d: kernel too small for stride");

    // The transposed conv is the input-adjoint of a conv whose weight is (O=in, I=out).
    Tensor full({out_c, full_h, full_w});
    kernels::conv2d_backward_input(x.value(), w, stride, full);
    Tensor out({out_c, oh, ow});
    for (int c = 0; c < out_c; ++c)
        for (int y = 0; y < oh; ++y)
            for (int xx = 0; xx < ow; ++xx)
                out.at(c, y, xx) = full.at(c, y + off, xx + off) + (bias.defined() ? bias.value()[c] : 0.0);
    std::vector<Var> inputs{x, weight};
    if (bias.defined()) inputs.push_back(bias);
    return make_op(std::move(out), inputs, [stride, off, full_h, full_w](Node& n) {
        const int out_c = n.grad.channels(), oh = n.grad.height(), ow = n.grad.width();
        Tensor gfull({out_c, full_h, full_w});
        for (int c = 0; c < out_c; ++c)
            for (int y = 0; y < oh; ++y)
                for (int xx = 0; xx < ow; ++xx) gfull.at(c, y + off, xx + off) = n.grad.at(c, y, xx);
        if (auto* gx = sink(n, 0)) {
            Tensor tmp({n.inputs[0]->value.channels(), n.inputs[0]->value.height(), n.inputs[0]->value.width()});
            kernels::conv2d_forward(gfull, n.inputs[1]->value, nullptr, stride, tmp);
            for (std::size_t i = 0; i < tmp.size(); ++i) (*gx)[i] += tmp[i];
        }
        if (auto* gw = sink(n, 1)) {
            // d/dw of sum_o g_full[o] * (adjoint of conv on x) == backward_weight with roles swapped.
            kernels::conv2d_backward_weight(n.inputs[0]->value, gfull, stride, *gw, nullptr);
        }
        if (n.inputs.size() > 2)
            if (auto* gb = sink(n, 2))
                for (int c = 0; c < out_c; ++c)
                    for (int y = 0; y < oh; ++y)
                        for (int xx = 0; xx < ow; ++xx) (*gb)[c] += n.grad.at(c, y, xx);
    });
}

Var leaky_relu(const Var& x, double slope) {
    Tensor out = x.value();
    for (auto& v : out.storage()) v = v > 0 ? v : slope * v;
    return make_op(std::move(out), {x}, [slope](Node& n) {
        if (auto* g = sink(n, 0)) {
            const auto& in = n.inputs[0]->value;
            for (std::size_t i = 0; i < in.size(); ++i) (*g)[i] += n.grad[i] * (in[i] > 0 ? 1.0 : slope);
        }
    });
}

Var relu(const Var& x) { return leaky_relu(x, 0.0); }

Var sigmoid(const Var& x) {
    Tensor out = x.value();
    for (auto& v : out.storage()) v = logistic(v);
    return make_op(std::move(out), {x}, [](Node& n) {
        if (auto* g = sink(n, 0))
            for (std::size_t i = 0; i < n.value.size(); ++i) (*g)[i] += n.grad[i] * n.value[i] * (1.0 - n.value[i]);
    });
}

Var tanh(const Var& x) {
    Tensor out = x.value();
    for (auto& v : out.storage()) v = std::tanh(v);
    return make_op(std::move(out), {x}, [](Node& n) {
        if (auto* g = sink(n, 0))
            for (std::size_t i = 0; i < n.value.size(); ++i) (*g)[i] += n.grad[i] * (1.0 - n.value[i] * n.value[i]);
    });
}

Var upsample_nearest(const Var& x, int r) {
    require_chw(x, "upsample_nearest");
    const Tensor& in = x.value();
    const int c = in.channels(), h = in.height(), w = in.width();
    Tensor out({c, h * r, w * r});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h * r; ++y)
            for (int xx = 0; xx < w * r; ++xx) out.at(ch, y, xx) = in.at(ch, y / r, xx / r);
    return make_op(std::move(out), {x}, [r](Node& n) {
        if (auto* g = sink(n, 0))
            for (int ch = 0; ch < n.grad.channels(); ++ch)
                for (int y = 0; y < n.grad.height(); ++y)
                    for (int xx = 0; xx < n.grad.width(); ++xx) g->at(ch, y / r, xx / r) += n.grad.at(ch, y, xx);
    });
}

Var upsample_bilinear(const Var& x, int r) {
    require_chw(x, "upsample_bilinear");
    const Tensor& in = x.value();
    const int c = in.channels(), h = in.height(), w = in.width();
    auto ty = std::make_shared<std::vector<AxisTap>>(bilinear_taps(h, h * r));
    auto tx = std::make_shared<std::vector<AxisTap>>(bilinear_taps(w, w * r));
    Tensor out({c, h * r, w * r});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h * r; ++y) {
            const auto [y0, y1, wy] = (*ty)[y];
            for (int xx = 0; xx < w * r; ++xx) {
                const auto [x0, x1, wx] = (*tx)[xx];
                const double top = (1.0 - wx) * in.at(ch, y0, x0) + wx * in.at(ch, y0, x1);
                const double bot = (1.0 - wx) * in.at(ch, y1, x0) + wx * in.at(ch, y1, x1);
                out.at(ch, y, xx) = (1.0 - wy) * top + wy * bot;
            }
        }
    return make_op(std::move(out), {x}, [ty, tx](Node& n) {
        auto* g = sink(n, 0);
        if (!g) return;
        for (int ch = 0; ch < n.grad.channels(); ++ch)
            for (int y = 0; y < n.grad.height(); ++y) {
                const auto [y0, y1, wy] = (*ty)[y];
                for (int xx = 0; xx < n.grad.width(); ++xx) {
                    const auto [x0, x1, wx] = (*tx)[xx];
                    const double go = n.grad.at(ch, y, xx);
                    g->at(ch, y0, x0) += go * (1.0 - wy) * (1.0 - wx);
                    g->at(ch, y0, x1) += go * (1.0 - wy) * wx;
                    g->at(ch, y1, x0) += go * wy * (1.0 - wx);
                    g->at(ch, y1, x1) += go * wy * wx;
                }
            }
    });
}

Var maxpool2(const Var& x) {
    require_chw(x, "maxpool2");
    const Tensor& in = x.value();
    const int c = in.channels(), h = in.height() / 2, w = in.width() / 2;
    if (h == 0 || w == 0) throw DimensionError("maxpool2: input smaller than 2x2");
    Tensor out({c, h, w});
    auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
    std::size_t idx = 0;
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx, ++idx) {
                std::size_t best = (static_cast<std::size_t>(ch) * in.height() + 2 * y) * in.width() + 2 * xx;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const std::size_t j =
                            (static_cast<std::size_t>(ch) * in.height() + 2 * y + dy) * in.width() + 2 * xx + dx;
                        if (in[j] > in[best]) best = j;
                    }
                (*argmax)[idx] = best;
                out[idx] = in[best];
            }
    return make_op(std::move(out), {x}, [argmax](Node& n) {
        if (auto* g = sink(n, 0))
            for (std::size_t i = 0; i < argmax->size(); ++i) (*g)[(*argmax)[i]] += n.grad[i];
    });
}

Var clamp01(const Var& x) {
    Tensor out = x.value();
    for (auto& v : out.storage()) v = std::clamp(v, 0.0, 1.0);
    return make_op(std::move(out), {x}, [](Node& n) {
        if (auto* g = sink(n, 0)) {
            const auto& in = n.inputs[0]->value;
            for (std::size_t i = 0; i < in.size(); ++i)
                if (in[i] >= 0.0 && in[i] <= 1.0) (*g)[i] += n.grad[i];
        }
    });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
    const Tensor& w = weight.value();
    const std::size_t n_in = x.value().size();
    if (w.rank() != 2 || static_cast<std::size_t>(w.dim(1)) != n_in)
        throw DimensionError("linear: weight " + w.shape_string() + " incompatible with input of " +
                             std::to_string(n_in) + " elements");
    const int n_out = w.dim(0);
    Tensor out({n_out});
    const double* xv = x.value().raw();
    for (int o = 0; o < n_out; ++o) {
        const double* row = w.raw() + static_cast<std::size_t>(o) * n_in;
        double acc = bias.defined() ? bias.value()[o] : 0.0;
        for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * xv[i];
        out[o] = acc;
    }
    std::vector<Var> inputs{x, weight};
    if (bias.defined()) inputs.push_back(bias);
    return make_op(std::move(out), inputs, [n_in, n_out](Node& n) {
        const Tensor& xin = n.inputs[0]->value;
        const Tensor& w = n.inputs[1]->value;
        if (auto* gx = sink(n, 0))
            for (int o = 0; o < n_out; ++o) {
                const double go = n.grad[o];
                const double* row = w.raw() + static_cast<std::size_t>(o) * n_in;
                for (std::size_t i = 0; i < n_in; ++i) (*gx)[i] += go * row[i];
            }
        if (auto* gw = sink(n, 1))
            for (int o = 0; o < n_out; ++o) {
                const double go = n.grad[o];
                double* row = gw->raw() + static_cast<std::size_t>(o) * n_in;
                for (std::size_t i = 0; i < n_in; ++i) row[i] += go * xin[i];
            }
        if (n.inputs.size() > 2)
            if (auto* gb = sink(n, 2))
                for (int o = 0; o < n_out; ++o) (*gb)[o] += n.grad[o];
    });
}

// ---- arithmetic ----------------------------------------------------------------------

Var add(const Var& a, const Var& b) {
    require_same_shape(a, b, "add");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
    return make_op(std::move(out), {a, b}, [](Node& n) {
        for (std::size_t k = 0; k < 2; ++k)
            if (auto* g = sink(n, k))
                for (std::size_t i = 0; i < n.grad.size(); ++i) (*g)[i] += n.grad[i];
    });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
    return make_op(std::move(out), {a, b}, [](Node& n) {
        if (auto* g = sink(n, 0))
            for (std::size_t i = 0; i < n.grad.size(); ++i) (*g)[i] += n.grad[i];
        if (auto* g = sink(n, 1))
            for (std::size_t i = 0; i < n.grad.size(); ++i) (*g)[i] -= n.grad[i];
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
    return make_op(std::move(out), {a, b}, [](Node& n) {
        const auto& av = n.inputs[0]->value;
        const auto& bv = n.inputs[1]->value;
        if (auto* g = sink(n, 0))
            for (std::size_t i = 0; i < n.grad.size(); ++i) (*g)[i] += n.grad[i] * bv[i];
        if (auto* g = sink(n, 1))
            for (std::size_t i = 0; i < n.grad.size(); ++i) (*g)[i] += n.grad[i] * av[i];
    });
}

Var scale(const Var& a, double s) {
    Tensor out = a.value();
    for (auto& v : out.storage()) v *= s;
    return make_op(std::move(out), {a}, [s](Node& n) {
        if (auto* g = sink(n, 0))
            for (std::size_t i = 0; i < n.grad.size(); ++i) (*g)[i] += s * n.grad[i];
    });
}

Var add_scalar(const Var& a, double s) {
    Tensor out = a.value();
    for (auto& v : out.storage()) v += s;
    return make_op(std::move(out), {a}, [](Node& n) {
        if (auto* g = sink(n, 0))
            for (std::size_t i = 0; i < n.grad.size(); ++i) (*g)[i] += n.grad[i];
    });
}

Var concat(const std::vector<Var>& xs) {
    if (xs.empty()) throw DimensionError("concat: no inputs");
    for (const auto& x : xs) require_chw(x, "concat");
    const int h = xs[0].value().height(), w = xs[0].value().width();
    int total = 0;
    for (const auto& x : xs) {
        if (x.value().height() != h || x.value().width() != w)
            throw DimensionError("concat: mismatched spatial dimensions");
        total += x.value().channels();
    }
    if (xs.size() == 1) return xs[0];
    Tensor out({total, h, w});
    std::size_t off = 0;
    for (const auto& x : xs) {
        std::copy(x.value().storage().begin(), x.value().storage().end(), out.storage().begin() + off);
        off += x.value().size();
    }
    return make_op(std::move(out), xs, [](Node& n) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
            const std::size_t len = n.inputs[k]->value.size();
            if (auto* g = sink(n, k))
                for (std::size_t i = 0; i < len; ++i) (*g)[i] += n.grad[off + i];
            off += len;
        }
    });
}

Var slice_channels(const Var& x, int first, int count) {
    require_chw(x, "slice_channels");
    const Tensor& in = x.value();
    if (first < 0 || count <= 0 || first + count > in.channels())
        throw DimensionError("slice_channels: range out of bounds");
    const std::size_t plane = static_cast<std::size_t>(in.height()) * in.width();
    Tensor out({count, in.height(), in.width()});
    std::copy(in.raw() + first * plane, in.raw() + (first + count) * plane, out.raw());
    return make_op(std::move(out), {x}, [first, plane](Node& n) {
        if (auto* g = sink(n, 0))
            for (std::size_t i = 0; i < n.grad.size(); ++i) (*g)[first * plane + i] += n.grad[i];
    });
}

Var stack(const std::vector<Var>& scalars) {
    if (scalars.empty()) throw DimensionError("stack: no inputs");
    Tensor out({static_cast<int>(scalars.size())});
    for (std::size_t i = 0; i < scalars.size(); ++i) out[i] = scalars[i].value().item();
    return make_op(std::move(out), scalars, [](Node& n) {
        for (std::size_t k = 0; k < n.inputs.size(); ++k)
            if (auto* g = sink(n, k)) (*g)[0] += n.grad[k];
    });
}

Var sum(const Var& x) {
    double acc = 0.0;
    for (double v : x.value().storage()) acc += v;
    return make_op(Tensor::scalar(acc), {x}, [](Node& n) {
        if (auto* g = sink(n, 0))
            for (auto& v : g->storage()) v += n.grad[0];
    });
}

Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var weighted_sum(const std::vector<Var>& scalars, const std::vector<double>& weights) {
    if (scalars.size() != weights.size() || scalars.empty()) throw DimensionError("weighted_sum: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < scalars.size(); ++i) acc += weights[i] * scalars[i].value().item();
    return make_op(Tensor::scalar(acc), scalars, [weights](Node& n) {
        for (std::size_t k = 0; k < n.inputs.size(); ++k)
            if (auto* g = sink(n, k)) (*g)[0] += weights[k] * n.grad[0];
    });
}

// ---- losses --------------------------------------------------------------------------

Var charbonnier_mean(const Var& a, const Var& b, double eps) {
    require_same_shape(a, b, "charbonnier_mean");
    const auto& av = a.value();
    const auto& bv = b.value();
    const double eps2 = eps * eps;
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double d = av[i] - bv[i];
        acc += std::sqrt(d * d + eps2);
    }
    const double inv_n = 1.0 / static_cast<double>(av.size());
    return make_op(Tensor::scalar(acc * inv_n), {a, b}, [eps2, inv_n](Node& n) {
        const auto& av = n.inputs[0]->value;
        const auto& bv = n.inputs[1]->value;
        Tensor* ga = sink(n, 0);
        Tensor* gb = sink(n, 1);
        const double go = n.grad[0] * inv_n;
        for (std::size_t i = 0; i < av.size(); ++i) {
            const double d = av[i] - bv[i];
            const double gd = go * d / std::sqrt(d * d + eps2);
            if (ga) (*ga)[i] += gd;
            if (gb) (*gb)[i] -= gd;
        }
    });
}

Var mse_mean(const Var& a, const Var& b) {
    require_same_shape(a, b, "mse_mean");
    const auto& av = a.value();
    const auto& bv = b.value();
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) acc += (av[i] - bv[i]) * (av[i] - bv[i]);
    const double inv_n = 1.0 / static_cast<double>(av.size());
    return make_op(Tensor::scalar(acc * inv_n), {a, b}, [inv_n](Node& n) {
        const auto& av = n.inputs[0]->value;
        const auto& bv = n.inputs[1]->value;
        Tensor* ga = sink(n, 0);
        Tensor* gb = sink(n, 1);
        const double go = 2.0 * n.grad[0] * inv_n;
        for (std::size_t i = 0; i < av.size(); ++i) {
            const double gd = go * (av[i] - bv[i]);
            if (ga) (*ga)[i] += gd;
            if (gb) (*gb)[i] -= gd;
        }
    });
}

Var relativistic_loss(const Var& c_real, const Var& c_fake, bool generator_side) {
    const auto& r = c_real.value();
    const auto& f = c_fake.value();
    if (r.size() == 0 || f.size() == 0) throw std::invalid_argument("relativistic_loss: empty batch");
    const double nr = static_cast<double>(r.size()), nf = static_cast<double>(f.size());
    double mean_r = 0.0, mean_f = 0.0;
    for (double v : r.storage()) mean_r += v;
    for (double v : f.storage()) mean_f += v;
    mean_r /= nr;
    mean_f /= nf;
    // L = mean_i softplus(s1 * (r_i - mean_f)) + mean_j softplus(s2 * (f_j - mean_r))
    const double s1 = generator_side ? 1.0 : -1.0;
    const double s2 = -s1;
    double loss = 0.0;
    for (double v : r.storage()) loss += softplus(s1 * (v - mean_f)) / nr;
    for (double v : f.storage()) loss += softplus(s2 * (v - mean_r)) / nf;
    return make_op(Tensor::scalar(loss), {c_real, c_fake}, [s1, s2, mean_r, mean_f, nr, nf](Node& n) {
        const auto& r = n.inputs[0]->value;
        const auto& f = n.inputs[1]->value;
        const double go = n.grad[0];
        std::vector<double> da(r.size()), db(f.size());
        double sum_da = 0.0, sum_db = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            da[i] = s1 * logistic(s1 * (r[i] - mean_f)) / nr;
            sum_da += da[i];
        }
        for (std::size_t j = 0; j < f.size(); ++j) {
            db[j] = s2 * logistic(s2 * (f[j] - mean_r)) / nf;
            sum_db += db[j];
        }
        if (auto* g = sink(n, 0))
            for (std::size_t i = 0; i < r.size(); ++i) (*g)[i] += go * (da[i] - sum_db / nr);
        if (auto* g = sink(n, 1))
            for (std::size_t j = 0; j < f.size(); ++j) (*g)[j] += go * (db[j] - sum_da / nf);
    });
}

Var softmax_cross_entropy(const Var& logits, int label) {
    const auto& z = logits.value();
    if (label < 0 || static_cast<std::size_t>(label) >= z.size())
        throw std::out_of_range("softmax_cross_entropy: label out of range");
    const double zmax = *std::max_element(z.storage().begin(), z.storage().end());
    double denom = 0.0;
    for (double v : z.storage()) denom += std::exp(v - zmax);
    const double loss = -(z[label] - zmax - std::log(denom));
    return make_op(Tensor::scalar(loss), {logits}, [label, zmax, denom](Node& n) {
        if (auto* g = sink(n, 0)) {
            const auto& z = n.inputs[0]->value;
            for (std::size_t i = 0; i < z.size(); ++i) {
                const double p = std::exp(z[i] - zmax) / denom;
                (*g)[i] += n.grad[0] * (p - (static_cast<int>(i) == label ? 1.0 : 0.0));
            }
        }
    });
}

}  // namespace zoomsr::nn

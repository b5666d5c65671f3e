#pragma once

// Minimal reverse-mode autodiff over Tensor values. Every op records its inputs and a
// closure that pushes the output gradient back into them; `backward(loss)` walks the
// recorded graph in reverse topological order. Parameters are long-lived leaf nodes whose
// gradients accumulate until `zero_grad`.

#include <functional>
#include <memory>
#include <vector>

#include "zoomsr/nn/tensor.hpp"

namespace zoomsr::nn {

struct Node {
    Tensor value;
    Tensor grad;  // allocated on first accumulation
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward;
    bool requires_grad = false;

    Tensor& grad_buffer();
};

class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    const Tensor& value() const { return node_->value; }
    Tensor& mutable_value() { return node_->value; }
    /// Gradient accumulated so far (zeros if nothing flowed here).
    const Tensor& grad() const { return node_->grad_buffer(); }
    Tensor& grad() { return node_->grad_buffer(); }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    const std::vector<int>& shape() const { return node_->value.shape(); }
    bool defined() const noexcept { return static_cast<bool>(node_); }
    const std::shared_ptr<Node>& node() const noexcept { return node_; }

    void zero_grad();

private:
    std::shared_ptr<Node> node_;
};

Var constant(Tensor value);
Var parameter(Tensor value);

/// Seeds d(root)/d(root) = 1 and back-propagates. root must hold a single element.
void backward(const Var& root);

/// While alive, ops on this thread do not record graph edges (inference mode).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled() noexcept;

// ---- layer ops ---------------------------------------------------------------------

/// 2-D correlation with replicate padding `pad` on each side. weight (O,I,K,K), bias (O).
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride = 1, int pad = -1);
/// Transposed convolution (weight (I,O,K,K)), cropped to exactly stride x the input size.
/// Kept as the reference layer that produces checkerboard artefacts; the generator never uses it.
Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias, int stride);
Var pad_replicate(const Var& x, int pad);
Var leaky_relu(const Var& x, double slope);
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var tanh(const Var& x);
Var upsample_nearest(const Var& x, int r);
Var upsample_bilinear(const Var& x, int r);
Var maxpool2(const Var& x);
Var clamp01(const Var& x);
/// Dense layer on the flattened input: weight (out, n), bias (out) -> (out).
Var linear(const Var& x, const Var& weight, const Var& bias);

// ---- structural / arithmetic ---------------------------------------------------------

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var concat(const std::vector<Var>& xs);  // along channels (dim 0)
Var slice_channels(const Var& x, int first, int count);
Var stack(const std::vector<Var>& scalars);  // n single-element vars -> (n)
Var sum(const Var& x);
Var mean(const Var& x);
/// Weighted sum of scalar vars.
Var weighted_sum(const std::vector<Var>& scalars, const std::vector<double>& weights);

// ---- reductions used as losses ---------------------------------------------------------

/// mean over all elements of sqrt((a-b)^2 + eps^2).
Var charbonnier_mean(const Var& a, const Var& b, double eps);
/// mean over all elements of (a-b)^2.
Var mse_mean(const Var& a, const Var& b);
/// Relativistic-average GAN loss on score vectors. generator_side selects the generator's
/// objective; otherwise the discriminator's mirrored objective.
Var relativistic_loss(const Var& c_real, const Var& c_fake, bool generator_side);
/// -log softmax(logits)[label].
Var softmax_cross_entropy(const Var& logits, int label);

}  // namespace zoomsr::nn

#include "zoomsr/losses.hpp"

#include <cmath>

namespace zoomsr::loss {

void LossWeights::validate() const {
    if (mu < 0 || eta < 0 || lambda < 0) throw std::invalid_argument("loss weights must be non-negative");
}

Image charbonnier(const Image& y_true, const Image& y_pred, double eps) {
    if (!y_true.same_shape(y_pred)) throw DimensionError("charbonnier: shape mismatch");
    if (!(eps > 0)) throw std::invalid_argument("charbonnier: eps must be positive");
    Image out(y_true.height(), y_true.width(), y_true.channels());
    const auto t = y_true.data();
    const auto p = y_pred.data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::sqrt((t[i] - p[i]) * (t[i] - p[i]) + eps * eps);
    return out;
}

Var pixel_loss(const Var& hr, const Var& sr, double eps) { return nn::charbonnier_mean(hr, sr, eps); }

Var content_loss(const Var& hr_features, const Var& sr_features, double eps) {
    return nn::charbonnier_mean(hr_features, sr_features, eps);
}

Var adversarial_loss_generator(const Var& c_real, const Var& c_fake) {
    return nn::relativistic_loss(c_real, c_fake, true);
}

Var adversarial_loss_discriminator(const Var& c_real, const Var& c_fake) {
    return nn::relativistic_loss(c_real, c_fake, false);
}

Var perceptual_total(const Var& pixel, const Var& content, const Var& adv, const LossWeights& w) {
    return nn::weighted_sum({pixel, content, adv}, {w.mu, w.eta, w.lambda});
}

double pixel_loss(const Image& hr, const Image& sr, ScaleFactor, double eps) {
    if (!hr.same_shape(sr)) throw DimensionError("pixel_loss: shape mismatch");
    nn::NoGradGuard guard;
    return pixel_loss(nn::constant(nn::to_tensor(hr)), nn::constant(nn::to_tensor(sr)), eps).value().item();
}

double content_loss(const Image& hr, const Image& sr, int layer, const net::FeatureExtractor& extractor, double eps) {
    if (!hr.same_shape(sr)) throw DimensionError("content_loss: shape mismatch");
    nn::NoGradGuard guard;
    const Var fh = extractor.forward(nn::constant(nn::to_tensor(hr)), layer);
    const Var fs = extractor.forward(nn::constant(nn::to_tensor(sr)), layer);
    return content_loss(fh, fs, eps).value().item();
}

namespace {

Var scores(std::span<const double> c) {
    if (c.empty()) throw std::invalid_argument("adversarial loss: empty batch");
    return nn::constant(nn::Tensor({static_cast<int>(c.size())}, std::vector<double>(c.begin(), c.end())));
}

}  // namespace

double adversarial_loss_generator(std::span<const double> c_real, std::span<const double> c_fake) {
    return adversarial_loss_generator(scores(c_real), scores(c_fake)).value().item();
}

double adversarial_loss_discriminator(std::span<const double> c_real, std::span<const double> c_fake) {
    return adversarial_loss_discriminator(scores(c_real), scores(c_fake)).value().item();
}

double perceptual_total(double pixel, double content, double adv, const LossWeights& w) {
    return w.mu * pixel + w.eta * content + w.lambda * adv;
}

}  // namespace zoomsr::loss

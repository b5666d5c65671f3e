#pragma once

#include <span>

#include "zoomsr/image.hpp"
#include "zoomsr/networks.hpp"

namespace zoomsr::loss {

using nn::Var;

struct LossWeights {
    double mu = 0.1;        // pixel
    double eta = 1.0;       // content
    double lambda = 0.001;  // adversarial

    void validate() const;
};

inline constexpr double kDefaultCharbonnierEps = 1e-3;

/// Element-wise sqrt((t - p)^2 + eps^2).
Image charbonnier(const Image& y_true, const Image& y_pred, double eps = kDefaultCharbonnierEps);

/// Mean Charbonnier over every pixel and channel of the x r output (the 1/(r^2 W H)
/// normalisation with W, H the low-resolution size, additionally averaged over channels).
double pixel_loss(const Image& hr, const Image& sr, ScaleFactor r, double eps = kDefaultCharbonnierEps);
/// Mean Charbonnier between extractor features at `layer` (averaged over W_i H_i and channels).
double content_loss(const Image& hr, const Image& sr, int layer, const net::FeatureExtractor& extractor,
                    double eps = kDefaultCharbonnierEps);

/// -E_r[log(1 - D_Ra(x_r, x_f))] - E_f[log D_Ra(x_f, x_r)] with E = batch mean.
double adversarial_loss_generator(std::span<const double> c_real, std::span<const double> c_fake);
/// -E_r[log D_Ra(x_r, x_f)] - E_f[log(1 - D_Ra(x_f, x_r))].
double adversarial_loss_discriminator(std::span<const double> c_real, std::span<const double> c_fake);

double perceptual_total(double pixel, double content, double adv, const LossWeights& w);

// Graph versions used by the trainer.
Var pixel_loss(const Var& hr, const Var& sr, double eps);
Var content_loss(const Var& hr_features, const Var& sr_features, double eps);
Var adversarial_loss_generator(const Var& c_real, const Var& c_fake);
Var adversarial_loss_discriminator(const Var& c_real, const Var& c_fake);
Var perceptual_total(const Var& pixel, const Var& content, const Var& adv, const LossWeights& w);

}  // namespace zoomsr::loss

#pragma once

#include <opencv2/core.hpp>

#include "zoomsr/geometry.hpp"
#include "zoomsr/image.hpp"

namespace zoomsr::tracker {

struct KcfParams {
    double padding = 2.5;               // search window = (1 + padding) x target size
    double label_sigma_factor = 0.1;    // sigma_label = sqrt(w h) * factor
    double kernel_sigma = 0.5;
    double lambda = 1e-4;
    double interp = 0.02;               // gamma

    void validate() const;
};

/// Learned filter state. Spectra are CV_64FC2 matrices of the window size.
struct KcfModel {
    KcfParams params;
    BBox box;
    int window_w = 0, window_h = 0;
    cv::Mat cosine_window;  // CV_64F
    cv::Mat yf;             // label spectrum
    cv::Mat xf;             // template spectrum
    cv::Mat alphaf;         // dual coefficients
    double last_peak = 0.0;

    KcfModel clone() const;
};

/// Bit-level equality of the learned filter (window, labels, template and dual coefficients).
bool same_model(const KcfModel& a, const KcfModel& b);

/// Grey, mean-removed, cosine-windowed patch of size window_w x window_h centred on (cx, cy);
/// pixels outside the frame are edge-replicated.
cv::Mat extract_patch(const Image& frame, double cx, double cy, const KcfModel& m);

/// Gaussian kernel correlation k(x, z) of two spectra (normalised by the element count).
cv::Mat gaussian_correlation(const cv::Mat& xf, const cv::Mat& zf, double sigma);

/// Real response map of a patch spectrum against the model (zero shift at (0, 0)).
cv::Mat response(const KcfModel& m, const cv::Mat& zf);

KcfModel init_tracker(const Image& frame, const BBox& roi, const KcfParams& params = {});

struct Detection {
    BBox box;
    double peak = 0.0;
    bool lost = false;  // target left the frame; box is the last good one
};

/// Locates the target, then interpolates the model towards the patch at the new position.
std::pair<Detection, KcfModel> detect_and_update(const KcfModel& model, const Image& frame);

}  // namespace zoomsr::tracker

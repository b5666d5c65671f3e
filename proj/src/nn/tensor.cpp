#include "zoomsr/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace zoomsr::nn {

std::size_t shape_volume(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw DimensionError("tensor dimensions must be positive");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)) {
    data_.assign(shape_volume(shape_), fill);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_volume(shape_))
        throw DimensionError("tensor data length does not match shape " + shape_string());
}

double Tensor::item() const {
    if (data_.size() != 1) throw DimensionError("item() on non-scalar tensor " + shape_string());
    return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << ')';
    return os.str();
}

Tensor to_tensor(const Image& img) {
    Tensor t({img.channels(), img.height(), img.width()});
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c) t.at(c, y, x) = img.at(y, x, c);
    return t;
}

Image to_image(const Tensor& t) {
    if (t.rank() != 3) throw DimensionError("to_image expects a (C,H,W) tensor, got " + t.shape_string());
    Image img(t.height(), t.width(), t.channels());
    for (int y = 0; y < t.height(); ++y)
        for (int x = 0; x < t.width(); ++x)
            for (int c = 0; c < t.channels(); ++c) img.at(y, x, c) = t.at(c, y, x);
    return img;
}

}  // namespace zoomsr::nn

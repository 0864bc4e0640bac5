#pragma once

#include <random>
#include <vector>

#include "regad/affine.hpp"
#include "regad/net.hpp"

namespace regad::nn {

/// Predicts a constrained affine transform from a feature map and resamples
/// the map with it. The regression head's last layer is zero-initialized so
/// every mode starts at the exact identity transform.
class SpatialTransformer {
public:
    SpatialTransformer(int in_channels, AffineMode mode);

    struct Output {
        Tensor transformed;
        std::vector<AffineParams> params;  // one per batch sample
    };

    Output forward(const Tensor& f, bool training);
    Tensor backward(const Tensor& grad_transformed);

    /// Regression only (no resampling); used for inspection and tests.
    std::vector<AffineParams> predict(const Tensor& f, bool training);

    void init(std::mt19937_64& rng);
    void collect(const std::string& prefix, std::vector<NamedParam>& out, bool trainable);
    void zero_grad();

    AffineMode mode() const { return mode_; }

private:
    std::vector<std::vector<double>> predict_free(const Tensor& f, bool training);

    AffineMode mode_;
    Conv2d conv1_, conv2_;
    ReLU relu1_, relu2_, relu3_;
    AdaptiveAvgPool2d pool_;
    Linear fc1_, fc2_;

    // forward caches
    Tensor cached_in_;
    std::vector<std::vector<double>> cached_u_;
    std::vector<kernels::Theta> cached_thetas_;
};

}  // namespace regad::nn

#pragma once

#include <random>
#include <vector>

#include "regad/net.hpp"

namespace regad::nn {

/// Convolutional projection head: three 1x1 convolutions with BN+ReLU in
/// between. Keeps spatial resolution; no pooling anywhere.
class Encoder {
public:
    explicit Encoder(int channels);
    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& grad_out);
    void init(std::mt19937_64& rng);
    void collect(const std::string& prefix, std::vector<NamedParam>& out, bool trainable);
    void zero_grad();

private:
    Conv2d conv1_, conv2_, conv3_;
    BatchNorm2d bn1_, bn2_;
    ReLU relu1_, relu2_;
};

/// Bottlenecked prediction head: 1x1 conv to width/4, BN+ReLU, 1x1 conv back.
class Predictor {
public:
    explicit Predictor(int channels);
    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& grad_out);
    void init(std::mt19937_64& rng);
    void collect(const std::string& prefix, std::vector<NamedParam>& out, bool trainable);
    void zero_grad();

private:
    Conv2d conv1_, conv2_;
    BatchNorm2d bn1_;
    ReLU relu1_;
};

}  // namespace regad::nn

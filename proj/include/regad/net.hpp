#pragma once

#include <random>
#include <string>
#include <vector>

#include "regad/kernels.hpp"
#include "regad/tensor.hpp"

namespace regad::nn {

struct NamedParam {
    std::string name;
    Tensor* value = nullptr;
    Tensor* grad = nullptr;  // null for buffers (running statistics)
    bool trainable = false;
};

class Conv2d {
public:
    Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad, bool with_bias);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out, bool need_input_grad = true);
    void init_he(std::mt19937_64& rng);
    void collect(const std::string& prefix, std::vector<NamedParam>& out, bool trainable);
    void zero_grad();

    Tensor weight, grad_weight;
    Tensor bias, grad_bias;
    bool has_bias;
    int stride, pad;

private:
    Tensor cached_in_;
};

class BatchNorm2d {
public:
    explicit BatchNorm2d(int channels);

    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& grad_out);
    void collect(const std::string& prefix, std::vector<NamedParam>& out, bool trainable);
    void zero_grad();

    Tensor gamma, grad_gamma;
    Tensor beta, grad_beta;
    Tensor running_mean, running_var;
    double eps = 1e-5;
    double momentum = 0.1;

private:
    Tensor cached_xhat_;
    std::vector<double> cached_invstd_;
    bool cached_training_ = false;
};

class ReLU {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out) const;

private:
    std::vector<uint8_t> mask_;
};

class MaxPool2d {
public:
    MaxPool2d(int kernel, int stride, int pad) : kernel_(kernel), stride_(stride), pad_(pad) {}
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out) const;

private:
    int kernel_, stride_, pad_;
    std::vector<int32_t> argmax_;
    std::vector<int> in_shape_;
};

class Linear {
public:
    Linear(int in_features, int out_features);
    Tensor forward(const Tensor& x);  // x: [N, in]
    Tensor backward(const Tensor& grad_out);
    void init_he(std::mt19937_64& rng);
    void zero_init();
    void collect(const std::string& prefix, std::vector<NamedParam>& out, bool trainable);
    void zero_grad();

    Tensor weight, grad_weight;  // [out, in]
    Tensor bias, grad_bias;      // [out]

private:
    Tensor cached_in_;
};

class AdaptiveAvgPool2d {
public:
    AdaptiveAvgPool2d(int out_h, int out_w) : out_h_(out_h), out_w_(out_w) {}
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out) const;

private:
    int out_h_, out_w_;
    std::vector<int> in_shape_;
};

/// Residual block: conv-bn-relu-conv-bn plus (optionally projected) skip.
class BasicBlock {
public:
    BasicBlock(int in_ch, int out_ch, int stride);

    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& grad_out, bool need_input_grad = true);
    void init(std::mt19937_64& rng);
    void collect(const std::string& prefix, std::vector<NamedParam>& out, bool trainable);
    void zero_grad();

private:
    Conv2d conv1_, conv2_;
    BatchNorm2d bn1_, bn2_;
    ReLU relu1_, relu2_;
    bool has_down_;
    Conv2d down_conv_;
    BatchNorm2d down_bn_;
};

}  // namespace regad::nn

#pragma once

#include <array>
#include <random>
#include <vector>

#include "regad/net.hpp"

namespace regad::nn {

/// First three residual stages of an 18-layer residual network (the fourth
/// stage is dropped so features keep spatial detail). Stage outputs land at
/// strides 4/8/16 of the input with 64/128/256 channels.
class Backbone {
public:
    Backbone();

    Tensor forward_stem(const Tensor& x, bool training);
    Tensor forward_stage(int stage, const Tensor& x, bool training);  // stage in {1,2,3}

    // Backward through one stage; pass need_input_grad=false at the stem.
    Tensor backward_stage(int stage, const Tensor& grad_out);
    void backward_stem(const Tensor& grad_out);

    void init(std::mt19937_64& rng);
    void collect(std::vector<NamedParam>& out, bool trainable);
    void zero_grad();

    static constexpr std::array<int, 3> kStageChannels = {64, 128, 256};

private:
    Conv2d conv1_;
    BatchNorm2d bn1_;
    ReLU relu_;
    MaxPool2d pool_;
    std::array<BasicBlock, 2> layer1_;
    std::array<BasicBlock, 2> layer2_;
    std::array<BasicBlock, 2> layer3_;
};

}  // namespace regad::nn

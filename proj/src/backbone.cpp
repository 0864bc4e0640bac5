#include "regad/backbone.hpp"

#include <stdexcept>

namespace regad::nn {

Backbone::Backbone()
    : conv1_(3, 64, 7, 2, 3, false),
      bn1_(64),
      pool_(3, 2, 1),
      layer1_{BasicBlock(64, 64, 1), BasicBlock(64, 64, 1)},
      layer2_{BasicBlock(64, 128, 2), BasicBlock(128, 128, 1)},
      layer3_{BasicBlock(128, 256, 2), BasicBlock(256, 256, 1)} {}

Tensor Backbone::forward_stem(const Tensor& x, bool training) {
    return pool_.forward(relu_.forward(bn1_.forward(conv1_.forward(x), training)));
}

Tensor Backbone::forward_stage(int stage, const Tensor& x, bool training) {
    auto run = [&](std::array<BasicBlock, 2>& layer) {
        return layer[1].forward(layer[0].forward(x, training), training);
    };
    switch (stage) {
        case 1: return run(layer1_);
        case 2: return run(layer2_);
        case 3: return run(layer3_);
        default: throw std::invalid_argument("backbone stage must be 1..3");
    }
}

Tensor Backbone::backward_stage(int stage, const Tensor& grad_out) {
    auto run = [&](std::array<BasicBlock, 2>& layer) {
        return layer[0].backward(layer[1].backward(grad_out));
    };
    switch (stage) {
        case 1: return run(layer1_);
        case 2: return run(layer2_);
        case 3: return run(layer3_);
        default: throw std::invalid_argument("backbone stage must be 1..3");
    }
}

void Backbone::backward_stem(const Tensor& grad_out) {
    conv1_.backward(bn1_.backward(relu_.backward(pool_.backward(grad_out))), false);
}

void Backbone::init(std::mt19937_64& rng) {
    conv1_.init_he(rng);
    for (auto& b : layer1_) b.init(rng);
    for (auto& b : layer2_) b.init(rng);
    for (auto& b : layer3_) b.init(rng);
}

void Backbone::collect(std::vector<NamedParam>& out, bool trainable) {
    conv1_.collect("backbone.conv1", out, trainable);
    bn1_.collect("backbone.bn1", out, trainable);
    for (int i = 0; i < 2; ++i) {
        layer1_[static_cast<size_t>(i)].collect("backbone.layer1." + std::to_string(i), out, trainable);
        layer2_[static_cast<size_t>(i)].collect("backbone.layer2." + std::to_string(i), out, trainable);
        layer3_[static_cast<size_t>(i)].collect("backbone.layer3." + std::to_string(i), out, trainable);
    }
}

void Backbone::zero_grad() {
    conv1_.zero_grad();
    bn1_.zero_grad();
    for (auto& b : layer1_) b.zero_grad();
    for (auto& b : layer2_) b.zero_grad();
    for (auto& b : layer3_) b.zero_grad();
}

}  // namespace regad::nn

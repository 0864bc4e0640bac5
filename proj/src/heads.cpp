#include "regad/heads.hpp"

namespace regad::nn {

Encoder::Encoder(int channels)
    : conv1_(channels, channels, 1, 1, 0, false),
      conv2_(channels, channels, 1, 1, 0, false),
      conv3_(channels, channels, 1, 1, 0, true),
      bn1_(channels),
      bn2_(channels) {}

Tensor Encoder::forward(const Tensor& x, bool training) {
    Tensor h = relu1_.forward(bn1_.forward(conv1_.forward(x), training));
    h = relu2_.forward(bn2_.forward(conv2_.forward(h), training));
    return conv3_.forward(h);
}

Tensor Encoder::backward(const Tensor& grad_out) {
    Tensor g = conv3_.backward(grad_out);
    g = conv2_.backward(bn2_.backward(relu2_.backward(g)));
    return conv1_.backward(bn1_.backward(relu1_.backward(g)));
}

void Encoder::init(std::mt19937_64& rng) {
    conv1_.init_he(rng);
    conv2_.init_he(rng);
    conv3_.init_he(rng);
}

void Encoder::collect(const std::string& prefix, std::vector<NamedParam>& out, bool trainable) {
    conv1_.collect(prefix + ".conv1", out, trainable);
    bn1_.collect(prefix + ".bn1", out, trainable);
    conv2_.collect(prefix + ".conv2", out, trainable);
    bn2_.collect(prefix + ".bn2", out, trainable);
    conv3_.collect(prefix + ".conv3", out, trainable);
}

void Encoder::zero_grad() {
    conv1_.zero_grad();
    conv2_.zero_grad();
    conv3_.zero_grad();
    bn1_.zero_grad();
    bn2_.zero_grad();
}

Predictor::Predictor(int channels)
    : conv1_(channels, channels / 4, 1, 1, 0, false),
      conv2_(channels / 4, channels, 1, 1, 0, true),
      bn1_(channels / 4) {}

Tensor Predictor::forward(const Tensor& x, bool training) {
    return conv2_.forward(relu1_.forward(bn1_.forward(conv1_.forward(x), training)));
}

Tensor Predictor::backward(const Tensor& grad_out) {
    Tensor g = conv2_.backward(grad_out);
    return conv1_.backward(bn1_.backward(relu1_.backward(g)));
}

void Predictor::init(std::mt19937_64& rng) {
    conv1_.init_he(rng);
    conv2_.init_he(rng);
}

void Predictor::collect(const std::string& prefix, std::vector<NamedParam>& out,
                        bool trainable) {
    conv1_.collect(prefix + ".conv1", out, trainable);
    bn1_.collect(prefix + ".bn1", out, trainable);
    conv2_.collect(prefix + ".conv2", out, trainable);
}

void Predictor::zero_grad() {
    conv1_.zero_grad();
    conv2_.zero_grad();
    bn1_.zero_grad();
}

}  // namespace regad::nn

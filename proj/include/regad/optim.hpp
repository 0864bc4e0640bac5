#pragma once

#include <cmath>
#include <vector>

#include "regad/net.hpp"

namespace regad {

/// Momentum SGD over a fixed parameter list. Velocity buffers are keyed by
/// position, so the list must be stable across steps.
class SgdMomentum {
public:
    SgdMomentum(double momentum, double weight_decay)
        : momentum_(momentum), weight_decay_(weight_decay) {}

    void step(std::vector<nn::NamedParam>& params, double lr) {
        if (velocity_.size() != params.size()) {
            velocity_.clear();
            velocity_.reserve(params.size());
            for (const auto& p : params) velocity_.emplace_back(p.value->shape());
        }
        for (size_t i = 0; i < params.size(); ++i) {
            Tensor& w = *params[i].value;
            Tensor& g = *params[i].grad;
            Tensor& v = velocity_[i];
            const int64_t n = w.numel();
            for (int64_t j = 0; j < n; ++j) {
                double grad = g[j];
                if (weight_decay_ != 0.0) grad += weight_decay_ * w[j];
                const double vel = momentum_ * v[j] + grad;
                v[j] = static_cast<float>(vel);
                w[j] = static_cast<float>(w[j] - lr * vel);
            }
        }
    }

private:
    double momentum_;
    double weight_decay_;
    std::vector<Tensor> velocity_;
};

/// Single-cycle cosine decay: full rate at epoch 0, ~0 at the final epoch.
inline double cosine_lr(double base_lr, int epoch, int total_epochs) {
    if (total_epochs <= 1) return base_lr;
    return base_lr * 0.5 * (1.0 + std::cos(M_PI * double(epoch) / double(total_epochs)));
}

}  // namespace regad

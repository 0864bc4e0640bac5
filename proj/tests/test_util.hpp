#pragma once

#include <functional>

#include "regad/rng.hpp"
#include "regad/tensor.hpp"

namespace regad::testutil {

inline Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<float>(rand_uniform(rng, lo, hi));
    return t;
}

/// Central-difference gradient of a scalar function with respect to one
/// tensor element.
inline double numeric_grad(const std::function<double()>& fn, Tensor& t, int64_t index,
                           double eps) {
    const float saved = t[index];
    t[index] = static_cast<float>(saved + eps);
    const double hi = fn();
    t[index] = static_cast<float>(saved - eps);
    const double lo = fn();
    t[index] = saved;
    return (hi - lo) / (2.0 * eps);
}

inline double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / denom;
}

}  // namespace regad::testutil

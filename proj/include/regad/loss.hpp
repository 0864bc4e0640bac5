#pragma once

#include "regad/tensor.hpp"

namespace regad {

// Positions whose p or z vector norm falls below this floor contribute 0.
constexpr double kNormFloor = 1e-12;

/// Mean over spatial positions of the negative cosine similarity between the
/// channel vectors of p (sample pn) and z (sample zn). z is a constant: no
/// gradient is produced for it. When grad_p is non-null, grad_scale * dD/dp
/// is accumulated into its pn-slice.
double cosine_distance(const Tensor& p, int pn, const Tensor& z, int zn, Tensor* grad_p,
                       double grad_scale);

/// Symmetrized registration loss over a two-sample batch:
///   L = (D(p[0], z[1]) + D(p[1], z[0])) / 2.
/// Gradients flow only through p (stop-gradient on z). When grad_p is
/// non-null, grad_scale * dL/dp is accumulated into it.
double registration_loss(const Tensor& p, const Tensor& z, Tensor* grad_p, double grad_scale);

}  // namespace regad

#pragma once

#include <array>
#include <vector>

#include "regad/tensor.hpp"

namespace regad::kernels {

/// 2x3 affine matrix in normalized coordinates, one per batch sample.
/// Row-major: [t00 t01 t02; t10 t11 t12]. For each output pixel at
/// normalized (x, y) the source sample point is (t00*x + t01*y + t02,
/// t10*x + t11*y + t12). Normalized coordinates place pixel centers at
/// x = (2*j + 1 - W) / W, i.e. half-pixel alignment.
using Theta = std::array<double, 6>;

// Sample coordinates closer than this (in pixels) to a grid node are snapped
// onto it, so transforms that land exactly on the grid (identity, whole-cell
// translations, axis flips) reproduce input values bitwise.
constexpr double kGridSnapEps = 1e-6;

// ---- convolution ----

Tensor conv2d_forward(const Tensor& in, const Tensor& weight, const Tensor* bias,
                      int stride, int pad);
// grad_in may be null when the input gradient is not needed (first layer).
void conv2d_backward(const Tensor& in, const Tensor& weight, const Tensor& grad_out,
                     int stride, int pad, Tensor* grad_in, Tensor& grad_weight,
                     Tensor* grad_bias);

// ---- pooling ----

Tensor maxpool2d_forward(const Tensor& in, int kernel, int stride, int pad,
                         std::vector<int32_t>& argmax);
Tensor maxpool2d_backward(const Tensor& grad_out, const std::vector<int32_t>& argmax,
                          const std::vector<int>& in_shape);

Tensor adaptive_avg_pool_forward(const Tensor& in, int out_h, int out_w);
Tensor adaptive_avg_pool_backward(const Tensor& grad_out, const std::vector<int>& in_shape);

// ---- warping / resampling ----

Tensor grid_sample_forward(const Tensor& in, const std::vector<Theta>& thetas);
void grid_sample_backward(const Tensor& in, const std::vector<Theta>& thetas,
                          const Tensor& grad_out, Tensor* grad_in,
                          std::vector<Theta>* grad_thetas);

Tensor upsample_bilinear(const Tensor& in, int out_h, int out_w);

// In-place separable Gaussian blur of a [H,W] map; replicate border, kernel
// normalized so constants are preserved. sigma <= 0 is a no-op.
void gaussian_blur(Tensor& map, double sigma);

// Serial reference implementations (double accumulation, no OpenMP). Kept for
// correctness tests against the parallel kernels and for the benchmark.
namespace ref {
Tensor conv2d_forward(const Tensor& in, const Tensor& weight, const Tensor* bias,
                      int stride, int pad);
Tensor grid_sample_forward(const Tensor& in, const std::vector<Theta>& thetas);
Tensor upsample_bilinear(const Tensor& in, int out_h, int out_w);
}  // namespace ref

}  // namespace regad::kernels

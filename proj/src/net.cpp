#include "regad/net.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "regad/rng.hpp"

namespace regad::nn {

namespace {
using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

void fill_he_normal(Tensor& t, int fan_in, std::mt19937_64& rng) {
    const double std = std::sqrt(2.0 / fan_in);
    for (int64_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<float>(std * rand_normal(rng));
}
}  // namespace

// ---- Conv2d ----

Conv2d::Conv2d(int in_ch, int out_ch, int kernel, int stride_, int pad_, bool with_bias)
    : weight({out_ch, in_ch, kernel, kernel}),
      grad_weight({out_ch, in_ch, kernel, kernel}),
      has_bias(with_bias),
      stride(stride_),
      pad(pad_) {
    if (has_bias) {
        bias = Tensor({out_ch});
        grad_bias = Tensor({out_ch});
    }
}

Tensor Conv2d::forward(const Tensor& x) {
    cached_in_ = x;
    return kernels::conv2d_forward(x, weight, has_bias ? &bias : nullptr, stride, pad);
}

Tensor Conv2d::backward(const Tensor& grad_out, bool need_input_grad) {
    Tensor grad_in;
    if (need_input_grad) grad_in = Tensor(cached_in_.shape());
    kernels::conv2d_backward(cached_in_, weight, grad_out, stride, pad,
                             need_input_grad ? &grad_in : nullptr, grad_weight,
                             has_bias ? &grad_bias : nullptr);
    return grad_in;
}

void Conv2d::init_he(std::mt19937_64& rng) {
    fill_he_normal(weight, weight.dim(1) * weight.dim(2) * weight.dim(3), rng);
    if (has_bias) bias.zero();
}

void Conv2d::collect(const std::string& prefix, std::vector<NamedParam>& out, bool trainable) {
    out.push_back({prefix + ".weight", &weight, &grad_weight, trainable});
    if (has_bias) out.push_back({prefix + ".bias", &bias, &grad_bias, trainable});
}

void Conv2d::zero_grad() {
    grad_weight.zero();
    if (has_bias) grad_bias.zero();
}

// ---- BatchNorm2d ----

BatchNorm2d::BatchNorm2d(int channels)
    : gamma(Tensor::full({channels}, 1.0f)),
      grad_gamma({channels}),
      beta({channels}),
      grad_beta({channels}),
      running_mean({channels}),
      running_var(Tensor::full({channels}, 1.0f)) {}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) {
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int64_t spatial = int64_t(h) * w;
    const int64_t count = int64_t(n) * spatial;
    Tensor out(x.shape());
    cached_training_ = training;
    if (training) {
        cached_xhat_ = Tensor(x.shape());
        cached_invstd_.assign(static_cast<size_t>(c), 0.0);
#pragma omp parallel for schedule(static)
        for (int ch = 0; ch < c; ++ch) {
            double sum = 0.0, sq = 0.0;
            for (int s = 0; s < n; ++s) {
                const float* src = x.data() + (int64_t(s) * c + ch) * spatial;
                for (int64_t i = 0; i < spatial; ++i) {
                    sum += src[i];
                    sq += double(src[i]) * src[i];
                }
            }
            const double mean = sum / count;
            const double var = sq / count - mean * mean;  // biased, as used for normalization
            const double invstd = 1.0 / std::sqrt(var + eps);
            cached_invstd_[static_cast<size_t>(ch)] = invstd;
            const double g = gamma[ch], b = beta[ch];
            for (int s = 0; s < n; ++s) {
                const float* src = x.data() + (int64_t(s) * c + ch) * spatial;
                float* xh = cached_xhat_.data() + (int64_t(s) * c + ch) * spatial;
                float* dst = out.data() + (int64_t(s) * c + ch) * spatial;
                for (int64_t i = 0; i < spatial; ++i) {
                    const double v = (src[i] - mean) * invstd;
                    xh[i] = static_cast<float>(v);
                    dst[i] = static_cast<float>(g * v + b);
                }
            }
            const double unbiased = count > 1 ? var * count / (count - 1) : var;
            running_mean[ch] =
                static_cast<float>((1.0 - momentum) * running_mean[ch] + momentum * mean);
            running_var[ch] =
                static_cast<float>((1.0 - momentum) * running_var[ch] + momentum * unbiased);
        }
    } else {
#pragma omp parallel for schedule(static)
        for (int ch = 0; ch < c; ++ch) {
            const double invstd = 1.0 / std::sqrt(double(running_var[ch]) + eps);
            const double mean = running_mean[ch];
            const double g = gamma[ch], b = beta[ch];
            for (int s = 0; s < n; ++s) {
                const float* src = x.data() + (int64_t(s) * c + ch) * spatial;
                float* dst = out.data() + (int64_t(s) * c + ch) * spatial;
                for (int64_t i = 0; i < spatial; ++i)
                    dst[i] = static_cast<float>(g * ((src[i] - mean) * invstd) + b);
            }
        }
    }
    return out;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
    if (!cached_training_)
        throw std::logic_error("BatchNorm2d::backward requires a training-mode forward");
    const int n = grad_out.dim(0), c = grad_out.dim(1), h = grad_out.dim(2), w = grad_out.dim(3);
    const int64_t spatial = int64_t(h) * w;
    const int64_t count = int64_t(n) * spatial;
    Tensor grad_in(grad_out.shape());
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (int s = 0; s < n; ++s) {
            const float* g = grad_out.data() + (int64_t(s) * c + ch) * spatial;
            const float* xh = cached_xhat_.data() + (int64_t(s) * c + ch) * spatial;
            for (int64_t i = 0; i < spatial; ++i) {
                sum_g += g[i];
                sum_gx += double(g[i]) * xh[i];
            }
        }
        grad_gamma[ch] += static_cast<float>(sum_gx);
        grad_beta[ch] += static_cast<float>(sum_g);
        const double mean_g = sum_g / count;
        const double mean_gx = sum_gx / count;
        const double scale = gamma[ch] * cached_invstd_[static_cast<size_t>(ch)];
        for (int s = 0; s < n; ++s) {
            const float* g = grad_out.data() + (int64_t(s) * c + ch) * spatial;
            const float* xh = cached_xhat_.data() + (int64_t(s) * c + ch) * spatial;
            float* dst = grad_in.data() + (int64_t(s) * c + ch) * spatial;
            for (int64_t i = 0; i < spatial; ++i)
                dst[i] = static_cast<float>(scale * (g[i] - mean_g - xh[i] * mean_gx));
        }
    }
    return grad_in;
}

void BatchNorm2d::collect(const std::string& prefix, std::vector<NamedParam>& out,
                          bool trainable) {
    out.push_back({prefix + ".gamma", &gamma, &grad_gamma, trainable});
    out.push_back({prefix + ".beta", &beta, &grad_beta, trainable});
    out.push_back({prefix + ".running_mean", &running_mean, nullptr, false});
    out.push_back({prefix + ".running_var", &running_var, nullptr, false});
}

void BatchNorm2d::zero_grad() {
    grad_gamma.zero();
    grad_beta.zero();
}

// ---- ReLU ----

Tensor ReLU::forward(const Tensor& x) {
    Tensor out(x.shape());
    mask_.assign(static_cast<size_t>(x.numel()), 0);
    const int64_t nel = x.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < nel; ++i) {
        const bool pos = x[i] > 0.0f;
        mask_[static_cast<size_t>(i)] = pos;
        out[i] = pos ? x[i] : 0.0f;
    }
    return out;
}

Tensor ReLU::backward(const Tensor& grad_out) const {
    Tensor grad_in(grad_out.shape());
    const int64_t nel = grad_out.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < nel; ++i)
        grad_in[i] = mask_[static_cast<size_t>(i)] ? grad_out[i] : 0.0f;
    return grad_in;
}

// ---- MaxPool2d ----

Tensor MaxPool2d::forward(const Tensor& x) {
    in_shape_ = x.shape();
    return kernels::maxpool2d_forward(x, kernel_, stride_, pad_, argmax_);
}

Tensor MaxPool2d::backward(const Tensor& grad_out) const {
    return kernels::maxpool2d_backward(grad_out, argmax_, in_shape_);
}

// ---- Linear ----

Linear::Linear(int in_features, int out_features)
    : weight({out_features, in_features}),
      grad_weight({out_features, in_features}),
      bias({out_features}),
      grad_bias({out_features}) {}

Tensor Linear::forward(const Tensor& x) {
    cached_in_ = x;
    const int n = x.dim(0), in = x.dim(1), out_f = weight.dim(0);
    Tensor y({n, out_f});
    CMapRM xm(x.data(), n, in), wm(weight.data(), out_f, in);
    MapRM ym(y.data(), n, out_f);
    ym.noalias() = xm * wm.transpose();
    CMapRM bm(bias.data(), 1, out_f);
    ym.rowwise() += bm.row(0);
    return y;
}

Tensor Linear::backward(const Tensor& grad_out) {
    const int n = grad_out.dim(0), out_f = weight.dim(0), in = weight.dim(1);
    CMapRM gm(grad_out.data(), n, out_f), xm(cached_in_.data(), n, in),
        wm(weight.data(), out_f, in);
    MapRM gwm(grad_weight.data(), out_f, in);
    gwm.noalias() += gm.transpose() * xm;
    MapRM gbm(grad_bias.data(), 1, out_f);
    gbm.row(0) += gm.colwise().sum();
    Tensor grad_in({n, in});
    MapRM gim(grad_in.data(), n, in);
    gim.noalias() = gm * wm;
    return grad_in;
}

void Linear::init_he(std::mt19937_64& rng) {
    fill_he_normal(weight, weight.dim(1), rng);
    bias.zero();
}

void Linear::zero_init() {
    weight.zero();
    bias.zero();
}

void Linear::collect(const std::string& prefix, std::vector<NamedParam>& out, bool trainable) {
    out.push_back({prefix + ".weight", &weight, &grad_weight, trainable});
    out.push_back({prefix + ".bias", &bias, &grad_bias, trainable});
}

void Linear::zero_grad() {
    grad_weight.zero();
    grad_bias.zero();
}

// ---- AdaptiveAvgPool2d ----

Tensor AdaptiveAvgPool2d::forward(const Tensor& x) {
    in_shape_ = x.shape();
    return kernels::adaptive_avg_pool_forward(x, out_h_, out_w_);
}

Tensor AdaptiveAvgPool2d::backward(const Tensor& grad_out) const {
    return kernels::adaptive_avg_pool_backward(grad_out, in_shape_);
}

// ---- BasicBlock ----

BasicBlock::BasicBlock(int in_ch, int out_ch, int stride)
    : conv1_(in_ch, out_ch, 3, stride, 1, false),
      conv2_(out_ch, out_ch, 3, 1, 1, false),
      bn1_(out_ch),
      bn2_(out_ch),
      has_down_(stride != 1 || in_ch != out_ch),
      down_conv_(in_ch, out_ch, 1, stride, 0, false),
      down_bn_(out_ch) {}

Tensor BasicBlock::forward(const Tensor& x, bool training) {
    Tensor out = relu1_.forward(bn1_.forward(conv1_.forward(x), training));
    out = bn2_.forward(conv2_.forward(out), training);
    Tensor skip = has_down_ ? down_bn_.forward(down_conv_.forward(x), training) : x;
    const int64_t nel = out.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < nel; ++i) out[i] += skip[i];
    return relu2_.forward(out);
}

Tensor BasicBlock::backward(const Tensor& grad_out, bool need_input_grad) {
    Tensor g = relu2_.backward(grad_out);
    // main branch
    Tensor gm = conv1_.backward(bn1_.backward(relu1_.backward(conv2_.backward(bn2_.backward(g)))),
                                need_input_grad);
    // skip branch
    if (has_down_) {
        Tensor gs = down_conv_.backward(down_bn_.backward(g), need_input_grad);
        if (!need_input_grad) return Tensor();
        const int64_t nel = gm.numel();
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < nel; ++i) gm[i] += gs[i];
        return gm;
    }
    if (!need_input_grad) return Tensor();
    const int64_t nel = gm.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < nel; ++i) gm[i] += g[i];
    return gm;
}

void BasicBlock::init(std::mt19937_64& rng) {
    conv1_.init_he(rng);
    conv2_.init_he(rng);
    if (has_down_) down_conv_.init_he(rng);
}

void BasicBlock::collect(const std::string& prefix, std::vector<NamedParam>& out,
                         bool trainable) {
    conv1_.collect(prefix + ".conv1", out, trainable);
    bn1_.collect(prefix + ".bn1", out, trainable);
    conv2_.collect(prefix + ".conv2", out, trainable);
    bn2_.collect(prefix + ".bn2", out, trainable);
    if (has_down_) {
        down_conv_.collect(prefix + ".down_conv", out, trainable);
        down_bn_.collect(prefix + ".down_bn", out, trainable);
    }
}

void BasicBlock::zero_grad() {
    conv1_.zero_grad();
    conv2_.zero_grad();
    bn1_.zero_grad();
    bn2_.zero_grad();
    if (has_down_) {
        down_conv_.zero_grad();
        down_bn_.zero_grad();
    }
}

}  // namespace regad::nn

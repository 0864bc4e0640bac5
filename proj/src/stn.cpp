#include "regad/stn.hpp"

namespace regad::nn {

namespace {
constexpr int kLocChannels = 16;
constexpr int kLocPool = 3;
constexpr int kLocHidden = 32;
}  // namespace

SpatialTransformer::SpatialTransformer(int in_channels, AffineMode mode)
    : mode_(mode),
      conv1_(in_channels, kLocChannels, 5, 2, 2, true),
      conv2_(kLocChannels, kLocChannels, 5, 2, 2, true),
      pool_(kLocPool, kLocPool),
      fc1_(kLocChannels * kLocPool * kLocPool, kLocHidden),
      fc2_(kLocHidden, std::max(1, affine_free_params(mode))) {}

std::vector<std::vector<double>> SpatialTransformer::predict_free(const Tensor& f,
                                                                  bool training) {
    (void)training;
    const int n = f.dim(0);
    const int n_params = affine_free_params(mode_);
    if (n_params == 0) return std::vector<std::vector<double>>(static_cast<size_t>(n));
    Tensor h = relu1_.forward(conv1_.forward(f));
    h = relu2_.forward(conv2_.forward(h));
    h = pool_.forward(h);
    Tensor flat({h.dim(0), h.dim(1) * h.dim(2) * h.dim(3)}, h.values());
    Tensor u = fc2_.forward(relu3_.forward(fc1_.forward(flat)));
    std::vector<std::vector<double>> out(static_cast<size_t>(n));
    for (int s = 0; s < n; ++s) {
        out[static_cast<size_t>(s)].resize(static_cast<size_t>(n_params));
        for (int i = 0; i < n_params; ++i)
            out[static_cast<size_t>(s)][static_cast<size_t>(i)] = u.at(s, i);
    }
    return out;
}

std::vector<AffineParams> SpatialTransformer::predict(const Tensor& f, bool training) {
    auto u = predict_free(f, training);
    std::vector<AffineParams> params;
    params.reserve(u.size());
    for (const auto& ui : u) params.push_back(affine_from_free_params(mode_, ui));
    return params;
}

SpatialTransformer::Output SpatialTransformer::forward(const Tensor& f, bool training) {
    Output out;
    if (mode_ == AffineMode::None) {
        out.transformed = f;
        out.params.assign(static_cast<size_t>(f.dim(0)), AffineParams::identity());
        return out;
    }
    cached_in_ = f;
    cached_u_ = predict_free(f, training);
    out.params.reserve(cached_u_.size());
    cached_thetas_.clear();
    for (const auto& ui : cached_u_) {
        AffineParams p = affine_from_free_params(mode_, ui);
        cached_thetas_.push_back(p.theta);
        out.params.push_back(std::move(p));
    }
    out.transformed = kernels::grid_sample_forward(f, cached_thetas_);
    return out;
}

Tensor SpatialTransformer::backward(const Tensor& grad_transformed) {
    if (mode_ == AffineMode::None) return grad_transformed;
    const int n = grad_transformed.dim(0);
    const int n_params = affine_free_params(mode_);

    Tensor grad_f(cached_in_.shape());
    std::vector<kernels::Theta> grad_thetas;
    kernels::grid_sample_backward(cached_in_, cached_thetas_, grad_transformed, &grad_f,
                                  &grad_thetas);

    // theta path: chain through the mode constraint, then the regressor.
    Tensor gu({n, n_params});
    for (int s = 0; s < n; ++s) {
        auto du = affine_free_param_grad(mode_, cached_u_[static_cast<size_t>(s)],
                                         grad_thetas[static_cast<size_t>(s)]);
        for (int i = 0; i < n_params; ++i) gu.at(s, i) = static_cast<float>(du[static_cast<size_t>(i)]);
    }
    Tensor gflat = fc1_.backward(relu3_.backward(fc2_.backward(gu)));
    Tensor gpool = pool_.backward(
        Tensor({n, kLocChannels, kLocPool, kLocPool}, gflat.values()));
    Tensor gloc = conv1_.backward(relu1_.backward(conv2_.backward(relu2_.backward(gpool))));

    const int64_t nel = grad_f.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < nel; ++i) grad_f[i] += gloc[i];
    return grad_f;
}

void SpatialTransformer::init(std::mt19937_64& rng) {
    if (mode_ == AffineMode::None) return;
    conv1_.init_he(rng);
    conv2_.init_he(rng);
    fc1_.init_he(rng);
    fc2_.zero_init();  // u = 0 -> identity transform
}

void SpatialTransformer::collect(const std::string& prefix, std::vector<NamedParam>& out,
                                 bool trainable) {
    if (mode_ == AffineMode::None) return;
    conv1_.collect(prefix + ".conv1", out, trainable);
    conv2_.collect(prefix + ".conv2", out, trainable);
    fc1_.collect(prefix + ".fc1", out, trainable);
    fc2_.collect(prefix + ".fc2", out, trainable);
}

void SpatialTransformer::zero_grad() {
    if (mode_ == AffineMode::None) return;
    conv1_.zero_grad();
    conv2_.zero_grad();
    fc1_.zero_grad();
    fc2_.zero_grad();
}

}  // namespace regad::nn

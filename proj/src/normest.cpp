#include "regad/normest.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "regad/archive.hpp"
#include "regad/rng.hpp"

namespace regad {

std::vector<double> GaussianGrid::covariance_at(int y, int x) const {
    const double* l = chol_at(y, x);
    std::vector<double> cov(static_cast<size_t>(c) * c, 0.0);
    for (int i = 0; i < c; ++i)
        for (int j = 0; j < c; ++j) {
            double acc = 0.0;
            for (int k = 0; k <= std::min(i, j); ++k)
                acc += l[int64_t(i) * c + k] * l[int64_t(j) * c + k];
            cov[static_cast<size_t>(int64_t(i) * c + j)] = acc;
        }
    return cov;
}

Tensor aggregate_features(const FeatureSet& fs) {
    const Tensor& f1 = fs.post[0];
    const int n = f1.dim(0), h = f1.dim(2), w = f1.dim(3);
    const Tensor f2 = kernels::upsample_bilinear(fs.post[1], h, w);
    const Tensor f3 = kernels::upsample_bilinear(fs.post[2], h, w);
    const int c1 = f1.dim(1), c2 = f2.dim(1), c3 = f3.dim(1);
    Tensor out({n, c1 + c2 + c3, h, w});
    const int64_t spatial = int64_t(h) * w;
    for (int s = 0; s < n; ++s) {
        float* dst = out.data() + int64_t(s) * (c1 + c2 + c3) * spatial;
        std::copy_n(f1.data() + int64_t(s) * c1 * spatial, c1 * spatial, dst);
        std::copy_n(f2.data() + int64_t(s) * c2 * spatial, c2 * spatial, dst + c1 * spatial);
        std::copy_n(f3.data() + int64_t(s) * c3 * spatial, c3 * spatial,
                    dst + (c1 + c2) * spatial);
    }
    return out;
}

GaussianGrid fit_gaussian_grid(const std::vector<Tensor>& features, double epsilon) {
    const int n = static_cast<int>(features.size());
    if (n < 2) throw std::invalid_argument("fit_gaussian_grid: need at least two pooled features");
    if (epsilon < 0.0) throw std::invalid_argument("fit_gaussian_grid: epsilon must be >= 0");
    const int c = features[0].dim(0), h = features[0].dim(1), w = features[0].dim(2);
    for (const auto& f : features)
        if (f.dim(0) != c || f.dim(1) != h || f.dim(2) != w)
            throw std::invalid_argument("fit_gaussian_grid: inconsistent feature shapes");

    GaussianGrid grid;
    grid.h = h;
    grid.w = w;
    grid.c = c;
    grid.n = n;
    grid.epsilon = epsilon;
    grid.mean.assign(static_cast<size_t>(h) * w * c, 0.0);
    grid.chol.assign(static_cast<size_t>(h) * w * c * c, 0.0);

    const int64_t spatial = int64_t(h) * w;
    std::vector<std::pair<int, int>> failed;  // positions where Cholesky failed
#pragma omp parallel
    {
        Eigen::MatrixXd x(c, n);
#pragma omp for schedule(static) collapse(2)
        for (int y = 0; y < h; ++y) {
            for (int xw = 0; xw < w; ++xw) {
                const int64_t pos = int64_t(y) * w + xw;
                for (int k = 0; k < n; ++k) {
                    const float* f = features[static_cast<size_t>(k)].data();
                    for (int ch = 0; ch < c; ++ch) x(ch, k) = f[ch * spatial + pos];
                }
                Eigen::VectorXd mu = x.rowwise().mean();
                x.colwise() -= mu;
                Eigen::MatrixXd sigma = (x * x.transpose()) / double(n - 1);
                sigma.diagonal().array() += epsilon;
                Eigen::LLT<Eigen::MatrixXd> llt(sigma);
                if (llt.info() != Eigen::Success) {
#pragma omp critical
                    failed.emplace_back(y, xw);
                    continue;
                }
                Eigen::MatrixXd l = llt.matrixL();
                double* mdst = grid.mean.data() + pos * c;
                double* ldst = grid.chol.data() + pos * c * c;
                for (int i = 0; i < c; ++i) {
                    mdst[i] = mu(i);
                    for (int j = 0; j <= i; ++j) ldst[int64_t(i) * c + j] = l(i, j);
                }
            }
        }
    }
    if (!failed.empty())
        throw std::runtime_error("fit_gaussian_grid: covariance not positive definite at (" +
                                 std::to_string(failed.front().first) + "," +
                                 std::to_string(failed.front().second) +
                                 "); increase epsilon");
    return grid;
}

namespace ref {

GaussianGrid fit_gaussian_grid(const std::vector<Tensor>& features, double epsilon) {
    const int n = static_cast<int>(features.size());
    if (n < 2) throw std::invalid_argument("fit_gaussian_grid: need at least two pooled features");
    const int c = features[0].dim(0), h = features[0].dim(1), w = features[0].dim(2);
    GaussianGrid grid;
    grid.h = h;
    grid.w = w;
    grid.c = c;
    grid.n = n;
    grid.epsilon = epsilon;
    grid.mean.assign(static_cast<size_t>(h) * w * c, 0.0);
    grid.chol.assign(static_cast<size_t>(h) * w * c * c, 0.0);
    const int64_t spatial = int64_t(h) * w;

    std::vector<double> sigma(static_cast<size_t>(c) * c);
    for (int64_t pos = 0; pos < spatial; ++pos) {
        double* mu = grid.mean.data() + pos * c;
        for (int k = 0; k < n; ++k) {
            const float* f = features[static_cast<size_t>(k)].data();
            for (int ch = 0; ch < c; ++ch) mu[ch] += f[ch * spatial + pos];
        }
        for (int ch = 0; ch < c; ++ch) mu[ch] /= n;
        std::fill(sigma.begin(), sigma.end(), 0.0);
        for (int k = 0; k < n; ++k) {
            const float* f = features[static_cast<size_t>(k)].data();
            for (int i = 0; i < c; ++i) {
                const double di = f[i * spatial + pos] - mu[i];
                for (int j = 0; j <= i; ++j) {
                    const double dj = f[j * spatial + pos] - mu[j];
                    sigma[static_cast<size_t>(i) * c + j] += di * dj;
                }
            }
        }
        for (auto& v : sigma) v /= (n - 1);
        for (int i = 0; i < c; ++i) sigma[static_cast<size_t>(i) * c + i] += epsilon;

        // in-place lower Cholesky
        double* l = grid.chol.data() + pos * c * c;
        for (int i = 0; i < c; ++i) {
            for (int j = 0; j <= i; ++j) {
                double acc = sigma[static_cast<size_t>(i) * c + j];
                for (int k = 0; k < j; ++k) acc -= l[int64_t(i) * c + k] * l[int64_t(j) * c + k];
                if (i == j) {
                    if (acc <= 0.0)
                        throw std::runtime_error(
                            "fit_gaussian_grid: covariance not positive definite at (" +
                            std::to_string(pos / w) + "," + std::to_string(pos % w) + ")");
                    l[int64_t(i) * c + j] = std::sqrt(acc);
                } else {
                    l[int64_t(i) * c + j] = acc / l[int64_t(j) * c + j];
                }
            }
        }
    }
    return grid;
}

}  // namespace ref

GaussianGrid estimate(const data::SupportSet& support, RegADModel& model,
                      const data::AugmentationConfig& aug, const EstimateOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto pool = data::build_support_pool(support, aug);

    std::vector<Tensor> features;
    features.reserve(pool.size());
    std::vector<int32_t> indices;
    for (const auto& sample : pool) {
        const auto pre = data::preprocess(sample, opts.side);
        FeatureSet fs = model.extract(data::to_tensor(pre), false);
        Tensor feat;
        if (opts.est_source == "encoder")
            feat = model.encode(fs.post[2], false);
        else
            feat = aggregate_features(fs);
        const int c = feat.dim(1), fh = feat.dim(2), fw = feat.dim(3);
        if (opts.reduce_dims > 0 && indices.empty()) {
            if (opts.reduce_dims > c)
                throw std::invalid_argument("estimate: reduce_dims exceeds channel count");
            auto rng = make_rng({opts.channel_seed, 0x6368616eULL});
            std::vector<int32_t> all(static_cast<size_t>(c));
            for (int i = 0; i < c; ++i) all[static_cast<size_t>(i)] = i;
            for (int i = 0; i < opts.reduce_dims; ++i) {
                const size_t j = static_cast<size_t>(i) +
                                 static_cast<size_t>(rand_index(rng, static_cast<uint64_t>(c - i)));
                std::swap(all[static_cast<size_t>(i)], all[j]);
            }
            indices.assign(all.begin(), all.begin() + opts.reduce_dims);
            std::sort(indices.begin(), indices.end());
        }
        if (!indices.empty()) {
            const int64_t spatial = int64_t(fh) * fw;
            Tensor sel({static_cast<int>(indices.size()), fh, fw});
            for (size_t i = 0; i < indices.size(); ++i)
                std::copy_n(feat.data() + int64_t(indices[i]) * spatial, spatial,
                            sel.data() + int64_t(i) * spatial);
            features.push_back(std::move(sel));
        } else {
            features.push_back(Tensor({c, fh, fw}, feat.values()));
        }
    }

    GaussianGrid grid = fit_gaussian_grid(features, opts.epsilon);
    grid.channel_indices = indices;
    const auto t1 = std::chrono::steady_clock::now();
    const double seconds = std::chrono::duration<double>(t1 - t0).count();

    grid.meta["category"] = support.category;
    grid.meta["k"] = std::to_string(support.k);
    grid.meta["seed"] = std::to_string(support.seed);
    grid.meta["epsilon"] = std::to_string(opts.epsilon);
    grid.meta["n"] = std::to_string(grid.n);
    grid.meta["est_source"] = opts.est_source;
    grid.meta["side"] = std::to_string(opts.side);
    grid.meta["stn_mode"] = to_string(model.config().stn_mode);
    grid.meta["adaptation_seconds"] = std::to_string(seconds);
    return grid;
}

void save_stats(const GaussianGrid& grid, const std::string& path) {
    Archive a;
    a.put("mean", {grid.h, grid.w, grid.c},
          std::vector<float>(grid.mean.begin(), grid.mean.end()));
    a.put("cov_cholesky", {grid.h, grid.w, grid.c, grid.c},
          std::vector<float>(grid.chol.begin(), grid.chol.end()));
    if (!grid.channel_indices.empty())
        a.put("channel_indices", {static_cast<int>(grid.channel_indices.size())},
              grid.channel_indices);
    a.meta() = grid.meta;
    a.meta()["format"] = "regad-stats-1";
    a.meta()["epsilon"] = std::to_string(grid.epsilon);
    a.meta()["n"] = std::to_string(grid.n);
    a.save(path);
}

GaussianGrid load_stats(const std::string& path) {
    Archive a = Archive::load(path);
    const auto& mean = a.get("mean");
    const auto& chol = a.get("cov_cholesky");
    GaussianGrid grid;
    grid.h = mean.shape[0];
    grid.w = mean.shape[1];
    grid.c = mean.shape[2];
    grid.mean.assign(mean.f32.begin(), mean.f32.end());
    grid.chol.assign(chol.f32.begin(), chol.f32.end());
    if (a.has("channel_indices")) grid.channel_indices = a.get("channel_indices").i32;
    grid.meta = a.meta();
    grid.epsilon = std::stod(a.meta_or("epsilon", "0"));
    grid.n = std::stoi(a.meta_or("n", "0"));
    return grid;
}

}  // namespace regad

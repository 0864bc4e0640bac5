#include "regad/scoring.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace regad {

Tensor mahalanobis_map(const Tensor& agg, const GaussianGrid& grid) {
    const int c = agg.dim(0), h = agg.dim(1), w = agg.dim(2);
    if (c != grid.c || h != grid.h || w != grid.w)
        throw std::invalid_argument("mahalanobis_map: feature shape " + agg.shape_str() +
                                    " does not match grid " + std::to_string(grid.c) + "x" +
                                    std::to_string(grid.h) + "x" + std::to_string(grid.w));
    Tensor out({h, w});
    const int64_t spatial = int64_t(h) * w;
#pragma omp parallel
    {
        Eigen::VectorXd d(c);
#pragma omp for schedule(static)
        for (int64_t pos = 0; pos < spatial; ++pos) {
            const double* mu = grid.mean.data() + pos * c;
            for (int ch = 0; ch < c; ++ch) d(ch) = double(agg[ch * spatial + pos]) - mu[ch];
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                           Eigen::RowMajor>>
                l(grid.chol.data() + pos * c * c, c, c);
            l.triangularView<Eigen::Lower>().solveInPlace(d);
            out[pos] = static_cast<float>(std::sqrt(d.squaredNorm()));
        }
    }
    return out;
}

namespace ref {

Tensor mahalanobis_map(const Tensor& agg, const GaussianGrid& grid) {
    const int c = agg.dim(0), h = agg.dim(1), w = agg.dim(2);
    Tensor out({h, w});
    const int64_t spatial = int64_t(h) * w;
    std::vector<double> y(static_cast<size_t>(c));
    for (int64_t pos = 0; pos < spatial; ++pos) {
        const double* mu = grid.mean.data() + pos * c;
        const double* l = grid.chol.data() + pos * c * c;
        double norm2 = 0.0;
        for (int i = 0; i < c; ++i) {
            double acc = double(agg[i * spatial + pos]) - mu[i];
            for (int j = 0; j < i; ++j) acc -= l[int64_t(i) * c + j] * y[static_cast<size_t>(j)];
            y[static_cast<size_t>(i)] = acc / l[int64_t(i) * c + i];
            norm2 += y[static_cast<size_t>(i)] * y[static_cast<size_t>(i)];
        }
        out[pos] = static_cast<float>(std::sqrt(norm2));
    }
    return out;
}

}  // namespace ref

Tensor realign_map(const Tensor& scores, const std::array<AffineParams, 3>& stage_params) {
    Tensor map({1, 1, scores.dim(0), scores.dim(1)}, scores.values());
    for (int stage = 2; stage >= 0; --stage) {
        const AffineParams& p = stage_params[static_cast<size_t>(stage)];
        if (p.mode == AffineMode::None) continue;
        const AffineParams inv = invert_affine(p);
        map = kernels::grid_sample_forward(map, {inv.theta});
    }
    return Tensor({scores.dim(0), scores.dim(1)}, map.values());
}

AnomalyMap finalize_map(const Tensor& realigned, int side, double smooth_sigma) {
    if (side <= 0) throw std::invalid_argument("finalize_map: side must be positive");
    AnomalyMap out;
    out.grid_scores = realigned;
    Tensor up = kernels::upsample_bilinear(
        Tensor({1, 1, realigned.dim(0), realigned.dim(1)}, realigned.values()), side, side);
    out.image_scores = Tensor({side, side}, up.values());
    if (smooth_sigma > 0.0) kernels::gaussian_blur(out.image_scores, smooth_sigma);
    float best = out.image_scores[0];
    for (int64_t i = 1; i < out.image_scores.numel(); ++i)
        best = std::max(best, out.image_scores[i]);
    out.image_score = best;
    return out;
}

AnomalyMap score_image(const data::ImageSample& sample, RegADModel& model,
                       const GaussianGrid& grid, const ScoreOptions& opts) {
    const int side = model.config().side;
    {
        const auto it = grid.meta.find("stn_mode");
        if (it != grid.meta.end() && it->second != to_string(model.config().stn_mode))
            throw std::runtime_error("score: stats were estimated with stn_mode=" + it->second +
                                     " but the checkpoint uses " +
                                     to_string(model.config().stn_mode));
        const auto side_it = grid.meta.find("side");
        if (side_it != grid.meta.end() && std::stoi(side_it->second) != side)
            throw std::runtime_error("score: stats side " + side_it->second +
                                     " does not match checkpoint side " + std::to_string(side));
    }
    const auto pre = data::preprocess(sample, side);  // no test-time augmentation
    FeatureSet fs = model.extract(data::to_tensor(pre), false);
    Tensor feat;
    const auto src_it = grid.meta.find("est_source");
    const std::string source = src_it != grid.meta.end() ? src_it->second : opts.est_source;
    if (source == "encoder")
        feat = model.encode(fs.post[2], false);
    else
        feat = aggregate_features(fs);

    const int fc = feat.dim(1), fh = feat.dim(2), fw = feat.dim(3);
    Tensor single({fc, fh, fw}, feat.values());
    if (!grid.channel_indices.empty()) {
        const int64_t spatial = int64_t(fh) * fw;
        Tensor sel({static_cast<int>(grid.channel_indices.size()), fh, fw});
        for (size_t i = 0; i < grid.channel_indices.size(); ++i)
            std::copy_n(single.data() + int64_t(grid.channel_indices[i]) * spatial, spatial,
                        sel.data() + int64_t(i) * spatial);
        single = std::move(sel);
    }

    Tensor scores = mahalanobis_map(single, grid);
    const std::array<AffineParams, 3> stage_params = {fs.params[0].at(0), fs.params[1].at(0),
                                                      fs.params[2].at(0)};
    Tensor realigned = realign_map(scores, stage_params);
    return finalize_map(realigned, side, opts.smooth_sigma);
}

}  // namespace regad

#pragma once

#include <array>
#include <vector>

#include "regad/image.hpp"
#include "regad/model.hpp"
#include "regad/normest.hpp"

namespace regad {

struct AnomalyMap {
    Tensor grid_scores;   // [H,W] in feature coordinates
    Tensor image_scores;  // [side,side] aligned with the input image
    double image_score = 0.0;  // max of image_scores
};

/// Per-position Mahalanobis distances of one aggregated map [C,H,W] against
/// the grid, via triangular solves on the cached Cholesky factors.
Tensor mahalanobis_map(const Tensor& agg, const GaussianGrid& grid);

namespace ref {
/// Serial solve with hand-rolled forward substitution; testing/benchmark.
Tensor mahalanobis_map(const Tensor& agg, const GaussianGrid& grid);
}  // namespace ref

/// Undo the per-stage transforms on the score map, reverse stage order, all
/// at map resolution. Out-of-bounds regions fill with 0 (treated normal).
Tensor realign_map(const Tensor& scores, const std::array<AffineParams, 3>& stage_params);

/// Upsample to side x side, optionally blur, take the max as image score.
AnomalyMap finalize_map(const Tensor& realigned, int side, double smooth_sigma);

struct ScoreOptions {
    double smooth_sigma = 4.0;
    std::string est_source = "stn";
};

/// Full inference for one image: extract, transform, aggregate, score,
/// realign with the image's own predicted transforms, finalize. The support
/// augmentations never apply here. Checks grid/model metadata compatibility.
AnomalyMap score_image(const data::ImageSample& sample, RegADModel& model,
                       const GaussianGrid& grid, const ScoreOptions& opts = {});

}  // namespace regad

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "regad/dataio.hpp"
#include "regad/model.hpp"
#include "regad/tensor.hpp"

namespace regad {

/// Per-position multivariate Gaussian over pooled support features. Mean and
/// the lower Cholesky factor of the regularized covariance are kept in double
/// precision; the stats archive stores them as float32.
struct GaussianGrid {
    int h = 0, w = 0, c = 0;
    double epsilon = 0.0;
    int n = 0;  // pooled feature count
    std::vector<double> mean;  // h*w*c
    std::vector<double> chol;  // h*w*c*c, lower triangular per position
    std::vector<int32_t> channel_indices;  // subset of source channels; empty = all
    std::map<std::string, std::string> meta;

    const double* mean_at(int y, int x) const { return mean.data() + (int64_t(y) * w + x) * c; }
    const double* chol_at(int y, int x) const {
        return chol.data() + (int64_t(y) * w + x) * c * c;
    }
    /// Reconstruct the full covariance L L^T at one position (test helper).
    std::vector<double> covariance_at(int y, int x) const;
};

/// Upsample stage-2/3 transformed maps to stage-1 resolution and concatenate
/// channels, stage order. Input batch -> [N, C1+C2+C3, H1, W1].
Tensor aggregate_features(const FeatureSet& fs);

/// Unbiased per-position covariance plus epsilon*I, Cholesky-factored.
/// features: N maps shaped [C,H,W]. Requires N >= 2.
GaussianGrid fit_gaussian_grid(const std::vector<Tensor>& features, double epsilon);

namespace ref {
/// Serial two-pass fit without Eigen; testing/benchmark baseline.
GaussianGrid fit_gaussian_grid(const std::vector<Tensor>& features, double epsilon);
}  // namespace ref

struct EstimateOptions {
    double epsilon = 0.01;
    int reduce_dims = 0;             // 0 = keep all channels
    std::string est_source = "stn";  // "stn" (aggregated STN outputs) or "encoder"
    int side = 224;
    uint64_t channel_seed = 0;  // seeds the reduce_dims channel selection
};

/// Build the augmented pool, run inference, fit the grid. Records adaptation
/// wall-clock and provenance in grid.meta. No model parameters change.
GaussianGrid estimate(const data::SupportSet& support, RegADModel& model,
                      const data::AugmentationConfig& aug, const EstimateOptions& opts);

void save_stats(const GaussianGrid& grid, const std::string& path);
GaussianGrid load_stats(const std::string& path);

}  // namespace regad

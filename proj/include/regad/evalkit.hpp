#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "regad/dataio.hpp"
#include "regad/model.hpp"
#include "regad/normest.hpp"
#include "regad/scoring.hpp"

namespace regad::eval {

/// Area under the ROC curve via rank sums (Mann-Whitney), midrank ties.
/// labels are {0,1}; both classes must be present.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

/// AUROC over the pooled pixel population of a category's test set. Maps are
/// [side,side] score maps; masks are CV_8UC1 {0,1} at the same size (empty
/// mask = all-normal image). per_image=false pools all pixels (default);
/// per_image=true averages per-image AUROCs over images that contain defects.
double pixel_auroc(const std::vector<Tensor>& maps, const std::vector<cv::Mat>& masks,
                   bool per_image = false);

struct RunRecord {
    uint64_t seed = 0;
    double image_auc = 0.0;
    double pixel_auc = 0.0;
    double adapt_seconds = 0.0;
};

struct EvalReport {
    std::string category;
    int k = 0;
    std::vector<RunRecord> runs;
    double mean_image_auc = 0.0;
    double mean_pixel_auc = 0.0;
    double std_image_auc = 0.0;
    double mean_adapt_seconds = 0.0;

    void finalize();
};

struct ProtocolOptions {
    int k = 2;
    int n_runs = 10;
    uint64_t base_seed = 0;  // run r uses seed base_seed + r
    EstimateOptions est;
    data::AugmentationConfig aug;
    double smooth_sigma = 4.0;
    bool per_image_pixel_auc = false;
    std::string dump_heatmap_dir;  // empty = no dump
};

/// k-shot evaluation of one category: n_runs support draws, estimate, score
/// every test image, AUROCs per run.
EvalReport evaluate_category(const std::vector<data::ImageSample>& dataset,
                             const std::string& category, RegADModel& model,
                             const ProtocolOptions& opts);

/// runs.csv (category,k,seed,image_auc,pixel_auc,adapt_seconds) and
/// summary.csv with per-category means and a macro-average row.
void write_reports(const std::vector<EvalReport>& reports, const std::string& out_dir);

/// Min-max normalized score map rendered with a color ramp.
void write_heatmap_png(const Tensor& map, const std::string& path);

}  // namespace regad::eval

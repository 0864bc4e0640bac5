#include "regad/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <stdexcept>

namespace regad::eval {

namespace fs = std::filesystem;

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("auroc: scores/labels size mismatch");
    const size_t n = scores.size();
    int64_t n_pos = 0;
    for (int l : labels) n_pos += l != 0;
    const int64_t n_neg = static_cast<int64_t>(n) - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("auroc: both classes must be present");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // midranks over tie groups; rank sum of the positive class
    double pos_rank_sum = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * (double(i + 1) + double(j + 1));
        for (size_t k = i; k <= j; ++k)
            if (labels[order[k]] != 0) pos_rank_sum += midrank;
        i = j + 1;
    }
    const double u = pos_rank_sum - 0.5 * double(n_pos) * double(n_pos + 1);
    return u / (double(n_pos) * double(n_neg));
}

double pixel_auroc(const std::vector<Tensor>& maps, const std::vector<cv::Mat>& masks,
                   bool per_image) {
    if (maps.size() != masks.size() || maps.empty())
        throw std::invalid_argument("pixel_auroc: maps/masks size mismatch");
    if (!per_image) {
        std::vector<double> scores;
        std::vector<int> labels;
        for (size_t m = 0; m < maps.size(); ++m) {
            const Tensor& map = maps[m];
            const cv::Mat& mask = masks[m];
            const int h = map.dim(0), w = map.dim(1);
            if (!mask.empty() && (mask.rows != h || mask.cols != w))
                throw std::invalid_argument("pixel_auroc: mask/map size mismatch");
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    scores.push_back(map.at(y, x));
                    labels.push_back(mask.empty() ? 0 : mask.at<uint8_t>(y, x) != 0);
                }
        }
        if (std::find(labels.begin(), labels.end(), 1) == labels.end())
            throw std::runtime_error("pixel_auroc: no defect pixels in the pool");
        return auroc(scores, labels);
    }
    double sum = 0.0;
    int count = 0;
    for (size_t m = 0; m < maps.size(); ++m) {
        if (masks[m].empty() || cv::countNonZero(masks[m]) == 0) continue;
        std::vector<double> scores;
        std::vector<int> labels;
        const Tensor& map = maps[m];
        for (int y = 0; y < map.dim(0); ++y)
            for (int x = 0; x < map.dim(1); ++x) {
                scores.push_back(map.at(y, x));
                labels.push_back(masks[m].at<uint8_t>(y, x) != 0);
            }
        if (std::find(labels.begin(), labels.end(), 0) == labels.end()) continue;
        sum += auroc(scores, labels);
        ++count;
    }
    if (count == 0) throw std::runtime_error("pixel_auroc: no defect pixels in the pool");
    return sum / count;
}

void EvalReport::finalize() {
    if (runs.empty()) return;
    double si = 0.0, sp = 0.0, st = 0.0;
    for (const auto& r : runs) {
        si += r.image_auc;
        sp += r.pixel_auc;
        st += r.adapt_seconds;
    }
    mean_image_auc = si / runs.size();
    mean_pixel_auc = sp / runs.size();
    mean_adapt_seconds = st / runs.size();
    double var = 0.0;
    for (const auto& r : runs) {
        const double d = r.image_auc - mean_image_auc;
        var += d * d;
    }
    std_image_auc = runs.size() > 1 ? std::sqrt(var / double(runs.size() - 1)) : 0.0;
}

EvalReport evaluate_category(const std::vector<data::ImageSample>& dataset,
                             const std::string& category, RegADModel& model,
                             const ProtocolOptions& opts) {
    EvalReport report;
    report.category = category;
    report.k = opts.k;

    std::vector<data::ImageSample> test_pool;
    for (const auto& s : dataset)
        if (s.category == category && s.split == data::Split::Test) test_pool.push_back(s);
    if (test_pool.empty())
        throw std::runtime_error("evaluate: no test images for category " + category);

    for (int run = 0; run < opts.n_runs; ++run) {
        const uint64_t seed = opts.base_seed + static_cast<uint64_t>(run);
        auto support = data::sample_support(dataset, category, opts.k, seed);
        EstimateOptions est = opts.est;
        est.channel_seed = seed;
        est.side = model.config().side;
        GaussianGrid grid = estimate(support, model, opts.aug, est);

        std::vector<double> scores;
        std::vector<int> labels;
        std::vector<Tensor> maps;
        std::vector<cv::Mat> masks;
        ScoreOptions sopts;
        sopts.smooth_sigma = opts.smooth_sigma;
        for (const auto& s : test_pool) {
            AnomalyMap am = score_image(s, model, grid, sopts);
            scores.push_back(am.image_score);
            labels.push_back(s.label == data::Label::Anomalous ? 1 : 0);
            const auto pre = data::preprocess(s, model.config().side, false);
            masks.push_back(pre.mask);  // empty for normal images
            if (!opts.dump_heatmap_dir.empty()) {
                fs::create_directories(opts.dump_heatmap_dir);
                const std::string name = category + "_run" + std::to_string(run) + "_" +
                                         fs::path(s.source_path).stem().string() + ".png";
                write_heatmap_png(am.image_scores,
                                  (fs::path(opts.dump_heatmap_dir) / name).string());
            }
            maps.push_back(std::move(am.image_scores));
        }
        RunRecord rec;
        rec.seed = seed;
        rec.image_auc = auroc(scores, labels);
        rec.pixel_auc = pixel_auroc(maps, masks, opts.per_image_pixel_auc);
        rec.adapt_seconds = std::stod(grid.meta.at("adaptation_seconds"));
        report.runs.push_back(rec);
    }
    report.finalize();
    return report;
}

void write_heatmap_png(const Tensor& map, const std::string& path) {
    const int h = map.dim(0), w = map.dim(1);
    double lo = map[0], hi = map[0];
    for (int64_t i = 1; i < map.numel(); ++i) {
        lo = std::min(lo, double(map[i]));
        hi = std::max(hi, double(map[i]));
    }
    const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
    cv::Mat gray(h, w, CV_8UC1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            gray.at<uint8_t>(y, x) = static_cast<uint8_t>((map.at(y, x) - lo) * scale);
    cv::Mat color;
    cv::applyColorMap(gray, color, cv::COLORMAP_JET);
    if (!cv::imwrite(path, color))
        throw std::runtime_error("heatmap: failed to write " + path);
}

void write_reports(const std::vector<EvalReport>& reports, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream runs(fs::path(out_dir) / "runs.csv");
    runs << "category,k,seed,image_auc,pixel_auc,adapt_seconds\n";
    for (const auto& rep : reports)
        for (const auto& r : rep.runs)
            runs << rep.category << "," << rep.k << "," << r.seed << "," << r.image_auc << ","
                 << r.pixel_auc << "," << r.adapt_seconds << "\n";

    std::ofstream summary(fs::path(out_dir) / "summary.csv");
    summary << "category,k,mean_image_auc,std_image_auc,mean_pixel_auc,mean_adapt_seconds\n";
    double mi = 0.0, mp = 0.0, mt = 0.0;
    for (const auto& rep : reports) {
        summary << rep.category << "," << rep.k << "," << rep.mean_image_auc << ","
                << rep.std_image_auc << "," << rep.mean_pixel_auc << ","
                << rep.mean_adapt_seconds << "\n";
        mi += rep.mean_image_auc;
        mp += rep.mean_pixel_auc;
        mt += rep.mean_adapt_seconds;
    }
    if (!reports.empty()) {
        const double n = double(reports.size());
        summary << "macro_average," << reports.front().k << "," << mi / n << ",," << mp / n << ","
                << mt / n << "\n";
    }
}

}  // namespace regad::eval

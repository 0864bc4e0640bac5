#include "regad/dataio.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <opencv2/imgproc.hpp>
#include <set>
#include <sstream>
#include <stdexcept>

#include "regad/rng.hpp"

namespace regad::data {

namespace fs = std::filesystem;

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".tif" ||
           ext == ".tiff";
}

std::vector<fs::path> sorted_images(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> sorted_subdirs(const fs::path& dir) {
    std::vector<std::string> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory() && e.path().filename().string()[0] != '.')
            out.push_back(e.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

DatasetKind dataset_kind_from_string(const std::string& s) {
    if (s == "mvtec") return DatasetKind::MVTec;
    if (s == "mpdd") return DatasetKind::MPDD;
    if (s == "synthetic") return DatasetKind::Synthetic;
    throw std::invalid_argument("unknown dataset kind: " + s);
}

std::string to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::MVTec: return "mvtec";
        case DatasetKind::MPDD: return "mpdd";
        case DatasetKind::Synthetic: return "synthetic";
    }
    throw std::logic_error("bad dataset kind");
}

std::vector<ImageSample> load_dataset(const std::string& root, DatasetKind kind) {
    (void)kind;  // all three share the directory convention
    if (!fs::is_directory(root))
        throw std::runtime_error("ingestion error: dataset root not found: " + root);
    std::vector<ImageSample> out;
    const auto categories = sorted_subdirs(root);
    if (categories.empty())
        throw std::runtime_error("ingestion error: no categories under " + root);
    for (const auto& cat : categories) {
        const fs::path cat_dir = fs::path(root) / cat;
        const auto train_files = sorted_images(cat_dir / "train" / "good");
        std::vector<ImageSample> cat_samples;
        for (const auto& p : train_files) {
            ImageSample s;
            s.category = cat;
            s.split = Split::Train;
            s.label = Label::Normal;
            s.source_path = p.string();
            cat_samples.push_back(std::move(s));
        }
        int test_count = 0;
        for (const auto& defect : sorted_subdirs(cat_dir / "test")) {
            for (const auto& p : sorted_images(cat_dir / "test" / defect)) {
                ImageSample s;
                s.category = cat;
                s.split = Split::Test;
                s.source_path = p.string();
                if (defect == "good") {
                    s.label = Label::Normal;
                } else {
                    s.label = Label::Anomalous;
                    const fs::path gt_dir = cat_dir / "ground_truth" / defect;
                    const std::string stem = p.stem().string();
                    fs::path mask = gt_dir / (stem + "_mask.png");
                    if (!fs::exists(mask)) mask = gt_dir / (stem + ".png");
                    if (!fs::exists(mask))
                        throw std::runtime_error(
                            "ingestion error: missing ground-truth mask for " + p.string());
                    s.mask_path = mask.string();
                }
                cat_samples.push_back(std::move(s));
                ++test_count;
            }
        }
        if (train_files.empty() || test_count == 0)
            throw std::runtime_error("ingestion error: empty category: " + cat);
        for (auto& s : cat_samples) out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(),
              [](const ImageSample& a, const ImageSample& b) { return a.source_path < b.source_path; });
    return out;
}

std::vector<std::string> list_categories(const std::vector<ImageSample>& samples) {
    std::set<std::string> cats;
    for (const auto& s : samples) cats.insert(s.category);
    return {cats.begin(), cats.end()};
}

LooSplit make_loo_split(const std::vector<ImageSample>& samples, const std::string& target) {
    bool seen = false;
    LooSplit split;
    for (const auto& s : samples) {
        if (s.category == target) {
            seen = true;
            if (s.split == Split::Test) split.test_pool.push_back(s);
        } else if (s.split == Split::Train && s.label == Label::Normal) {
            split.train_pool.push_back(s);
        }
    }
    if (!seen) throw std::runtime_error("split error: target category not present: " + target);
    if (split.train_pool.empty())
        std::cerr << "warning: leave-one-out train pool for target '" << target
                  << "' is empty (single-category dataset?)\n";
    return split;
}

SupportSet sample_support(const std::vector<ImageSample>& samples, const std::string& category,
                          int k, uint64_t seed) {
    std::vector<const ImageSample*> candidates;
    for (const auto& s : samples)
        if (s.category == category && s.split == Split::Train && s.label == Label::Normal)
            candidates.push_back(&s);
    if (static_cast<int>(candidates.size()) < k)
        throw std::runtime_error("support error: category '" + category + "' has " +
                                 std::to_string(candidates.size()) +
                                 " normal train images, need k=" + std::to_string(k));
    // partial Fisher-Yates over indices
    std::vector<size_t> idx(candidates.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    auto rng = make_rng({seed, 0x737570706fULL});
    for (int i = 0; i < k; ++i) {
        const size_t j = i + static_cast<size_t>(rand_index(rng, idx.size() - i));
        std::swap(idx[static_cast<size_t>(i)], idx[j]);
    }
    SupportSet out;
    out.category = category;
    out.k = k;
    out.seed = seed;
    for (int i = 0; i < k; ++i) out.samples.push_back(*candidates[idx[static_cast<size_t>(i)]]);
    return out;
}

std::string AugmentationStep::name() const {
    if (is_identity()) return "identity";
    std::ostringstream os;
    bool first = true;
    auto sep = [&] {
        if (!first) os << "+";
        first = false;
    };
    if (gray) {
        sep();
        os << "gray";
    }
    if (flip) {
        sep();
        os << (*flip == FlipAxis::Horizontal ? "fliph" : "flipv");
    }
    if (rotate_deg) {
        sep();
        os << "rot" << *rotate_deg;
    }
    if (translate) {
        sep();
        os << "t(" << translate->first << "," << translate->second << ")";
    }
    return os.str();
}

std::vector<AugmentationStep> enumerate_augmentations(const AugmentationConfig& cfg) {
    std::vector<AugmentationStep> out;
    const int n_gray = cfg.enable_gray ? 1 : 0;
    const auto& flips = cfg.flip_axes;
    const auto& rots = cfg.rotation_angles;
    const auto& trans = cfg.translation_offsets;
    const size_t n_flip = cfg.enable_flip ? flips.size() : 0;
    const size_t n_rot = cfg.enable_rotate ? rots.size() : 0;
    const size_t n_tr = cfg.enable_translate ? trans.size() : 0;
    for (int g = 0; g <= n_gray; ++g)
        for (size_t f = 0; f <= n_flip; ++f)
            for (size_t r = 0; r <= n_rot; ++r)
                for (size_t t = 0; t <= n_tr; ++t) {
                    AugmentationStep step;
                    step.gray = g == 1;
                    if (f > 0) step.flip = flips[f - 1];
                    if (r > 0) step.rotate_deg = rots[r - 1];
                    if (t > 0) step.translate = trans[t - 1];
                    out.push_back(step);
                }
    return out;
}

ImageSample apply_augmentation(const ImageSample& sample, const AugmentationStep& step) {
    ImageSample out = load_pixels(sample);
    if (step.is_identity()) {
        out.augmentation = "identity";
        return out;
    }
    cv::Mat img = out.pixels.clone();
    if (step.gray) {
        std::vector<cv::Mat> ch(3);
        cv::split(img, ch);
        cv::Mat mean = (ch[0] + ch[1] + ch[2]) / 3.0f;
        cv::merge(std::vector<cv::Mat>{mean, mean, mean}, img);
    }
    if (step.flip) cv::flip(img, img, *step.flip == FlipAxis::Horizontal ? 1 : 0);
    if (step.rotate_deg) {
        const cv::Point2f center(img.cols / 2.0f, img.rows / 2.0f);
        const cv::Mat m = cv::getRotationMatrix2D(center, *step.rotate_deg, 1.0);
        cv::warpAffine(img, img, m, img.size(), cv::INTER_LINEAR, cv::BORDER_CONSTANT,
                       cv::Scalar(0, 0, 0));
    }
    if (step.translate) {
        const double dx = step.translate->first * img.cols;
        const double dy = step.translate->second * img.rows;
        const cv::Mat m = (cv::Mat_<double>(2, 3) << 1, 0, dx, 0, 1, dy);
        cv::warpAffine(img, img, m, img.size(), cv::INTER_LINEAR, cv::BORDER_CONSTANT,
                       cv::Scalar(0, 0, 0));
    }
    out.pixels = img;
    out.augmentation = step.name();
    return out;
}

std::vector<ImageSample> build_support_pool(const SupportSet& support,
                                            const AugmentationConfig& cfg) {
    if (support.samples.empty())
        throw std::invalid_argument("build_support_pool: empty support set");
    const auto steps = enumerate_augmentations(cfg);
    std::vector<ImageSample> pool;
    pool.reserve(support.samples.size() * steps.size());
    for (const auto& s : support.samples) {
        const ImageSample loaded = load_pixels(s);
        for (const auto& step : steps) pool.push_back(apply_augmentation(loaded, step));
    }
    return pool;
}

}  // namespace regad::data

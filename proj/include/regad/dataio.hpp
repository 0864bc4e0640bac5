#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "regad/image.hpp"

namespace regad::data {

enum class DatasetKind { MVTec, MPDD, Synthetic };
DatasetKind dataset_kind_from_string(const std::string& s);
std::string to_string(DatasetKind kind);

/// Walk a dataset root laid out as
///   <category>/train/good/*.png
///   <category>/test/<defect_type>/*.png
///   <category>/ground_truth/<defect_type>/*_mask.png
/// Returns samples ordered lexicographically by path. Pixels are loaded
/// lazily; structural problems (missing masks, empty categories) fail here.
std::vector<ImageSample> load_dataset(const std::string& root, DatasetKind kind);

std::vector<std::string> list_categories(const std::vector<ImageSample>& samples);

struct LooSplit {
    std::vector<ImageSample> train_pool;  // train-split normals of every other category
    std::vector<ImageSample> test_pool;   // test-split images of the target
};
LooSplit make_loo_split(const std::vector<ImageSample>& samples, const std::string& target);

struct SupportSet {
    std::string category;
    int k = 0;
    std::vector<ImageSample> samples;
    uint64_t seed = 0;
};
/// Uniform sample without replacement from the target category's train-split
/// normal images. Same seed, same result.
SupportSet sample_support(const std::vector<ImageSample>& samples, const std::string& category,
                          int k, uint64_t seed);

enum class FlipAxis { Horizontal, Vertical };

struct AugmentationConfig {
    bool enable_gray = true;
    bool enable_flip = true;
    bool enable_translate = true;
    bool enable_rotate = true;
    std::vector<double> rotation_angles = {15, -15, 30, -30, 45, -45, 90, -90};
    std::vector<std::pair<double, double>> translation_offsets =
        {{0.1, 0.0}, {-0.1, 0.0}, {0.0, 0.1}, {0.0, -0.1}};  // fractions of the side
    std::vector<FlipAxis> flip_axes = {FlipAxis::Horizontal, FlipAxis::Vertical};

    static AugmentationConfig none() {
        AugmentationConfig c;
        c.enable_gray = c.enable_flip = c.enable_translate = c.enable_rotate = false;
        return c;
    }
};

/// One concrete choice per family ("skip" allowed everywhere); applied in the
/// fixed order gray -> flip -> rotate -> translate.
struct AugmentationStep {
    bool gray = false;
    std::optional<FlipAxis> flip;
    std::optional<double> rotate_deg;
    std::optional<std::pair<double, double>> translate;

    bool is_identity() const { return !gray && !flip && !rotate_deg && !translate; }
    std::string name() const;
};

/// Cartesian product over the enabled families; the identity chain is first.
std::vector<AugmentationStep> enumerate_augmentations(const AugmentationConfig& cfg);

ImageSample apply_augmentation(const ImageSample& s, const AugmentationStep& step);

/// k * |chains| augmented samples, support order major, chain order minor.
std::vector<ImageSample> build_support_pool(const SupportSet& support,
                                            const AugmentationConfig& cfg);

struct SynthConfig {
    int categories = 3;
    int train_per_cat = 20;
    int test_per_cat = 10;
    int side = 256;
    uint64_t seed = 0;
};
/// Procedurally textured categories with blob/scratch defects and exact
/// masks, written in the directory convention load_dataset expects.
void generate_synthetic_dataset(const std::string& out_dir, const SynthConfig& cfg);

}  // namespace regad::data

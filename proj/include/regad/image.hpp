#pragma once

#include <array>
#include <opencv2/core.hpp>
#include <string>
#include <vector>

#include "regad/tensor.hpp"

namespace regad::data {

enum class Split { Train, Test };
enum class Label { Normal, Anomalous };

/// One dataset image. Pixels are CV_32FC3 RGB in [0,1] until standardization;
/// pixels may be empty for lazily-loaded samples (see load_pixels).
struct ImageSample {
    cv::Mat pixels;
    std::string category;
    Split split = Split::Train;
    Label label = Label::Normal;
    cv::Mat mask;  // CV_8UC1 with values {0,1}; empty when absent
    std::string source_path;
    std::string mask_path;
    std::string augmentation;  // applied augmentation chain, empty = original
    bool standardized = false;

    bool has_mask() const { return !mask.empty() || !mask_path.empty(); }
    bool loaded() const { return !pixels.empty(); }
};

// Channel normalization constants of the pretrained backbone inputs.
inline constexpr std::array<float, 3> kNormMean = {0.485f, 0.456f, 0.406f};
inline constexpr std::array<float, 3> kNormStd = {0.229f, 0.224f, 0.225f};

std::string image_norm_mean_csv();
std::string image_norm_std_csv();

/// Decode pixels (and mask when present) from disk; returns a copy with the
/// fields populated. Throws naming the path on unreadable files. No-op for
/// already-loaded samples.
ImageSample load_pixels(const ImageSample& s);

/// Resize to side x side (bilinear; masks nearest-neighbor) and optionally
/// standardize channels with the fixed backbone constants.
ImageSample preprocess(const ImageSample& s, int side, bool standardize = true);

/// CHW tensor of one sample's pixels.
Tensor to_tensor(const ImageSample& s);
/// NCHW batch tensor; all samples must share spatial dims.
Tensor to_batch(const std::vector<ImageSample>& samples);
Tensor to_batch(const ImageSample& a, const ImageSample& b);

}  // namespace regad::data

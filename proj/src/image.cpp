#include "regad/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <sstream>
#include <stdexcept>

namespace regad::data {

std::string image_norm_mean_csv() { return "0.485,0.456,0.406"; }
std::string image_norm_std_csv() { return "0.229,0.224,0.225"; }

ImageSample load_pixels(const ImageSample& s) {
    if (s.loaded()) return s;
    ImageSample out = s;
    cv::Mat bgr = cv::imread(s.source_path, cv::IMREAD_COLOR);  // grayscale/alpha folded to 3ch
    if (bgr.empty())
        throw std::runtime_error("ingestion error: unreadable image: " + s.source_path);
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    rgb.convertTo(out.pixels, CV_32FC3, 1.0 / 255.0);
    if (!s.mask_path.empty()) {
        cv::Mat m = cv::imread(s.mask_path, cv::IMREAD_GRAYSCALE);
        if (m.empty())
            throw std::runtime_error("ingestion error: unreadable mask: " + s.mask_path);
        out.mask = m > 0;  // {0,255}
        out.mask /= 255;   // {0,1}
        if (out.mask.size() != out.pixels.size())
            throw std::runtime_error("ingestion error: mask shape mismatch: " + s.mask_path);
    }
    return out;
}

ImageSample preprocess(const ImageSample& s, int side, bool standardize) {
    if (side <= 0) throw std::invalid_argument("preprocess: side must be positive");
    ImageSample in = load_pixels(s);
    if (in.pixels.rows == 0 || in.pixels.cols == 0)
        throw std::runtime_error("preprocess: zero-area image: " + s.source_path);
    ImageSample out = in;
    if (in.pixels.rows != side || in.pixels.cols != side)
        cv::resize(in.pixels, out.pixels, cv::Size(side, side), 0, 0, cv::INTER_LINEAR);
    else
        out.pixels = in.pixels.clone();
    if (!in.mask.empty()) {
        if (in.mask.rows != side || in.mask.cols != side)
            cv::resize(in.mask, out.mask, cv::Size(side, side), 0, 0, cv::INTER_NEAREST);
        else
            out.mask = in.mask.clone();
    }
    if (standardize) {
        std::vector<cv::Mat> ch(3);
        cv::split(out.pixels, ch);
        for (int c = 0; c < 3; ++c) ch[static_cast<size_t>(c)] = (ch[static_cast<size_t>(c)] - kNormMean[static_cast<size_t>(c)]) / kNormStd[static_cast<size_t>(c)];
        cv::merge(ch, out.pixels);
        out.standardized = true;
    }
    return out;
}

Tensor to_tensor(const ImageSample& s) {
    if (!s.loaded()) return to_tensor(load_pixels(s));
    const int h = s.pixels.rows, w = s.pixels.cols;
    Tensor t({1, 3, h, w});
    for (int y = 0; y < h; ++y) {
        const cv::Vec3f* row = s.pixels.ptr<cv::Vec3f>(y);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) t.at(0, c, y, x) = row[x][c];
    }
    return t;
}

Tensor to_batch(const std::vector<ImageSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("to_batch: empty batch");
    const int h = samples[0].pixels.rows, w = samples[0].pixels.cols;
    Tensor t({static_cast<int>(samples.size()), 3, h, w});
    for (size_t n = 0; n < samples.size(); ++n) {
        const auto& s = samples[n];
        if (s.pixels.rows != h || s.pixels.cols != w)
            throw std::invalid_argument("to_batch: inconsistent spatial dims");
        for (int y = 0; y < h; ++y) {
            const cv::Vec3f* row = s.pixels.ptr<cv::Vec3f>(y);
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c) t.at(static_cast<int>(n), c, y, x) = row[x][c];
        }
    }
    return t;
}

Tensor to_batch(const ImageSample& a, const ImageSample& b) {
    return to_batch(std::vector<ImageSample>{a, b});
}

}  // namespace regad::data

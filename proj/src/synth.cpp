#include <cmath>
#include <cstdio>
#include <filesystem>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <stdexcept>

#include "regad/dataio.hpp"
#include "regad/rng.hpp"

namespace regad::data {

namespace fs = std::filesystem;

namespace {

struct CategoryStyle {
    float base[3];
    double stripe_angle;
    double stripe_period;
    double stripe_amp;
    std::vector<float> noise_grid;  // (kNoise+1)^2 values in [-1,1]
    double noise_amp;
};

constexpr int kNoise = 8;

CategoryStyle make_style(uint64_t seed, int cat_index) {
    auto rng = make_rng({seed, 0x636174ULL, static_cast<uint64_t>(cat_index)});
    CategoryStyle st;
    for (auto& b : st.base) b = static_cast<float>(rand_uniform(rng, 0.35, 0.65));
    st.stripe_angle = rand_uniform(rng, 0.0, 3.14159);
    st.stripe_period = rand_uniform(rng, 0.12, 0.3);  // fraction of side
    st.stripe_amp = rand_uniform(rng, 0.06, 0.12);
    st.noise_grid.resize((kNoise + 1) * (kNoise + 1));
    for (auto& v : st.noise_grid) v = static_cast<float>(rand_uniform(rng, -1.0, 1.0));
    st.noise_amp = rand_uniform(rng, 0.05, 0.1);
    return st;
}

float sample_noise(const CategoryStyle& st, double u, double v) {
    // bilinear over the style's noise grid; u,v in [0,1)
    const double gu = u * kNoise, gv = v * kNoise;
    const int x0 = std::min(static_cast<int>(gu), kNoise - 1);
    const int y0 = std::min(static_cast<int>(gv), kNoise - 1);
    const double fx = gu - x0, fy = gv - y0;
    auto g = [&](int y, int x) { return st.noise_grid[static_cast<size_t>(y * (kNoise + 1) + x)]; };
    const double top = (1 - fx) * g(y0, x0) + fx * g(y0, x0 + 1);
    const double bot = (1 - fx) * g(y0 + 1, x0) + fx * g(y0 + 1, x0 + 1);
    return static_cast<float>((1 - fy) * top + fy * bot);
}

cv::Mat render_normal(const CategoryStyle& st, int side, std::mt19937_64& rng) {
    const double phase = rand_uniform(rng, 0.0, 6.28318);
    const double ox = rand_uniform(rng, -0.04, 0.04);
    const double oy = rand_uniform(rng, -0.04, 0.04);
    const double brightness = rand_uniform(rng, -0.04, 0.04);
    const double ca = std::cos(st.stripe_angle), sa = std::sin(st.stripe_angle);
    cv::Mat img(side, side, CV_32FC3);
    for (int y = 0; y < side; ++y) {
        cv::Vec3f* row = img.ptr<cv::Vec3f>(y);
        for (int x = 0; x < side; ++x) {
            const double u = double(x) / side, v = double(y) / side;
            const double stripe =
                st.stripe_amp * std::sin(6.28318 * ((u * ca + v * sa) / st.stripe_period) + phase);
            const double un = u + ox < 0 ? u + ox + 1.0 : (u + ox >= 1.0 ? u + ox - 1.0 : u + ox);
            const double vn = v + oy < 0 ? v + oy + 1.0 : (v + oy >= 1.0 ? v + oy - 1.0 : v + oy);
            const double noise = st.noise_amp * sample_noise(st, un, vn);
            for (int c = 0; c < 3; ++c) {
                double val = st.base[c] + stripe + noise + brightness;
                row[x][c] = static_cast<float>(std::min(std::max(val, 0.0), 1.0));
            }
        }
    }
    return img;
}

// Returns the defect mask; pixels are modified in place.
cv::Mat apply_defect(cv::Mat& img, const std::string& kind, std::mt19937_64& rng) {
    const int side = img.rows;
    cv::Mat mask = cv::Mat::zeros(side, side, CV_8UC1);
    if (kind == "blob") {
        const cv::Point center(static_cast<int>(rand_uniform(rng, 0.3, 0.7) * side),
                               static_cast<int>(rand_uniform(rng, 0.3, 0.7) * side));
        const cv::Size axes(static_cast<int>(rand_uniform(rng, 0.08, 0.16) * side),
                            static_cast<int>(rand_uniform(rng, 0.08, 0.16) * side));
        const double angle = rand_uniform(rng, 0.0, 180.0);
        cv::ellipse(mask, center, axes, angle, 0, 360, cv::Scalar(1), cv::FILLED);
    } else {  // scratch
        const double x0 = rand_uniform(rng, 0.2, 0.8) * side;
        const double y0 = rand_uniform(rng, 0.2, 0.8) * side;
        const double dir = rand_uniform(rng, 0.0, 6.28318);
        const double len = rand_uniform(rng, 0.3, 0.55) * side;
        const cv::Point p0(static_cast<int>(x0), static_cast<int>(y0));
        const cv::Point p1(static_cast<int>(x0 + len * std::cos(dir)),
                           static_cast<int>(y0 + len * std::sin(dir)));
        const int thick = std::max(2, static_cast<int>(0.03 * side));
        cv::line(mask, p0, p1, cv::Scalar(1), thick);
    }
    const double delta = (rand_uniform(rng) < 0.5 ? -1.0 : 1.0) * rand_uniform(rng, 0.35, 0.5);
    for (int y = 0; y < side; ++y) {
        cv::Vec3f* row = img.ptr<cv::Vec3f>(y);
        const uint8_t* m = mask.ptr<uint8_t>(y);
        for (int x = 0; x < side; ++x) {
            if (!m[x]) continue;
            for (int c = 0; c < 3; ++c)
                row[x][c] = static_cast<float>(
                    std::min(std::max(double(row[x][c]) + delta, 0.0), 1.0));
        }
    }
    return mask;
}

void write_png(const fs::path& path, const cv::Mat& img_rgb01) {
    cv::Mat u8, bgr;
    img_rgb01.convertTo(u8, CV_8UC3, 255.0);
    cv::cvtColor(u8, bgr, cv::COLOR_RGB2BGR);
    if (!cv::imwrite(path.string(), bgr))
        throw std::runtime_error("synth: failed to write " + path.string());
}

void write_mask(const fs::path& path, const cv::Mat& mask01) {
    cv::Mat u8;
    mask01.convertTo(u8, CV_8UC1, 255.0);
    if (!cv::imwrite(path.string(), u8))
        throw std::runtime_error("synth: failed to write " + path.string());
}

std::string index_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03d.png", i);
    return buf;
}

}  // namespace

void generate_synthetic_dataset(const std::string& out_dir, const SynthConfig& cfg) {
    if (cfg.categories < 1 || cfg.train_per_cat < 1 || cfg.test_per_cat < 2)
        throw std::invalid_argument(
            "synth: need categories >= 1, train-per-cat >= 1, test-per-cat >= 2");
    for (int ci = 0; ci < cfg.categories; ++ci) {
        char cat_name[32];
        std::snprintf(cat_name, sizeof(cat_name), "texture%02d", ci);
        const fs::path cat = fs::path(out_dir) / cat_name;
        const CategoryStyle style = make_style(cfg.seed, ci);

        fs::create_directories(cat / "train" / "good");
        for (int i = 0; i < cfg.train_per_cat; ++i) {
            auto rng = make_rng({cfg.seed, 0x7472ULL, static_cast<uint64_t>(ci),
                                 static_cast<uint64_t>(i)});
            write_png(cat / "train" / "good" / index_name(i), render_normal(style, cfg.side, rng));
        }

        const int n_good = std::max(1, cfg.test_per_cat / 3);
        fs::create_directories(cat / "test" / "good");
        for (int i = 0; i < n_good; ++i) {
            auto rng = make_rng({cfg.seed, 0x7465ULL, static_cast<uint64_t>(ci),
                                 static_cast<uint64_t>(i)});
            write_png(cat / "test" / "good" / index_name(i), render_normal(style, cfg.side, rng));
        }
        const char* kinds[2] = {"blob", "scratch"};
        int counts[2] = {0, 0};
        for (int i = 0; i < cfg.test_per_cat - n_good; ++i) {
            const int kind = i % 2;
            auto rng = make_rng({cfg.seed, 0x616eULL, static_cast<uint64_t>(ci),
                                 static_cast<uint64_t>(i)});
            cv::Mat img = render_normal(style, cfg.side, rng);
            cv::Mat mask = apply_defect(img, kinds[kind], rng);
            const fs::path test_dir = cat / "test" / kinds[kind];
            const fs::path gt_dir = cat / "ground_truth" / kinds[kind];
            fs::create_directories(test_dir);
            fs::create_directories(gt_dir);
            const int idx = counts[kind]++;
            write_png(test_dir / index_name(idx), img);
            char mask_name[24];
            std::snprintf(mask_name, sizeof(mask_name), "%03d_mask.png", idx);
            write_mask(gt_dir / mask_name, mask);
        }
    }
}

}  // namespace regad::data

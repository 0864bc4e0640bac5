#include "regad/kernels.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace regad::kernels {

namespace {

using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

int conv_out_dim(int in, int kernel, int stride, int pad) {
    return (in + 2 * pad - kernel) / stride + 1;
}

// col is [Cin*kh*kw, Ho*Wo] for one sample.
void im2col(const float* in, int ci, int h, int w, int kh, int kw, int stride, int pad,
            int ho, int wo, float* col) {
    const int64_t plane = int64_t(h) * w;
    const int64_t out_plane = int64_t(ho) * wo;
#pragma omp parallel for schedule(static)
    for (int c = 0; c < ci; ++c) {
        const float* src = in + c * plane;
        float* dst_c = col + int64_t(c) * kh * kw * out_plane;
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
                float* dst = dst_c + (int64_t(ky) * kw + kx) * out_plane;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) {
                        for (int ox = 0; ox < wo; ++ox) dst[int64_t(oy) * wo + ox] = 0.0f;
                        continue;
                    }
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        dst[int64_t(oy) * wo + ox] =
                            (ix >= 0 && ix < w) ? src[int64_t(iy) * w + ix] : 0.0f;
                    }
                }
            }
        }
    }
}

void col2im(const float* col, int ci, int h, int w, int kh, int kw, int stride, int pad,
            int ho, int wo, float* in) {
    const int64_t plane = int64_t(h) * w;
    const int64_t out_plane = int64_t(ho) * wo;
#pragma omp parallel for schedule(static)
    for (int c = 0; c < ci; ++c) {
        float* dst = in + c * plane;
        for (int64_t i = 0; i < plane; ++i) dst[i] = 0.0f;
        const float* src_c = col + int64_t(c) * kh * kw * out_plane;
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
                const float* src = src_c + (int64_t(ky) * kw + kx) * out_plane;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < w) dst[int64_t(iy) * w + ix] += src[int64_t(oy) * wo + ox];
                    }
                }
            }
        }
    }
}

inline double norm_to_pixel(double coord, int size) {
    return ((coord + 1.0) * size - 1.0) * 0.5;
}

inline double snap(double px) {
    const double r = std::round(px);
    return (std::abs(px - r) < kGridSnapEps) ? r : px;
}

}  // namespace

Tensor conv2d_forward(const Tensor& in, const Tensor& weight, const Tensor* bias,
                      int stride, int pad) {
    const int n = in.dim(0), ci = in.dim(1), h = in.dim(2), w = in.dim(3);
    const int co = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
    if (weight.dim(1) != ci) throw std::invalid_argument("conv2d: channel mismatch");
    const int ho = conv_out_dim(h, kh, stride, pad);
    const int wo = conv_out_dim(w, kw, stride, pad);
    Tensor out({n, co, ho, wo});

    const int k = ci * kh * kw;
    const int64_t l = int64_t(ho) * wo;
    std::vector<float> col(static_cast<size_t>(k) * l);
    CMapRM wmat(weight.data(), co, k);
    for (int s = 0; s < n; ++s) {
        im2col(in.data() + int64_t(s) * ci * h * w, ci, h, w, kh, kw, stride, pad, ho, wo,
               col.data());
        CMapRM cmat(col.data(), k, l);
        MapRM omat(out.data() + int64_t(s) * co * l, co, l);
        omat.noalias() = wmat * cmat;
        if (bias) {
            const float* b = bias->data();
#pragma omp parallel for schedule(static)
            for (int c = 0; c < co; ++c) omat.row(c).array() += b[c];
        }
    }
    return out;
}

void conv2d_backward(const Tensor& in, const Tensor& weight, const Tensor& grad_out,
                     int stride, int pad, Tensor* grad_in, Tensor& grad_weight,
                     Tensor* grad_bias) {
    const int n = in.dim(0), ci = in.dim(1), h = in.dim(2), w = in.dim(3);
    const int co = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
    const int ho = grad_out.dim(2), wo = grad_out.dim(3);
    const int k = ci * kh * kw;
    const int64_t l = int64_t(ho) * wo;

    std::vector<float> col(static_cast<size_t>(k) * l);
    std::vector<float> gcol(static_cast<size_t>(k) * l);
    CMapRM wmat(weight.data(), co, k);
    MapRM gwmat(grad_weight.data(), co, k);
    for (int s = 0; s < n; ++s) {
        im2col(in.data() + int64_t(s) * ci * h * w, ci, h, w, kh, kw, stride, pad, ho, wo,
               col.data());
        CMapRM cmat(col.data(), k, l);
        CMapRM gomat(grad_out.data() + int64_t(s) * co * l, co, l);
        gwmat.noalias() += gomat * cmat.transpose();
        if (grad_bias) {
            float* gb = grad_bias->data();
            for (int c = 0; c < co; ++c) gb[c] += gomat.row(c).sum();
        }
        if (grad_in) {
            MapRM gcmat(gcol.data(), k, l);
            gcmat.noalias() = wmat.transpose() * gomat;
            std::vector<float> gin_s(static_cast<size_t>(ci) * h * w);
            col2im(gcol.data(), ci, h, w, kh, kw, stride, pad, ho, wo, gin_s.data());
            float* dst = grad_in->data() + int64_t(s) * ci * h * w;
            const int64_t count = int64_t(ci) * h * w;
#pragma omp parallel for schedule(static)
            for (int64_t i = 0; i < count; ++i) dst[i] += gin_s[static_cast<size_t>(i)];
        }
    }
}

Tensor maxpool2d_forward(const Tensor& in, int kernel, int stride, int pad,
                         std::vector<int32_t>& argmax) {
    const int n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
    const int ho = conv_out_dim(h, kernel, stride, pad);
    const int wo = conv_out_dim(w, kernel, stride, pad);
    Tensor out({n, c, ho, wo});
    argmax.assign(static_cast<size_t>(out.numel()), -1);
    const int64_t planes = int64_t(n) * c;
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
        const float* src = in.data() + p * h * w;
        float* dst = out.data() + p * ho * wo;
        int32_t* amax = argmax.data() + p * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                float best = -std::numeric_limits<float>::infinity();
                int32_t best_idx = -1;
                for (int ky = 0; ky < kernel; ++ky) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < kernel; ++kx) {
                        const int ix = ox * stride - pad + kx;
                        if (ix < 0 || ix >= w) continue;
                        const float v = src[int64_t(iy) * w + ix];
                        if (v > best) {
                            best = v;
                            best_idx = static_cast<int32_t>(iy * w + ix);
                        }
                    }
                }
                dst[int64_t(oy) * wo + ox] = best_idx < 0 ? 0.0f : best;
                amax[int64_t(oy) * wo + ox] = best_idx;
            }
        }
    }
    return out;
}

Tensor maxpool2d_backward(const Tensor& grad_out, const std::vector<int32_t>& argmax,
                          const std::vector<int>& in_shape) {
    Tensor grad_in(in_shape);
    const int h = in_shape[2], w = in_shape[3];
    const int ho = grad_out.dim(2), wo = grad_out.dim(3);
    const int64_t planes = int64_t(in_shape[0]) * in_shape[1];
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
        const float* g = grad_out.data() + p * ho * wo;
        const int32_t* amax = argmax.data() + p * ho * wo;
        float* dst = grad_in.data() + p * h * w;
        for (int64_t i = 0; i < int64_t(ho) * wo; ++i)
            if (amax[i] >= 0) dst[amax[i]] += g[i];
    }
    return grad_in;
}

Tensor adaptive_avg_pool_forward(const Tensor& in, int out_h, int out_w) {
    const int n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
    Tensor out({n, c, out_h, out_w});
    const int64_t planes = int64_t(n) * c;
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
        const float* src = in.data() + p * h * w;
        float* dst = out.data() + p * out_h * out_w;
        for (int oy = 0; oy < out_h; ++oy) {
            const int y0 = (oy * h) / out_h;
            const int y1 = ((oy + 1) * h + out_h - 1) / out_h;
            for (int ox = 0; ox < out_w; ++ox) {
                const int x0 = (ox * w) / out_w;
                const int x1 = ((ox + 1) * w + out_w - 1) / out_w;
                double acc = 0.0;
                for (int y = y0; y < y1; ++y)
                    for (int x = x0; x < x1; ++x) acc += src[int64_t(y) * w + x];
                dst[int64_t(oy) * out_w + ox] =
                    static_cast<float>(acc / (double((y1 - y0)) * (x1 - x0)));
            }
        }
    }
    return out;
}

Tensor adaptive_avg_pool_backward(const Tensor& grad_out, const std::vector<int>& in_shape) {
    Tensor grad_in(in_shape);
    const int h = in_shape[2], w = in_shape[3];
    const int out_h = grad_out.dim(2), out_w = grad_out.dim(3);
    const int64_t planes = int64_t(in_shape[0]) * in_shape[1];
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
        const float* g = grad_out.data() + p * out_h * out_w;
        float* dst = grad_in.data() + p * h * w;
        for (int oy = 0; oy < out_h; ++oy) {
            const int y0 = (oy * h) / out_h;
            const int y1 = ((oy + 1) * h + out_h - 1) / out_h;
            for (int ox = 0; ox < out_w; ++ox) {
                const int x0 = (ox * w) / out_w;
                const int x1 = ((ox + 1) * w + out_w - 1) / out_w;
                const float share =
                    g[int64_t(oy) * out_w + ox] / (float((y1 - y0)) * (x1 - x0));
                for (int y = y0; y < y1; ++y)
                    for (int x = x0; x < x1; ++x) dst[int64_t(y) * w + x] += share;
            }
        }
    }
    return grad_in;
}

Tensor grid_sample_forward(const Tensor& in, const std::vector<Theta>& thetas) {
    const int n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
    if (static_cast<int>(thetas.size()) != n)
        throw std::invalid_argument("grid_sample: one theta per sample required");
    Tensor out({n, c, h, w});
    const int64_t planes = int64_t(n) * c;
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
        const int s = static_cast<int>(p / c);
        const Theta& t = thetas[static_cast<size_t>(s)];
        const float* src = in.data() + p * h * w;
        float* dst = out.data() + p * h * w;
        for (int oy = 0; oy < h; ++oy) {
            const double y = (2.0 * oy + 1.0 - h) / h;
            for (int ox = 0; ox < w; ++ox) {
                const double x = (2.0 * ox + 1.0 - w) / w;
                const double sx = t[0] * x + t[1] * y + t[2];
                const double sy = t[3] * x + t[4] * y + t[5];
                const double px = snap(norm_to_pixel(sx, w));
                const double py = snap(norm_to_pixel(sy, h));
                const int x0 = static_cast<int>(std::floor(px));
                const int y0 = static_cast<int>(std::floor(py));
                const double wx = px - x0, wy = py - y0;
                double acc = 0.0;
                for (int dy = 0; dy < 2; ++dy) {
                    const int yy = y0 + dy;
                    if (yy < 0 || yy >= h) continue;
                    const double fy = dy ? wy : 1.0 - wy;
                    if (fy == 0.0) continue;
                    for (int dx = 0; dx < 2; ++dx) {
                        const int xx = x0 + dx;
                        if (xx < 0 || xx >= w) continue;
                        const double fx = dx ? wx : 1.0 - wx;
                        if (fx == 0.0) continue;
                        acc += fy * fx * src[int64_t(yy) * w + xx];
                    }
                }
                dst[int64_t(oy) * w + ox] = static_cast<float>(acc);
            }
        }
    }
    return out;
}

void grid_sample_backward(const Tensor& in, const std::vector<Theta>& thetas,
                          const Tensor& grad_out, Tensor* grad_in,
                          std::vector<Theta>* grad_thetas) {
    const int n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
    if (grad_thetas) grad_thetas->assign(static_cast<size_t>(n), Theta{});
    std::vector<Theta> plane_gt(static_cast<size_t>(n) * c, Theta{});
    const int64_t planes = int64_t(n) * c;
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
        const int s = static_cast<int>(p / c);
        const Theta& t = thetas[static_cast<size_t>(s)];
        const float* src = in.data() + p * h * w;
        const float* g = grad_out.data() + p * h * w;
        float* gdst = grad_in ? grad_in->data() + p * h * w : nullptr;
        Theta& gt = plane_gt[static_cast<size_t>(p)];
        for (int oy = 0; oy < h; ++oy) {
            const double y = (2.0 * oy + 1.0 - h) / h;
            for (int ox = 0; ox < w; ++ox) {
                const double x = (2.0 * ox + 1.0 - w) / w;
                const double go = g[int64_t(oy) * w + ox];
                if (go == 0.0) continue;
                const double sx = t[0] * x + t[1] * y + t[2];
                const double sy = t[3] * x + t[4] * y + t[5];
                const double px = snap(norm_to_pixel(sx, w));
                const double py = snap(norm_to_pixel(sy, h));
                const int x0 = static_cast<int>(std::floor(px));
                const int y0 = static_cast<int>(std::floor(py));
                const double wx = px - x0, wy = py - y0;
                double v[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
                for (int dy = 0; dy < 2; ++dy) {
                    const int yy = y0 + dy;
                    if (yy < 0 || yy >= h) continue;
                    for (int dx = 0; dx < 2; ++dx) {
                        const int xx = x0 + dx;
                        if (xx < 0 || xx >= w) continue;
                        v[dy][dx] = src[int64_t(yy) * w + xx];
                        if (gdst) {
                            const double fy = dy ? wy : 1.0 - wy;
                            const double fx = dx ? wx : 1.0 - wx;
                            gdst[int64_t(yy) * w + xx] += static_cast<float>(go * fy * fx);
                        }
                    }
                }
                if (grad_thetas) {
                    const double dpx = (1.0 - wy) * (v[0][1] - v[0][0]) + wy * (v[1][1] - v[1][0]);
                    const double dpy = (1.0 - wx) * (v[1][0] - v[0][0]) + wx * (v[1][1] - v[0][1]);
                    const double gx = go * dpx * (0.5 * w);
                    const double gy = go * dpy * (0.5 * h);
                    gt[0] += gx * x;
                    gt[1] += gx * y;
                    gt[2] += gx;
                    gt[3] += gy * x;
                    gt[4] += gy * y;
                    gt[5] += gy;
                }
            }
        }
    }
    if (grad_thetas) {
        for (int64_t p = 0; p < planes; ++p) {
            const int s = static_cast<int>(p / c);
            for (int i = 0; i < 6; ++i)
                (*grad_thetas)[static_cast<size_t>(s)][static_cast<size_t>(i)] +=
                    plane_gt[static_cast<size_t>(p)][static_cast<size_t>(i)];
        }
    }
}

Tensor upsample_bilinear(const Tensor& in, int out_h, int out_w) {
    const int n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
    Tensor out({n, c, out_h, out_w});
    const double sy = double(h) / out_h;
    const double sx = double(w) / out_w;
    const int64_t planes = int64_t(n) * c;
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
        const float* src = in.data() + p * h * w;
        float* dst = out.data() + p * out_h * out_w;
        for (int oy = 0; oy < out_h; ++oy) {
            double py = (oy + 0.5) * sy - 0.5;
            py = std::min(std::max(py, 0.0), double(h - 1));
            const int y0 = static_cast<int>(std::floor(py));
            const int y1 = std::min(y0 + 1, h - 1);
            const double wy = py - y0;
            for (int ox = 0; ox < out_w; ++ox) {
                double px = (ox + 0.5) * sx - 0.5;
                px = std::min(std::max(px, 0.0), double(w - 1));
                const int x0 = static_cast<int>(std::floor(px));
                const int x1 = std::min(x0 + 1, w - 1);
                const double wx = px - x0;
                const double top = (1.0 - wx) * src[int64_t(y0) * w + x0] + wx * src[int64_t(y0) * w + x1];
                const double bot = (1.0 - wx) * src[int64_t(y1) * w + x0] + wx * src[int64_t(y1) * w + x1];
                dst[int64_t(oy) * out_w + ox] = static_cast<float>((1.0 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

void gaussian_blur(Tensor& map, double sigma) {
    if (sigma <= 0.0) return;
    const int h = map.dim(0), w = map.dim(1);
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kern(static_cast<size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kern[static_cast<size_t>(i + radius)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kern[static_cast<size_t>(i + radius)];
    }
    for (auto& k : kern) k /= sum;

    Tensor tmp({h, w});
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int xx = std::min(std::max(x + i, 0), w - 1);
                acc += kern[static_cast<size_t>(i + radius)] * map.at(y, xx);
            }
            tmp.at(y, x) = static_cast<float>(acc);
        }
    }
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int yy = std::min(std::max(y + i, 0), h - 1);
                acc += kern[static_cast<size_t>(i + radius)] * tmp.at(yy, x);
            }
            map.at(y, x) = static_cast<float>(acc);
        }
    }
}

}  // namespace regad::kernels

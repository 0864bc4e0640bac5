#include <cmath>

#include "regad/kernels.hpp"

// Straight-loop serial implementations. These are the ground truth the
// OpenMP kernels are tested against and the baseline for the benchmark.

namespace regad::kernels::ref {

namespace {

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
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (w + 2 * pad - kw) / stride + 1;
    Tensor out({n, co, ho, wo});
    for (int s = 0; s < n; ++s) {
        for (int oc = 0; oc < co; ++oc) {
            for (int oy = 0; oy < ho; ++oy) {
                for (int ox = 0; ox < wo; ++ox) {
                    double acc = bias ? (*bias)[oc] : 0.0;
                    for (int ic = 0; ic < ci; ++ic) {
                        for (int ky = 0; ky < kh; ++ky) {
                            const int iy = oy * stride - pad + ky;
                            if (iy < 0 || iy >= h) continue;
                            for (int kx = 0; kx < kw; ++kx) {
                                const int ix = ox * stride - pad + kx;
                                if (ix < 0 || ix >= w) continue;
                                acc += double(in.at(s, ic, iy, ix)) * weight.at(oc, ic, ky, kx);
                            }
                        }
                    }
                    out.at(s, oc, oy, ox) = static_cast<float>(acc);
                }
            }
        }
    }
    return out;
}

Tensor grid_sample_forward(const Tensor& in, const std::vector<Theta>& thetas) {
    const int n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
    Tensor out({n, c, h, w});
    for (int s = 0; s < n; ++s) {
        const Theta& t = thetas[static_cast<size_t>(s)];
        for (int ch = 0; ch < c; ++ch) {
            for (int oy = 0; oy < h; ++oy) {
                const double y = (2.0 * oy + 1.0 - h) / h;
                for (int ox = 0; ox < w; ++ox) {
                    const double x = (2.0 * ox + 1.0 - w) / w;
                    const double px = snap(norm_to_pixel(t[0] * x + t[1] * y + t[2], w));
                    const double py = snap(norm_to_pixel(t[3] * x + t[4] * y + t[5], h));
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
                            acc += fy * fx * in.at(s, ch, yy, xx);
                        }
                    }
                    out.at(s, ch, oy, ox) = static_cast<float>(acc);
                }
            }
        }
    }
    return out;
}

Tensor upsample_bilinear(const Tensor& in, int out_h, int out_w) {
    const int n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
    Tensor out({n, c, out_h, out_w});
    const double sy = double(h) / out_h;
    const double sx = double(w) / out_w;
    for (int s = 0; s < n; ++s) {
        for (int ch = 0; ch < c; ++ch) {
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
                    const double top =
                        (1.0 - wx) * in.at(s, ch, y0, x0) + wx * in.at(s, ch, y0, x1);
                    const double bot =
                        (1.0 - wx) * in.at(s, ch, y1, x0) + wx * in.at(s, ch, y1, x1);
                    out.at(s, ch, oy, ox) = static_cast<float>((1.0 - wy) * top + wy * bot);
                }
            }
        }
    }
    return out;
}

}  // namespace regad::kernels::ref

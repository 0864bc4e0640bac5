#include "regad/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace regad {

double cosine_distance(const Tensor& p, int pn, const Tensor& z, int zn, Tensor* grad_p,
                       double grad_scale) {
    if (p.dim(1) != z.dim(1) || p.dim(2) != z.dim(2) || p.dim(3) != z.dim(3))
        throw std::invalid_argument("cosine_distance: shape mismatch " + p.shape_str() + " vs " +
                                    z.shape_str());
    const int c = p.dim(1), h = p.dim(2), w = p.dim(3);
    const int64_t spatial = int64_t(h) * w;
    const int64_t plane = int64_t(c) * spatial;
    const float* pd = p.data() + pn * plane;
    const float* zd = z.data() + zn * plane;
    float* gp = grad_p ? grad_p->data() + pn * plane : nullptr;

    // Per-position contributions are buffered and summed serially so the
    // returned value does not depend on the thread count.
    std::vector<double> contrib(static_cast<size_t>(spatial), 0.0);
#pragma omp parallel for schedule(static)
    for (int64_t xy = 0; xy < spatial; ++xy) {
        double dot = 0.0, np2 = 0.0, nz2 = 0.0;
        for (int ch = 0; ch < c; ++ch) {
            const double pv = pd[ch * spatial + xy];
            const double zv = zd[ch * spatial + xy];
            dot += pv * zv;
            np2 += pv * pv;
            nz2 += zv * zv;
        }
        const double np = std::sqrt(np2), nz = std::sqrt(nz2);
        if (np < kNormFloor || nz < kNormFloor) continue;  // contributes 0
        const double inv = 1.0 / (np * nz);
        contrib[static_cast<size_t>(xy)] = -dot * inv;
        if (gp) {
            // dD/dp = -(z/(|p||z|) - (p.z) p / (|p|^3 |z|)) / spatial
            const double a = inv / double(spatial);
            const double b = dot / (np2 * np * nz) / double(spatial);
            for (int ch = 0; ch < c; ++ch) {
                const double pv = pd[ch * spatial + xy];
                const double zv = zd[ch * spatial + xy];
                gp[ch * spatial + xy] += static_cast<float>(grad_scale * (-(zv * a) + pv * b));
            }
        }
    }
    double total = 0.0;
    for (double v : contrib) total += v;
    return total / double(spatial);
}

double registration_loss(const Tensor& p, const Tensor& z, Tensor* grad_p, double grad_scale) {
    if (p.dim(0) < 2 || z.dim(0) < 2)
        throw std::invalid_argument("registration_loss: needs a two-sample batch");
    const double d_ab = cosine_distance(p, 0, z, 1, grad_p, 0.5 * grad_scale);
    const double d_ba = cosine_distance(p, 1, z, 0, grad_p, 0.5 * grad_scale);
    return 0.5 * (d_ab + d_ba);
}

}  // namespace regad

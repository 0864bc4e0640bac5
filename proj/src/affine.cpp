#include "regad/affine.hpp"

#include <cmath>
#include <stdexcept>

namespace regad {

namespace {

constexpr double kScaleMin = 0.1;
constexpr double kScaleMax = 10.0;
constexpr double kShearClamp = 0.9;
constexpr double kAffineClamp = 0.75;

double clamped_scale(double u, bool* saturated = nullptr) {
    const double s = std::exp(u);
    if (s < kScaleMin || s > kScaleMax) {
        if (saturated) *saturated = true;
        return std::min(std::max(s, kScaleMin), kScaleMax);
    }
    if (saturated) *saturated = false;
    return s;
}

double clamp(double v, double lim) { return std::min(std::max(v, -lim), lim); }

}  // namespace

AffineMode affine_mode_from_string(const std::string& s) {
    if (s == "none") return AffineMode::None;
    if (s == "translation") return AffineMode::Translation;
    if (s == "rotation") return AffineMode::Rotation;
    if (s == "scale") return AffineMode::Scale;
    if (s == "shear") return AffineMode::Shear;
    if (s == "rotation_scale") return AffineMode::RotationScale;
    if (s == "translation_scale") return AffineMode::TranslationScale;
    if (s == "translation_rotation") return AffineMode::TranslationRotation;
    if (s == "translation_rotation_scale") return AffineMode::TranslationRotationScale;
    if (s == "affine") return AffineMode::Affine;
    throw std::invalid_argument("unknown affine mode: " + s);
}

std::string to_string(AffineMode mode) {
    switch (mode) {
        case AffineMode::None: return "none";
        case AffineMode::Translation: return "translation";
        case AffineMode::Rotation: return "rotation";
        case AffineMode::Scale: return "scale";
        case AffineMode::Shear: return "shear";
        case AffineMode::RotationScale: return "rotation_scale";
        case AffineMode::TranslationScale: return "translation_scale";
        case AffineMode::TranslationRotation: return "translation_rotation";
        case AffineMode::TranslationRotationScale: return "translation_rotation_scale";
        case AffineMode::Affine: return "affine";
    }
    throw std::logic_error("bad affine mode");
}

int affine_free_params(AffineMode mode) {
    switch (mode) {
        case AffineMode::None: return 0;
        case AffineMode::Translation: return 2;
        case AffineMode::Rotation: return 1;
        case AffineMode::Scale: return 1;
        case AffineMode::Shear: return 2;
        case AffineMode::RotationScale: return 2;
        case AffineMode::TranslationScale: return 3;
        case AffineMode::TranslationRotation: return 3;
        case AffineMode::TranslationRotationScale: return 4;
        case AffineMode::Affine: return 6;
    }
    throw std::logic_error("bad affine mode");
}

AffineParams affine_from_free_params(AffineMode mode, const std::vector<double>& u) {
    if (static_cast<int>(u.size()) != affine_free_params(mode))
        throw std::invalid_argument("affine_from_free_params: wrong parameter count for mode " +
                                    to_string(mode));
    AffineParams p;
    p.mode = mode;
    kernels::Theta& t = p.theta;
    switch (mode) {
        case AffineMode::None:
            break;
        case AffineMode::Translation:
            t[2] = u[0];
            t[5] = u[1];
            break;
        case AffineMode::Rotation: {
            const double c = std::cos(u[0]), s = std::sin(u[0]);
            t = {c, -s, 0.0, s, c, 0.0};
            break;
        }
        case AffineMode::Scale: {
            const double s = clamped_scale(u[0]);
            t = {s, 0.0, 0.0, 0.0, s, 0.0};
            break;
        }
        case AffineMode::Shear:
            t[1] = clamp(u[0], kShearClamp);
            t[3] = clamp(u[1], kShearClamp);
            break;
        case AffineMode::RotationScale: {
            const double s = clamped_scale(u[0]);
            const double c = std::cos(u[1]), sn = std::sin(u[1]);
            t = {s * c, -s * sn, 0.0, s * sn, s * c, 0.0};
            break;
        }
        case AffineMode::TranslationScale: {
            const double s = clamped_scale(u[0]);
            t = {s, 0.0, u[1], 0.0, s, u[2]};
            break;
        }
        case AffineMode::TranslationRotation: {
            const double c = std::cos(u[0]), s = std::sin(u[0]);
            t = {c, -s, u[1], s, c, u[2]};
            break;
        }
        case AffineMode::TranslationRotationScale: {
            const double s = clamped_scale(u[0]);
            const double c = std::cos(u[1]), sn = std::sin(u[1]);
            t = {s * c, -s * sn, u[2], s * sn, s * c, u[3]};
            break;
        }
        case AffineMode::Affine: {
            double a = clamp(u[0], kAffineClamp), b = clamp(u[1], kAffineClamp);
            double c = clamp(u[2], kAffineClamp), d = clamp(u[3], kAffineClamp);
            double det = (1.0 + a) * (1.0 + d) - b * c;
            if (std::abs(det) < kDetFloor) {
                // Blend the linear deviation toward identity until the
                // determinant clears the floor.
                double alpha = 1.0;
                for (int i = 0; i < 200 && std::abs(det) < kDetFloor; ++i) {
                    alpha *= 0.8;
                    det = (1.0 + alpha * a) * (1.0 + alpha * d) - alpha * alpha * b * c;
                }
                a *= alpha; b *= alpha; c *= alpha; d *= alpha;
            }
            t = {1.0 + a, b, u[4], c, 1.0 + d, u[5]};
            break;
        }
    }
    return p;
}

std::vector<double> affine_free_param_grad(AffineMode mode, const std::vector<double>& u,
                                           const kernels::Theta& g) {
    std::vector<double> du(static_cast<size_t>(affine_free_params(mode)), 0.0);
    switch (mode) {
        case AffineMode::None:
            break;
        case AffineMode::Translation:
            du[0] = g[2];
            du[1] = g[5];
            break;
        case AffineMode::Rotation: {
            const double c = std::cos(u[0]), s = std::sin(u[0]);
            du[0] = -g[0] * s - g[1] * c + g[3] * c - g[4] * s;
            break;
        }
        case AffineMode::Scale: {
            bool sat = false;
            const double s = clamped_scale(u[0], &sat);
            du[0] = sat ? 0.0 : (g[0] + g[4]) * s;
            break;
        }
        case AffineMode::Shear:
            du[0] = (std::abs(u[0]) < kShearClamp) ? g[1] : 0.0;
            du[1] = (std::abs(u[1]) < kShearClamp) ? g[3] : 0.0;
            break;
        case AffineMode::RotationScale: {
            bool sat = false;
            const double s = clamped_scale(u[0], &sat);
            const double c = std::cos(u[1]), sn = std::sin(u[1]);
            du[0] = sat ? 0.0 : s * (g[0] * c - g[1] * sn + g[3] * sn + g[4] * c);
            du[1] = s * (-g[0] * sn - g[1] * c + g[3] * c - g[4] * sn);
            break;
        }
        case AffineMode::TranslationScale: {
            bool sat = false;
            const double s = clamped_scale(u[0], &sat);
            du[0] = sat ? 0.0 : (g[0] + g[4]) * s;
            du[1] = g[2];
            du[2] = g[5];
            break;
        }
        case AffineMode::TranslationRotation: {
            const double c = std::cos(u[0]), s = std::sin(u[0]);
            du[0] = -g[0] * s - g[1] * c + g[3] * c - g[4] * s;
            du[1] = g[2];
            du[2] = g[5];
            break;
        }
        case AffineMode::TranslationRotationScale: {
            bool sat = false;
            const double s = clamped_scale(u[0], &sat);
            const double c = std::cos(u[1]), sn = std::sin(u[1]);
            du[0] = sat ? 0.0 : s * (g[0] * c - g[1] * sn + g[3] * sn + g[4] * c);
            du[1] = s * (-g[0] * sn - g[1] * c + g[3] * c - g[4] * sn);
            du[2] = g[2];
            du[3] = g[5];
            break;
        }
        case AffineMode::Affine: {
            // The rare blend fallback is treated as locally constant.
            du[0] = (std::abs(u[0]) < kAffineClamp) ? g[0] : 0.0;
            du[1] = (std::abs(u[1]) < kAffineClamp) ? g[1] : 0.0;
            du[2] = (std::abs(u[2]) < kAffineClamp) ? g[3] : 0.0;
            du[3] = (std::abs(u[3]) < kAffineClamp) ? g[4] : 0.0;
            du[4] = g[2];
            du[5] = g[5];
            break;
        }
    }
    return du;
}

AffineParams invert_affine(const AffineParams& params) {
    const kernels::Theta& t = params.theta;
    const double det = params.det_linear();
    if (std::abs(det) < kDetFloor)
        throw std::domain_error("invert_affine: determinant " + std::to_string(det) +
                                " below floor");
    const double ia = t[4] / det, ib = -t[1] / det;
    const double ic = -t[3] / det, id = t[0] / det;
    AffineParams inv;
    inv.mode = params.mode;
    inv.theta = {ia, ib, -(ia * t[2] + ib * t[5]), ic, id, -(ic * t[2] + id * t[5])};
    return inv;
}

kernels::Theta compose_theta(const kernels::Theta& a, const kernels::Theta& b) {
    // Homogeneous 3x3 product a * b (third rows implicit [0 0 1]).
    return {
        a[0] * b[0] + a[1] * b[3], a[0] * b[1] + a[1] * b[4], a[0] * b[2] + a[1] * b[5] + a[2],
        a[3] * b[0] + a[4] * b[3], a[3] * b[1] + a[4] * b[4], a[3] * b[2] + a[4] * b[5] + a[5],
    };
}

}  // namespace regad

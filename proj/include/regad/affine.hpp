#pragma once

#include <string>
#include <vector>

#include "regad/kernels.hpp"

namespace regad {

/// Constraint family for the per-stage spatial transform. Each mode exposes a
/// small vector of free parameters u; u = 0 always maps to the identity.
enum class AffineMode {
    None,
    Translation,
    Rotation,
    Scale,
    Shear,
    RotationScale,
    TranslationScale,
    TranslationRotation,
    TranslationRotationScale,
    Affine,
};

AffineMode affine_mode_from_string(const std::string& s);
std::string to_string(AffineMode mode);
int affine_free_params(AffineMode mode);

// |det| of the 2x2 linear part is kept at or above this floor so score maps
// stay invertible back to image coordinates.
constexpr double kDetFloor = 1e-3;

struct AffineParams {
    kernels::Theta theta{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
    AffineMode mode = AffineMode::None;

    static AffineParams identity(AffineMode mode = AffineMode::None) {
        AffineParams p;
        p.mode = mode;
        return p;
    }

    double det_linear() const { return theta[0] * theta[4] - theta[1] * theta[3]; }
};

/// Map free parameters to the constrained theta for the given mode.
/// Scale factors use s = exp(u) clamped to [0.1, 10]; shear and full-affine
/// entries are clamped, with a blend-to-identity fallback keeping |det| above
/// the floor.
AffineParams affine_from_free_params(AffineMode mode, const std::vector<double>& u);

/// Chain rule for the above map: given dL/dtheta, return dL/du evaluated at u.
std::vector<double> affine_free_param_grad(AffineMode mode, const std::vector<double>& u,
                                           const kernels::Theta& grad_theta);

/// Exact inverse: [L | t] -> [L^-1 | -L^-1 t]. Throws if |det| < floor.
AffineParams invert_affine(const AffineParams& params);

/// a then b as homogeneous composition (b applied to a's output coordinates).
kernels::Theta compose_theta(const kernels::Theta& a, const kernels::Theta& b);

}  // namespace regad

#include <doctest.h>

#include <cmath>

#include "regad/affine.hpp"
#include "regad/rng.hpp"

using namespace regad;

namespace {
const std::vector<AffineMode> kAllModes = {
    AffineMode::None,
    AffineMode::Translation,
    AffineMode::Rotation,
    AffineMode::Scale,
    AffineMode::Shear,
    AffineMode::RotationScale,
    AffineMode::TranslationScale,
    AffineMode::TranslationRotation,
    AffineMode::TranslationRotationScale,
    AffineMode::Affine,
};
}

TEST_CASE("zero free parameters map to the exact identity for every mode") {
    for (AffineMode mode : kAllModes) {
        const std::vector<double> u(static_cast<size_t>(affine_free_params(mode)), 0.0);
        const AffineParams p = affine_from_free_params(mode, u);
        CHECK(p.theta == kernels::Theta{1, 0, 0, 0, 1, 0});
    }
}

TEST_CASE("translation mode keeps the linear part at identity") {
    auto rng = make_rng(20);
    for (int i = 0; i < 20; ++i) {
        const AffineParams p = affine_from_free_params(
            AffineMode::Translation, {rand_uniform(rng, -2, 2), rand_uniform(rng, -2, 2)});
        CHECK(p.theta[0] == 1.0);
        CHECK(p.theta[1] == 0.0);
        CHECK(p.theta[3] == 0.0);
        CHECK(p.theta[4] == 1.0);
    }
}

TEST_CASE("rotation_scale factors back into s and phi") {
    auto rng = make_rng(21);
    for (int i = 0; i < 50; ++i) {
        const double us = rand_uniform(rng, -1.0, 1.0);
        const double phi = rand_uniform(rng, -3.0, 3.0);
        const AffineParams p = affine_from_free_params(AffineMode::RotationScale, {us, phi});
        const double s = std::sqrt(p.det_linear());
        const double recovered_phi = std::atan2(p.theta[3], p.theta[0]);
        const double c = std::cos(recovered_phi), sn = std::sin(recovered_phi);
        const kernels::Theta rebuilt = {s * c, -s * sn, 0, s * sn, s * c, 0};
        for (int j = 0; j < 6; ++j)
            CHECK(std::abs(rebuilt[static_cast<size_t>(j)] - p.theta[static_cast<size_t>(j)]) < 1e-6);
    }
}

TEST_CASE("invert_affine analytic cases") {
    AffineParams id = AffineParams::identity(AffineMode::Affine);
    CHECK(invert_affine(id).theta == kernels::Theta{1, 0, 0, 0, 1, 0});

    AffineParams doubled;
    doubled.mode = AffineMode::Scale;
    doubled.theta = {2, 0, 0, 0, 2, 0};
    const auto inv = invert_affine(doubled);
    CHECK(inv.theta == kernels::Theta{0.5, 0, 0, 0, 0.5, 0});
}

TEST_CASE("theta times its inverse is the identity within 1e-10") {
    auto rng = make_rng(22);
    for (int i = 0; i < 100; ++i) {
        AffineParams p;
        p.mode = AffineMode::Affine;
        do {
            p.theta = {rand_uniform(rng, -1.5, 1.5), rand_uniform(rng, -1.5, 1.5),
                       rand_uniform(rng, -0.5, 0.5), rand_uniform(rng, -1.5, 1.5),
                       rand_uniform(rng, -1.5, 1.5), rand_uniform(rng, -0.5, 0.5)};
        } while (std::abs(p.det_linear()) < 0.1);
        const auto inv = invert_affine(p);
        const auto prod = compose_theta(p.theta, inv.theta);
        const kernels::Theta expect = {1, 0, 0, 0, 1, 0};
        for (int j = 0; j < 6; ++j)
            CHECK(std::abs(prod[static_cast<size_t>(j)] - expect[static_cast<size_t>(j)]) < 1e-10);
    }
}

TEST_CASE("inversion refuses determinants below the floor") {
    AffineParams degenerate;
    degenerate.mode = AffineMode::Affine;
    degenerate.theta = {1e-4, 0, 0, 0, 1e-4, 0};
    CHECK_THROWS(invert_affine(degenerate));
}

TEST_CASE("free-parameter gradient chain matches finite differences") {
    auto rng = make_rng(23);
    for (AffineMode mode : kAllModes) {
        const int n = affine_free_params(mode);
        if (n == 0) continue;
        std::vector<double> u(static_cast<size_t>(n));
        for (auto& v : u) v = rand_uniform(rng, -0.3, 0.3);
        kernels::Theta gtheta;
        for (auto& g : gtheta) g = rand_uniform(rng, -1.0, 1.0);

        const auto analytic = affine_free_param_grad(mode, u, gtheta);
        for (int i = 0; i < n; ++i) {
            auto up = u, dn = u;
            up[static_cast<size_t>(i)] += 1e-6;
            dn[static_cast<size_t>(i)] -= 1e-6;
            const auto th = affine_from_free_params(mode, up).theta;
            const auto tl = affine_from_free_params(mode, dn).theta;
            double fd = 0.0;
            for (int j = 0; j < 6; ++j)
                fd += gtheta[static_cast<size_t>(j)] *
                      (th[static_cast<size_t>(j)] - tl[static_cast<size_t>(j)]) / 2e-6;
            CHECK(std::abs(analytic[static_cast<size_t>(i)] - fd) < 1e-5);
        }
    }
}

TEST_CASE("affine mode keeps its determinant above the floor") {
    auto rng = make_rng(24);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> u(6);
        for (auto& v : u) v = rand_uniform(rng, -3.0, 3.0);
        const AffineParams p = affine_from_free_params(AffineMode::Affine, u);
        CHECK(std::abs(p.det_linear()) >= kDetFloor);
    }
}

TEST_CASE("mode string round trip") {
    for (AffineMode mode : kAllModes) CHECK(affine_mode_from_string(to_string(mode)) == mode);
    CHECK_THROWS(affine_mode_from_string("bogus"));
}

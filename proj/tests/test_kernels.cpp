#include <doctest.h>

#include <cmath>

#include "regad/kernels.hpp"
#include "regad/net.hpp"
#include "regad/rng.hpp"
#include "test_util.hpp"

using namespace regad;
using testutil::numeric_grad;
using testutil::random_tensor;
using testutil::rel_err;

TEST_CASE("conv2d matches the serial reference") {
    auto rng = make_rng(1);
    for (auto [ci, co, k, stride, pad] :
         {std::tuple{3, 8, 3, 1, 1}, {4, 6, 5, 2, 2}, {8, 16, 1, 1, 0}, {3, 64, 7, 2, 3}}) {
        Tensor in = random_tensor({2, ci, 13, 11}, rng);
        Tensor w = random_tensor({co, ci, k, k}, rng);
        Tensor b = random_tensor({co}, rng);
        Tensor fast = kernels::conv2d_forward(in, w, &b, stride, pad);
        Tensor slow = kernels::ref::conv2d_forward(in, w, &b, stride, pad);
        REQUIRE(fast.shape() == slow.shape());
        double worst = 0.0;
        for (int64_t i = 0; i < fast.numel(); ++i)
            worst = std::max(worst, std::abs(double(fast[i]) - slow[i]));
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("conv2d gradients match finite differences") {
    auto rng = make_rng(2);
    nn::Conv2d conv(3, 4, 3, 1, 1, true);
    conv.init_he(rng);
    for (int64_t i = 0; i < conv.bias.numel(); ++i)
        conv.bias[i] = static_cast<float>(rand_uniform(rng, -0.1, 0.1));
    Tensor x = random_tensor({1, 3, 6, 6}, rng);
    Tensor wsum = random_tensor({1, 4, 6, 6}, rng);  // random linear functional

    auto loss = [&]() {
        Tensor y = conv.forward(x);
        double acc = 0.0;
        for (int64_t i = 0; i < y.numel(); ++i) acc += double(y[i]) * wsum[i];
        return acc;
    };
    loss();
    conv.zero_grad();
    Tensor gin = conv.backward(wsum);

    auto rng2 = make_rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const int64_t wi = static_cast<int64_t>(rand_index(rng2, static_cast<uint64_t>(conv.weight.numel())));
        CHECK(rel_err(conv.grad_weight[wi], numeric_grad(loss, conv.weight, wi, 1e-2)) < 1e-3);
        const int64_t xi = static_cast<int64_t>(rand_index(rng2, static_cast<uint64_t>(x.numel())));
        CHECK(rel_err(gin[xi], numeric_grad(loss, x, xi, 1e-2)) < 1e-3);
    }
    CHECK(rel_err(conv.grad_bias[1], numeric_grad(loss, conv.bias, 1, 1e-2)) < 1e-3);
}

TEST_CASE("batchnorm training gradients match finite differences") {
    auto rng = make_rng(4);
    nn::BatchNorm2d bn(3);
    for (int64_t i = 0; i < 3; ++i) {
        bn.gamma[i] = static_cast<float>(rand_uniform(rng, 0.5, 1.5));
        bn.beta[i] = static_cast<float>(rand_uniform(rng, -0.3, 0.3));
    }
    Tensor x = random_tensor({2, 3, 4, 4}, rng);
    Tensor wsum = random_tensor({2, 3, 4, 4}, rng);

    auto loss = [&]() {
        nn::BatchNorm2d local = bn;  // fresh running stats every evaluation
        Tensor y = local.forward(x, true);
        double acc = 0.0;
        for (int64_t i = 0; i < y.numel(); ++i) acc += double(y[i]) * wsum[i];
        return acc;
    };
    nn::BatchNorm2d work = bn;
    work.forward(x, true);
    Tensor gin = work.backward(wsum);
    auto rng2 = make_rng(5);
    for (int trial = 0; trial < 8; ++trial) {
        const int64_t xi = static_cast<int64_t>(rand_index(rng2, static_cast<uint64_t>(x.numel())));
        CHECK(rel_err(gin[xi], numeric_grad(loss, x, xi, 1e-3)) < 1e-2);
    }
    CHECK(rel_err(work.grad_gamma[0], numeric_grad(loss, bn.gamma, 0, 1e-3)) < 1e-3);
    CHECK(rel_err(work.grad_beta[2], numeric_grad(loss, bn.beta, 2, 1e-3)) < 1e-3);
}

TEST_CASE("maxpool forward/backward") {
    auto rng = make_rng(6);
    Tensor x = random_tensor({1, 2, 6, 6}, rng);
    nn::MaxPool2d pool(3, 2, 1);
    Tensor y = pool.forward(x);
    CHECK(y.shape() == std::vector<int>{1, 2, 3, 3});
    // every output equals the max over its window
    for (int c = 0; c < 2; ++c)
        for (int oy = 0; oy < 3; ++oy)
            for (int ox = 0; ox < 3; ++ox) {
                float best = -1e30f;
                for (int ky = 0; ky < 3; ++ky)
                    for (int kx = 0; kx < 3; ++kx) {
                        const int iy = oy * 2 - 1 + ky, ix = ox * 2 - 1 + kx;
                        if (iy >= 0 && iy < 6 && ix >= 0 && ix < 6)
                            best = std::max(best, x.at(0, c, iy, ix));
                    }
                CHECK(y.at(0, c, oy, ox) == doctest::Approx(best));
            }
    Tensor g = random_tensor({1, 2, 3, 3}, rng);
    Tensor gin = pool.backward(g);
    double sum_g = 0.0, sum_gin = 0.0;
    for (int64_t i = 0; i < g.numel(); ++i) sum_g += g[i];
    for (int64_t i = 0; i < gin.numel(); ++i) sum_gin += gin[i];
    CHECK(sum_gin == doctest::Approx(sum_g));  // routed, not lost
}

TEST_CASE("identity transform preserves features bitwise") {
    auto rng = make_rng(7);
    Tensor x = random_tensor({2, 3, 9, 7}, rng);
    std::vector<kernels::Theta> id(2, kernels::Theta{1, 0, 0, 0, 1, 0});
    Tensor y = kernels::grid_sample_forward(x, id);
    for (int64_t i = 0; i < x.numel(); ++i) REQUIRE(x[i] == y[i]);
}

TEST_CASE("one-cell translation matches the index-shift oracle") {
    auto rng = make_rng(8);
    const int h = 8, w = 8;
    Tensor x = random_tensor({1, 1, h, w}, rng);
    // theta maps output coords to source coords; shifting content one cell
    // right means sampling one cell to the left: tx = -2/w.
    std::vector<kernels::Theta> t = {kernels::Theta{1, 0, -2.0 / w, 0, 1, 0}};
    Tensor y = kernels::grid_sample_forward(x, t);
    for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) {
            const float expect = xx >= 1 ? x.at(0, 0, yy, xx - 1) : 0.0f;
            REQUIRE(y.at(0, 0, yy, xx) == expect);
        }
}

TEST_CASE("grid_sample matches serial reference on random transforms") {
    auto rng = make_rng(9);
    Tensor x = random_tensor({2, 4, 10, 12}, rng);
    std::vector<kernels::Theta> t;
    for (int s = 0; s < 2; ++s) {
        const double a = rand_uniform(rng, -0.5, 0.5);
        t.push_back({std::cos(a), -std::sin(a), rand_uniform(rng, -0.2, 0.2), std::sin(a),
                     std::cos(a), rand_uniform(rng, -0.2, 0.2)});
    }
    Tensor fast = kernels::grid_sample_forward(x, t);
    Tensor slow = kernels::ref::grid_sample_forward(x, t);
    for (int64_t i = 0; i < fast.numel(); ++i) REQUIRE(fast[i] == slow[i]);
}

TEST_CASE("double 180-degree rotation returns the original map") {
    auto rng = make_rng(10);
    Tensor x = random_tensor({1, 3, 8, 8}, rng);
    std::vector<kernels::Theta> rot180 = {kernels::Theta{-1, 0, 0, 0, -1, 0}};
    Tensor once = kernels::grid_sample_forward(x, rot180);
    Tensor twice = kernels::grid_sample_forward(once, rot180);
    double mae = 0.0;
    for (int64_t i = 0; i < x.numel(); ++i) mae += std::abs(double(twice[i]) - x[i]);
    mae /= double(x.numel());
    CHECK(mae <= 1e-4);
}

TEST_CASE("grid_sample theta gradient matches finite differences") {
    auto rng = make_rng(11);
    Tensor x = random_tensor({1, 3, 8, 8}, rng);
    Tensor wsum = random_tensor({1, 3, 8, 8}, rng);

    // Bilinear sampling is only piecewise smooth; pick a transform whose
    // sample points all sit well away from the grid lines so the finite
    // differences never straddle a kink.
    const int h = 8, w = 8;
    auto min_frac_margin = [&](const kernels::Theta& t) {
        double margin = 1.0;
        for (int oy = 0; oy < h; ++oy)
            for (int ox = 0; ox < w; ++ox) {
                const double yn = (2.0 * oy + 1.0 - h) / h;
                const double xn = (2.0 * ox + 1.0 - w) / w;
                const double px = ((t[0] * xn + t[1] * yn + t[2] + 1.0) * w - 1.0) * 0.5;
                const double py = ((t[3] * xn + t[4] * yn + t[5] + 1.0) * h - 1.0) * 0.5;
                margin = std::min(margin, std::abs(px - std::round(px)));
                margin = std::min(margin, std::abs(py - std::round(py)));
            }
        return margin;
    };
    kernels::Theta theta{};
    auto trng = make_rng(99);
    do {
        const double a = rand_uniform(trng, -0.4, 0.4);
        theta = {std::cos(a) * rand_uniform(trng, 0.85, 1.1),
                 -std::sin(a),
                 rand_uniform(trng, -0.15, 0.15),
                 std::sin(a),
                 std::cos(a) * rand_uniform(trng, 0.85, 1.1),
                 rand_uniform(trng, -0.15, 0.15)};
    } while (min_frac_margin(theta) < 0.02);

    auto loss = [&](const kernels::Theta& t) {
        Tensor y = kernels::grid_sample_forward(x, {t});
        double acc = 0.0;
        for (int64_t i = 0; i < y.numel(); ++i) acc += double(y[i]) * wsum[i];
        return acc;
    };
    Tensor gin(x.shape());
    std::vector<kernels::Theta> gt;
    {
        Tensor y = kernels::grid_sample_forward(x, {theta});
        (void)y;
        kernels::grid_sample_backward(x, {theta}, wsum, &gin, &gt);
    }
    for (int i = 0; i < 6; ++i) {
        kernels::Theta hi = theta, lo = theta;
        hi[static_cast<size_t>(i)] += 2e-3;
        lo[static_cast<size_t>(i)] -= 2e-3;
        const double fd = (loss(hi) - loss(lo)) / 4e-3;
        CHECK(rel_err(gt[0][static_cast<size_t>(i)], fd) < 1e-3);
    }
    // input gradient too
    auto loss_x = [&]() { return loss(theta); };
    auto rng2 = make_rng(12);
    for (int trial = 0; trial < 6; ++trial) {
        const int64_t xi = static_cast<int64_t>(rand_index(rng2, static_cast<uint64_t>(x.numel())));
        CHECK(rel_err(gin[xi], numeric_grad(loss_x, x, xi, 1e-3)) < 1e-3);
    }
}

TEST_CASE("bilinear upsample preserves constants and matches reference") {
    Tensor x = Tensor::full({1, 2, 3, 3}, 0.731f);
    Tensor up = kernels::upsample_bilinear(x, 12, 12);
    for (int64_t i = 0; i < up.numel(); ++i) CHECK(up[i] == doctest::Approx(0.731f).epsilon(1e-6));

    auto rng = make_rng(13);
    Tensor r = random_tensor({2, 3, 5, 7}, rng);
    Tensor a = kernels::upsample_bilinear(r, 17, 11);
    Tensor b = kernels::ref::upsample_bilinear(r, 17, 11);
    for (int64_t i = 0; i < a.numel(); ++i) REQUIRE(a[i] == b[i]);
}

TEST_CASE("gaussian blur preserves constants and mass location") {
    Tensor flat = Tensor::full({9, 9}, 2.5f);
    kernels::gaussian_blur(flat, 1.7);
    for (int64_t i = 0; i < flat.numel(); ++i) CHECK(flat[i] == doctest::Approx(2.5f));

    Tensor spike({11, 11});
    spike.at(5, 5) = 1.0f;
    kernels::gaussian_blur(spike, 1.0);
    // peak stays at the spike
    float best = -1.0f;
    int best_y = -1, best_x = -1;
    for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 11; ++x)
            if (spike.at(y, x) > best) {
                best = spike.at(y, x);
                best_y = y;
                best_x = x;
            }
    CHECK(best_y == 5);
    CHECK(best_x == 5);
}

TEST_CASE("linear layer gradients match finite differences") {
    auto rng = make_rng(14);
    nn::Linear lin(5, 3);
    lin.init_he(rng);
    Tensor x = random_tensor({2, 5}, rng);
    Tensor wsum = random_tensor({2, 3}, rng);
    // quantize to 1/64 so products are exact in float32 and the finite
    // differences carry no rounding noise
    auto quantize = [](Tensor& t) {
        for (int64_t i = 0; i < t.numel(); ++i) t[i] = std::round(t[i] * 64.0f) / 64.0f;
    };
    quantize(lin.weight);
    quantize(lin.bias);
    quantize(x);
    quantize(wsum);
    auto loss = [&]() {
        Tensor y = lin.forward(x);
        double acc = 0.0;
        for (int64_t i = 0; i < y.numel(); ++i) acc += double(y[i]) * wsum[i];
        return acc;
    };
    loss();
    lin.zero_grad();
    Tensor gin = lin.backward(wsum);
    for (int64_t i = 0; i < lin.weight.numel(); ++i)
        CHECK(rel_err(lin.grad_weight[i], numeric_grad(loss, lin.weight, i, 1e-2)) < 1e-3);
    for (int64_t i = 0; i < x.numel(); ++i)
        CHECK(rel_err(gin[i], numeric_grad(loss, x, i, 1e-2)) < 1e-3);
}

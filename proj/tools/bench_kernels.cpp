// Times the OpenMP kernels against their serial reference implementations
// and reports the max deviation between the two paths.

#include <chrono>
#include <cstdio>
#include <functional>
#include <omp.h>
#include <string>
#include <vector>

#include "regad/kernels.hpp"
#include "regad/normest.hpp"
#include "regad/rng.hpp"
#include "regad/scoring.hpp"
#include "regad/tensor.hpp"

using namespace regad;

namespace {

Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<float>(rand_uniform(rng, -1.0, 1.0));
    return t;
}

double time_ms(const std::function<void()>& fn, int repeats) {
    fn();  // warm-up
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < repeats; ++i) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / repeats;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i)
        worst = std::max(worst, std::abs(double(a[i]) - double(b[i])));
    return worst;
}

void report(const char* name, double serial_ms, double parallel_ms, double diff) {
    std::printf("%-22s %10.2f ms %10.2f ms %8.2fx   %.3e\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms, diff);
}

}  // namespace

int main(int argc, char** argv) {
    int repeats = 5;
    if (argc > 1) repeats = std::atoi(argv[1]);
    auto rng = make_rng(42);

    std::printf("threads: %d, repeats: %d\n", omp_get_max_threads(), repeats);
    std::printf("%-22s %13s %13s %9s   %s\n", "kernel", "serial", "openmp", "speedup",
                "max |diff|");

    {
        Tensor in = random_tensor({1, 64, 56, 56}, rng);
        Tensor w = random_tensor({64, 64, 3, 3}, rng);
        Tensor a, b;
        const double ts = time_ms([&] { a = kernels::ref::conv2d_forward(in, w, nullptr, 1, 1); },
                                  repeats);
        const double tp =
            time_ms([&] { b = kernels::conv2d_forward(in, w, nullptr, 1, 1); }, repeats);
        report("conv2d 3x3 64ch 56px", ts, tp, max_abs_diff(a, b));
    }
    {
        Tensor in = random_tensor({1, 64, 56, 56}, rng);
        const double ang = 0.3;
        std::vector<kernels::Theta> thetas = {
            {std::cos(ang), -std::sin(ang), 0.05, std::sin(ang), std::cos(ang), -0.02}};
        Tensor a, b;
        const double ts =
            time_ms([&] { a = kernels::ref::grid_sample_forward(in, thetas); }, repeats);
        const double tp = time_ms([&] { b = kernels::grid_sample_forward(in, thetas); }, repeats);
        report("grid_sample 64ch 56px", ts, tp, max_abs_diff(a, b));
    }
    {
        Tensor in = random_tensor({1, 256, 14, 14}, rng);
        Tensor a, b;
        const double ts = time_ms([&] { a = kernels::ref::upsample_bilinear(in, 56, 56); }, repeats);
        const double tp = time_ms([&] { b = kernels::upsample_bilinear(in, 56, 56); }, repeats);
        report("upsample 14->56 256ch", ts, tp, max_abs_diff(a, b));
    }
    {
        std::vector<Tensor> feats;
        for (int i = 0; i < 48; ++i) feats.push_back(random_tensor({64, 16, 16}, rng));
        GaussianGrid ga, gb;
        const double ts = time_ms([&] { ga = ref::fit_gaussian_grid(feats, 0.01); }, repeats);
        const double tp = time_ms([&] { gb = fit_gaussian_grid(feats, 0.01); }, repeats);
        double diff = 0.0;
        for (size_t i = 0; i < ga.chol.size(); ++i)
            diff = std::max(diff, std::abs(ga.chol[i] - gb.chol[i]));
        report("covariance 64d N48", ts, tp, diff);

        Tensor query = random_tensor({64, 16, 16}, rng);
        Tensor ma, mb;
        const double ms = time_ms([&] { ma = ref::mahalanobis_map(query, gb); }, repeats);
        const double mp = time_ms([&] { mb = mahalanobis_map(query, gb); }, repeats);
        report("mahalanobis 64d 16px", ms, mp, max_abs_diff(ma, mb));
    }
    return 0;
}

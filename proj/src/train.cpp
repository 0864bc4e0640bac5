#include "regad/train.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "regad/optim.hpp"
#include "regad/rng.hpp"

namespace regad {

namespace fs = std::filesystem;

std::pair<size_t, size_t> sample_pair(const std::vector<data::ImageSample>& pool,
                                      std::mt19937_64& rng) {
    std::map<std::string, std::vector<size_t>> by_cat;
    for (size_t i = 0; i < pool.size(); ++i) by_cat[pool[i].category].push_back(i);
    std::vector<const std::vector<size_t>*> eligible;
    for (const auto& [cat, idx] : by_cat)
        if (idx.size() >= 2) eligible.push_back(&idx);
    if (eligible.empty())
        throw std::runtime_error("pair sampling: no category with at least two images");
    const auto& cat_idx = *eligible[rand_index(rng, eligible.size())];
    const size_t a = rand_index(rng, cat_idx.size());
    size_t b = rand_index(rng, cat_idx.size() - 1);
    if (b >= a) ++b;  // distinct
    return {cat_idx[a], cat_idx[b]};
}

TrainResult train(const std::vector<data::ImageSample>& pool, const TrainConfig& cfg,
                  const std::string& out_dir, RegADModel* model_out) {
    if (cfg.epochs <= 0 || cfg.lr <= 0.0)
        throw std::invalid_argument("train: epochs and lr must be positive");
    if (pool.empty()) throw std::invalid_argument("train: empty pool");

    RegADModel model(cfg.model);
    model.init(cfg.seed);
    if (!cfg.backbone_weights.empty()) model.load_backbone_weights(cfg.backbone_weights);

    auto params = model.trainable_params();
    SgdMomentum opt(cfg.momentum, cfg.weight_decay);
    auto pair_rng = make_rng({cfg.seed, 0x70616972ULL});

    fs::create_directories(out_dir);
    std::ofstream log(fs::path(out_dir) / "training_log.csv");
    log << "epoch,step,loss,lr\n";

    const int steps_per_epoch =
        static_cast<int>((pool.size() + cfg.batch_size - 1) / static_cast<size_t>(cfg.batch_size));

    TrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cosine_lr(cfg.lr, epoch, cfg.epochs);
        double epoch_loss = 0.0;
        for (int step = 0; step < steps_per_epoch; ++step) {
            model.zero_grad();
            double step_loss = 0.0;
            std::vector<double> z_sum, z_sq;
            int64_t z_count = 0;
            std::vector<std::pair<size_t, size_t>> batch_ids;
            for (int b = 0; b < cfg.batch_size; ++b) {
                const auto [ia, ib] = sample_pair(pool, pair_rng);
                batch_ids.emplace_back(ia, ib);
                const auto sa = data::preprocess(pool[ia], cfg.model.side);
                const auto sb = data::preprocess(pool[ib], cfg.model.side);
                const auto res =
                    model.train_pair(data::to_batch(sa, sb), 1.0 / cfg.batch_size);
                step_loss += res.loss / cfg.batch_size;

                // collapse monitor: accumulate per-channel stats of z
                const Tensor& z = res.z;
                const int zc = z.dim(1);
                const int64_t spatial = int64_t(z.dim(2)) * z.dim(3);
                if (z_sum.empty()) {
                    z_sum.assign(static_cast<size_t>(zc), 0.0);
                    z_sq.assign(static_cast<size_t>(zc), 0.0);
                }
                for (int n = 0; n < z.dim(0); ++n)
                    for (int ch = 0; ch < zc; ++ch) {
                        const float* zp = z.data() + (int64_t(n) * zc + ch) * spatial;
                        for (int64_t i = 0; i < spatial; ++i) {
                            z_sum[static_cast<size_t>(ch)] += zp[i];
                            z_sq[static_cast<size_t>(ch)] += double(zp[i]) * zp[i];
                        }
                    }
                z_count += z.dim(0) * spatial;
            }
            if (std::isnan(step_loss) || std::isinf(step_loss)) {
                std::ostringstream os;
                os << "train: loss is not finite at epoch " << epoch << " step " << step
                   << " (lr=" << lr << ", pairs:";
                for (auto [a, b] : batch_ids) os << " (" << a << "," << b << ")";
                os << ")";
                throw std::runtime_error(os.str());
            }
            opt.step(params, lr);
            log << epoch << "," << step << "," << step_loss << "," << lr << "\n";
            epoch_loss += step_loss;

            const int64_t per_ch = z_count / static_cast<int64_t>(z_sum.size());
            double min_std = std::numeric_limits<double>::infinity();
            for (size_t ch = 0; ch < z_sum.size(); ++ch) {
                const double mean = z_sum[ch] / per_ch;
                const double var = std::max(z_sq[ch] / per_ch - mean * mean, 0.0);
                min_std = std::min(min_std, std::sqrt(var));
            }
            if (min_std < 1e-4)
                std::cerr << "warning: possible representation collapse, min per-channel "
                             "z std = "
                          << min_std << " (epoch " << epoch << " step " << step << ")\n";
        }
        epoch_loss /= steps_per_epoch;
        result.epoch_losses.push_back(epoch_loss);
        std::cout << "epoch " << epoch << ": mean loss " << epoch_loss << " (lr " << lr << ")\n";
    }
    result.final_epoch_loss = result.epoch_losses.back();

    std::map<std::string, std::string> meta;
    meta["epochs"] = std::to_string(cfg.epochs);
    meta["batch_size"] = std::to_string(cfg.batch_size);
    meta["lr"] = std::to_string(cfg.lr);
    meta["momentum"] = std::to_string(cfg.momentum);
    meta["seed"] = std::to_string(cfg.seed);
    meta["loss_final"] = std::to_string(result.final_epoch_loss);
    model.save(out_dir, meta);
    if (model_out) *model_out = std::move(model);
    return result;
}

}  // namespace regad

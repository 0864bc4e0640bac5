#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "regad/dataio.hpp"
#include "regad/model.hpp"

namespace regad {

struct TrainConfig {
    int epochs = 50;
    int batch_size = 32;
    double lr = 1e-4;
    double momentum = 0.9;
    double weight_decay = 0.0;
    uint64_t seed = 0;
    ModelConfig model;
    std::string backbone_weights;  // optional pretrained backbone archive
};

struct TrainResult {
    double final_epoch_loss = 0.0;
    std::vector<double> epoch_losses;
};

/// Draw a same-category pair: category uniform over categories with >= 2
/// images, then two distinct images uniform within it.
std::pair<size_t, size_t> sample_pair(const std::vector<data::ImageSample>& pool,
                                      std::mt19937_64& rng);

/// Aggregated multi-category training. Writes the checkpoint plus
/// training_log.csv (epoch,step,loss,lr) under out_dir.
TrainResult train(const std::vector<data::ImageSample>& pool, const TrainConfig& cfg,
                  const std::string& out_dir, RegADModel* model_out = nullptr);

}  // namespace regad

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "regad/dataio.hpp"
#include "regad/normest.hpp"
#include "regad/train.hpp"

namespace regad {

/// Merged view of every tunable. Defaults are the project defaults; a config
/// file (key=value lines, # comments) and command-line flags override them.
struct RunConfig {
    // data
    std::string data_root;
    std::string dataset = "synthetic";
    int side = 224;

    // model
    std::string stn_mode = "rotation_scale";
    bool freeze_backbone = false;
    bool post_chaining = false;
    std::string backbone_weights;  // empty: try $REGAD_CACHE/resnet18.regad, else random init

    // training
    int epochs = 50;
    int batch_size = 32;
    double lr = 1e-4;
    double momentum = 0.9;
    double weight_decay = 0.0;

    // estimation
    double epsilon = 0.01;
    int reduce_dims = 0;
    std::string est_source = "stn";

    // support augmentation
    bool aug_gray = true;
    bool aug_flip = true;
    bool aug_rotate = true;
    bool aug_translate = true;
    std::string rotation_angles = "15,-15,30,-30,45,-45,90,-90";
    std::string translation_offsets = "0.1,0;-0.1,0;0,0.1;0,-0.1";
    std::string flip_axes = "horizontal,vertical";

    // scoring
    double smooth_sigma = 4.0;

    // evaluation protocol
    int k = 2;
    int n_runs = 10;
    bool per_image_pixel_auc = false;

    // global
    uint64_t seed = 0;
    int jobs = 0;  // 0 = library default thread count
};

void apply_config_file(RunConfig& cfg, const std::string& path);
std::map<std::string, std::string> config_to_map(const RunConfig& cfg);

data::AugmentationConfig make_aug_config(const RunConfig& cfg);
ModelConfig make_model_config(const RunConfig& cfg);
TrainConfig make_train_config(const RunConfig& cfg);
EstimateOptions make_estimate_options(const RunConfig& cfg);

/// Every run echoes its fully resolved configuration and a manifest of the
/// artifacts it produced into its output directory.
class RunOutputs {
public:
    explicit RunOutputs(std::string dir);
    void add(const std::string& path);
    void write(const RunConfig& cfg) const;
    const std::string& dir() const { return dir_; }

private:
    std::string dir_;
    std::vector<std::string> files_;
};

}  // namespace regad

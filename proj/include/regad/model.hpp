#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "regad/affine.hpp"
#include "regad/backbone.hpp"
#include "regad/heads.hpp"
#include "regad/stn.hpp"

namespace regad {

/// Per-stage feature maps of one batch before and after the spatial
/// transforms, plus the predicted transform parameters.
struct FeatureSet {
    std::array<Tensor, 3> pre;
    std::array<Tensor, 3> post;
    std::array<std::vector<AffineParams>, 3> params;
};

struct ModelConfig {
    AffineMode stn_mode = AffineMode::RotationScale;
    bool freeze_backbone = false;
    // When true a stage consumes the previous stage's transformed features;
    // default keeps stages sequential on untransformed features.
    bool post_chaining = false;
    int side = 224;
};

class RegADModel {
public:
    explicit RegADModel(ModelConfig cfg);

    void init(uint64_t seed);
    /// Copy pretrained backbone arrays (entries named backbone.*) into place.
    void load_backbone_weights(const std::string& path);

    FeatureSet extract(const Tensor& batch, bool training = false);

    struct PairResult {
        double loss = 0.0;
        Tensor z;  // encoder output, for collapse monitoring
    };
    /// One training pair [2,3,S,S]: forward, loss, backward with gradients
    /// scaled by grad_scale (1/batch for averaged batches).
    PairResult train_pair(const Tensor& pair, double grad_scale);

    /// Encoder output for registered stage-3 features (inference).
    Tensor encode(const Tensor& f3_transformed, bool training = false);

    std::vector<nn::NamedParam> trainable_params();
    std::vector<nn::NamedParam> all_tensors();
    void zero_grad();

    void save(const std::string& dir,
              const std::map<std::string, std::string>& extra_meta = {}) const;
    static RegADModel load_checkpoint(const std::string& dir);
    static std::map<std::string, std::string> read_meta(const std::string& dir);

    const ModelConfig& config() const { return cfg_; }
    static constexpr int kAggregatedChannels =
        nn::Backbone::kStageChannels[0] + nn::Backbone::kStageChannels[1] +
        nn::Backbone::kStageChannels[2];

private:
    ModelConfig cfg_;
    nn::Backbone backbone_;
    nn::SpatialTransformer stn1_, stn2_, stn3_;
    nn::Encoder encoder_;
    nn::Predictor predictor_;
};

constexpr const char* kCheckpointFile = "model.regad";
constexpr const char* kCheckpointMeta = "meta.txt";

}  // namespace regad

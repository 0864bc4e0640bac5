#include "regad/model.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "regad/archive.hpp"
#include "regad/image.hpp"
#include "regad/loss.hpp"
#include "regad/rng.hpp"

namespace regad {

namespace fs = std::filesystem;

RegADModel::RegADModel(ModelConfig cfg)
    : cfg_(cfg),
      stn1_(nn::Backbone::kStageChannels[0], cfg.stn_mode),
      stn2_(nn::Backbone::kStageChannels[1], cfg.stn_mode),
      stn3_(nn::Backbone::kStageChannels[2], cfg.stn_mode),
      encoder_(nn::Backbone::kStageChannels[2]),
      predictor_(nn::Backbone::kStageChannels[2]) {}

void RegADModel::init(uint64_t seed) {
    auto rng = make_rng({seed, 0x6d6f64656cULL});
    backbone_.init(rng);
    stn1_.init(rng);
    stn2_.init(rng);
    stn3_.init(rng);
    encoder_.init(rng);
    predictor_.init(rng);
}

void RegADModel::load_backbone_weights(const std::string& path) {
    Archive a = Archive::load(path);
    std::vector<nn::NamedParam> named;
    backbone_.collect(named, false);
    for (auto& p : named) {
        if (!a.has(p.name))
            throw std::runtime_error("backbone weights: missing entry " + p.name + " in " + path);
        const auto& e = a.get(p.name);
        if (static_cast<int64_t>(e.f32.size()) != p.value->numel())
            throw std::runtime_error("backbone weights: size mismatch for " + p.name);
        std::copy(e.f32.begin(), e.f32.end(), p.value->values().begin());
    }
}

FeatureSet RegADModel::extract(const Tensor& batch, bool training) {
    FeatureSet out;
    Tensor x = backbone_.forward_stem(batch, training);
    out.pre[0] = backbone_.forward_stage(1, x, training);
    auto s1 = stn1_.forward(out.pre[0], training);
    out.post[0] = std::move(s1.transformed);
    out.params[0] = std::move(s1.params);

    const Tensor& in2 = cfg_.post_chaining ? out.post[0] : out.pre[0];
    out.pre[1] = backbone_.forward_stage(2, in2, training);
    auto s2 = stn2_.forward(out.pre[1], training);
    out.post[1] = std::move(s2.transformed);
    out.params[1] = std::move(s2.params);

    const Tensor& in3 = cfg_.post_chaining ? out.post[1] : out.pre[1];
    out.pre[2] = backbone_.forward_stage(3, in3, training);
    auto s3 = stn3_.forward(out.pre[2], training);
    out.post[2] = std::move(s3.transformed);
    out.params[2] = std::move(s3.params);
    return out;
}

RegADModel::PairResult RegADModel::train_pair(const Tensor& pair, double grad_scale) {
    FeatureSet fs = extract(pair, true);
    Tensor z = encoder_.forward(fs.post[2], true);
    Tensor p = predictor_.forward(z, true);

    Tensor grad_p(p.shape());
    PairResult res;
    res.loss = registration_loss(p, z, &grad_p, grad_scale);

    Tensor gz = predictor_.backward(grad_p);
    Tensor gf3t = encoder_.backward(gz);
    Tensor gf3s = stn3_.backward(gf3t);

    const bool backbone_grads_needed = !cfg_.freeze_backbone || cfg_.post_chaining;
    if (backbone_grads_needed) {
        if (cfg_.post_chaining) {
            Tensor gf2t = backbone_.backward_stage(3, gf3s);
            Tensor gf2s = stn2_.backward(gf2t);
            Tensor gf1t = backbone_.backward_stage(2, gf2s);
            Tensor gf1s = stn1_.backward(gf1t);
            Tensor g0 = backbone_.backward_stage(1, gf1s);
            backbone_.backward_stem(g0);
        } else {
            Tensor gf2s = backbone_.backward_stage(3, gf3s);
            Tensor gf1s = backbone_.backward_stage(2, gf2s);
            Tensor g0 = backbone_.backward_stage(1, gf1s);
            backbone_.backward_stem(g0);
        }
    }
    res.z = std::move(z);
    return res;
}

Tensor RegADModel::encode(const Tensor& f3_transformed, bool training) {
    return encoder_.forward(f3_transformed, training);
}

std::vector<nn::NamedParam> RegADModel::trainable_params() {
    std::vector<nn::NamedParam> all = all_tensors();
    std::vector<nn::NamedParam> out;
    for (auto& p : all)
        if (p.trainable) out.push_back(p);
    return out;
}

std::vector<nn::NamedParam> RegADModel::all_tensors() {
    std::vector<nn::NamedParam> out;
    backbone_.collect(out, !cfg_.freeze_backbone);
    stn1_.collect("stn1", out, true);
    stn2_.collect("stn2", out, true);
    stn3_.collect("stn3", out, true);
    encoder_.collect("encoder", out, true);
    predictor_.collect("predictor", out, true);
    return out;
}

void RegADModel::zero_grad() {
    backbone_.zero_grad();
    stn1_.zero_grad();
    stn2_.zero_grad();
    stn3_.zero_grad();
    encoder_.zero_grad();
    predictor_.zero_grad();
}

void RegADModel::save(const std::string& dir,
                      const std::map<std::string, std::string>& extra_meta) const {
    fs::create_directories(dir);
    Archive a;
    auto& self = const_cast<RegADModel&>(*this);
    for (auto& p : self.all_tensors()) a.put(p.name, p.value->shape(), p.value->values());

    auto& meta = a.meta();
    meta["format"] = "regad-checkpoint-1";
    meta["stn_mode"] = to_string(cfg_.stn_mode);
    meta["post_chaining"] = cfg_.post_chaining ? "1" : "0";
    meta["freeze_backbone"] = cfg_.freeze_backbone ? "1" : "0";
    meta["side"] = std::to_string(cfg_.side);
    meta["stage_channels"] = "64,128,256";
    meta["encoder_widths"] = "256,256,256,256";
    meta["predictor_widths"] = "256,64,256";
    meta["norm_mean"] = data::image_norm_mean_csv();
    meta["norm_std"] = data::image_norm_std_csv();
    for (const auto& [k, v] : extra_meta) meta[k] = v;
    a.save((fs::path(dir) / kCheckpointFile).string());

    std::ofstream mf(fs::path(dir) / kCheckpointMeta);
    for (const auto& [k, v] : meta) mf << k << "=" << v << "\n";
}

std::map<std::string, std::string> RegADModel::read_meta(const std::string& dir) {
    const auto path = fs::path(dir) / kCheckpointMeta;
    std::ifstream mf(path);
    if (!mf) throw std::runtime_error("checkpoint meta not found: " + path.string());
    std::map<std::string, std::string> meta;
    std::string line;
    while (std::getline(mf, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return meta;
}

RegADModel RegADModel::load_checkpoint(const std::string& dir) {
    const auto file = fs::path(dir) / kCheckpointFile;
    if (!fs::exists(file))
        throw std::runtime_error("checkpoint not found: " + file.string());
    Archive a = Archive::load(file.string());

    ModelConfig cfg;
    cfg.stn_mode = affine_mode_from_string(a.meta_or("stn_mode", "rotation_scale"));
    cfg.post_chaining = a.meta_or("post_chaining", "0") == "1";
    cfg.freeze_backbone = a.meta_or("freeze_backbone", "0") == "1";
    cfg.side = std::stoi(a.meta_or("side", "224"));

    RegADModel model(cfg);
    for (auto& p : model.all_tensors()) {
        if (!a.has(p.name)) throw std::runtime_error("checkpoint missing tensor " + p.name);
        const auto& e = a.get(p.name);
        if (static_cast<int64_t>(e.f32.size()) != p.value->numel())
            throw std::runtime_error("checkpoint tensor size mismatch for " + p.name);
        std::copy(e.f32.begin(), e.f32.end(), p.value->values().begin());
    }
    return model;
}

}  // namespace regad

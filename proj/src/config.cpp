#include "regad/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace regad {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw std::invalid_argument("config: bad boolean value '" + v + "'");
}

std::vector<double> parse_csv_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

}  // namespace

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: expected key=value at " + path + ":" +
                                     std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "data_root") cfg.data_root = val;
        else if (key == "dataset") cfg.dataset = val;
        else if (key == "side") cfg.side = std::stoi(val);
        else if (key == "stn_mode") cfg.stn_mode = val;
        else if (key == "freeze_backbone") cfg.freeze_backbone = parse_bool(val);
        else if (key == "post_chaining") cfg.post_chaining = parse_bool(val);
        else if (key == "backbone_weights") cfg.backbone_weights = val;
        else if (key == "epochs") cfg.epochs = std::stoi(val);
        else if (key == "batch_size") cfg.batch_size = std::stoi(val);
        else if (key == "lr") cfg.lr = std::stod(val);
        else if (key == "momentum") cfg.momentum = std::stod(val);
        else if (key == "weight_decay") cfg.weight_decay = std::stod(val);
        else if (key == "epsilon") cfg.epsilon = std::stod(val);
        else if (key == "reduce_dims") cfg.reduce_dims = std::stoi(val);
        else if (key == "est_source") cfg.est_source = val;
        else if (key == "aug_gray") cfg.aug_gray = parse_bool(val);
        else if (key == "aug_flip") cfg.aug_flip = parse_bool(val);
        else if (key == "aug_rotate") cfg.aug_rotate = parse_bool(val);
        else if (key == "aug_translate") cfg.aug_translate = parse_bool(val);
        else if (key == "rotation_angles") cfg.rotation_angles = val;
        else if (key == "translation_offsets") cfg.translation_offsets = val;
        else if (key == "flip_axes") cfg.flip_axes = val;
        else if (key == "smooth_sigma") cfg.smooth_sigma = std::stod(val);
        else if (key == "k") cfg.k = std::stoi(val);
        else if (key == "n_runs") cfg.n_runs = std::stoi(val);
        else if (key == "per_image_pixel_auc") cfg.per_image_pixel_auc = parse_bool(val);
        else if (key == "seed") cfg.seed = std::stoull(val);
        else if (key == "jobs") cfg.jobs = std::stoi(val);
        else
            throw std::runtime_error("config: unknown key '" + key + "' at " + path + ":" +
                                     std::to_string(lineno));
    }
}

std::map<std::string, std::string> config_to_map(const RunConfig& cfg) {
    std::map<std::string, std::string> m;
    auto num = [](double v) {
        std::ostringstream os;
        os << v;
        return os.str();
    };
    m["data_root"] = cfg.data_root;
    m["dataset"] = cfg.dataset;
    m["side"] = std::to_string(cfg.side);
    m["stn_mode"] = cfg.stn_mode;
    m["freeze_backbone"] = cfg.freeze_backbone ? "1" : "0";
    m["post_chaining"] = cfg.post_chaining ? "1" : "0";
    m["backbone_weights"] = cfg.backbone_weights;
    m["epochs"] = std::to_string(cfg.epochs);
    m["batch_size"] = std::to_string(cfg.batch_size);
    m["lr"] = num(cfg.lr);
    m["momentum"] = num(cfg.momentum);
    m["weight_decay"] = num(cfg.weight_decay);
    m["epsilon"] = num(cfg.epsilon);
    m["reduce_dims"] = std::to_string(cfg.reduce_dims);
    m["est_source"] = cfg.est_source;
    m["aug_gray"] = cfg.aug_gray ? "1" : "0";
    m["aug_flip"] = cfg.aug_flip ? "1" : "0";
    m["aug_rotate"] = cfg.aug_rotate ? "1" : "0";
    m["aug_translate"] = cfg.aug_translate ? "1" : "0";
    m["rotation_angles"] = cfg.rotation_angles;
    m["translation_offsets"] = cfg.translation_offsets;
    m["flip_axes"] = cfg.flip_axes;
    m["smooth_sigma"] = num(cfg.smooth_sigma);
    m["k"] = std::to_string(cfg.k);
    m["n_runs"] = std::to_string(cfg.n_runs);
    m["per_image_pixel_auc"] = cfg.per_image_pixel_auc ? "1" : "0";
    m["seed"] = std::to_string(cfg.seed);
    m["jobs"] = std::to_string(cfg.jobs);
    return m;
}

data::AugmentationConfig make_aug_config(const RunConfig& cfg) {
    data::AugmentationConfig a;
    a.enable_gray = cfg.aug_gray;
    a.enable_flip = cfg.aug_flip;
    a.enable_rotate = cfg.aug_rotate;
    a.enable_translate = cfg.aug_translate;
    a.rotation_angles = parse_csv_doubles(cfg.rotation_angles);
    a.translation_offsets.clear();
    std::stringstream ss(cfg.translation_offsets);
    std::string pair;
    while (std::getline(ss, pair, ';')) {
        pair = trim(pair);
        if (pair.empty()) continue;
        const auto vals = parse_csv_doubles(pair);
        if (vals.size() != 2)
            throw std::invalid_argument("config: translation offset needs dx,dy: " + pair);
        a.translation_offsets.emplace_back(vals[0], vals[1]);
    }
    a.flip_axes.clear();
    std::stringstream fs_(cfg.flip_axes);
    std::string axis;
    while (std::getline(fs_, axis, ',')) {
        axis = trim(axis);
        if (axis == "horizontal") a.flip_axes.push_back(data::FlipAxis::Horizontal);
        else if (axis == "vertical") a.flip_axes.push_back(data::FlipAxis::Vertical);
        else if (!axis.empty())
            throw std::invalid_argument("config: unknown flip axis: " + axis);
    }
    if (a.rotation_angles.empty()) a.enable_rotate = false;
    if (a.translation_offsets.empty()) a.enable_translate = false;
    if (a.flip_axes.empty()) a.enable_flip = false;
    return a;
}

ModelConfig make_model_config(const RunConfig& cfg) {
    ModelConfig m;
    m.stn_mode = affine_mode_from_string(cfg.stn_mode);
    m.freeze_backbone = cfg.freeze_backbone;
    m.post_chaining = cfg.post_chaining;
    m.side = cfg.side;
    return m;
}

TrainConfig make_train_config(const RunConfig& cfg) {
    TrainConfig t;
    t.epochs = cfg.epochs;
    t.batch_size = cfg.batch_size;
    t.lr = cfg.lr;
    t.momentum = cfg.momentum;
    t.weight_decay = cfg.weight_decay;
    t.seed = cfg.seed;
    t.model = make_model_config(cfg);
    t.backbone_weights = cfg.backbone_weights;
    return t;
}

EstimateOptions make_estimate_options(const RunConfig& cfg) {
    EstimateOptions e;
    e.epsilon = cfg.epsilon;
    e.reduce_dims = cfg.reduce_dims;
    e.est_source = cfg.est_source;
    e.side = cfg.side;
    e.channel_seed = cfg.seed;
    return e;
}

RunOutputs::RunOutputs(std::string dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
}

void RunOutputs::add(const std::string& path) { files_.push_back(path); }

void RunOutputs::write(const RunConfig& cfg) const {
    {
        std::ofstream out(fs::path(dir_) / "resolved_config.txt");
        for (const auto& [k, v] : config_to_map(cfg)) out << k << "=" << v << "\n";
    }
    std::ofstream mf(fs::path(dir_) / "manifest.txt");
    for (const auto& f : files_) mf << f << "\n";
}

}  // namespace regad

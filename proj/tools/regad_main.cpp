#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <omp.h>

#include "regad/config.hpp"
#include "regad/evalkit.hpp"
#include "regad/scoring.hpp"

namespace fs = std::filesystem;
using namespace regad;

namespace {

std::string resolve_backbone_weights(const RunConfig& cfg) {
    if (!cfg.backbone_weights.empty()) {
        if (!fs::exists(cfg.backbone_weights))
            throw std::runtime_error("startup error: backbone weights not found: " +
                                     cfg.backbone_weights);
        return cfg.backbone_weights;
    }
    if (const char* cache = std::getenv("REGAD_CACHE")) {
        const fs::path candidate = fs::path(cache) / "resnet18.regad";
        if (fs::exists(candidate)) return candidate.string();
    }
    return "";
}

std::vector<data::ImageSample> load_for(const RunConfig& cfg) {
    if (cfg.data_root.empty()) throw std::runtime_error("data error: --data-root is required");
    return data::load_dataset(cfg.data_root, data::dataset_kind_from_string(cfg.dataset));
}

RegADModel train_one(const RunConfig& cfg, const std::vector<data::ImageSample>& pool,
                     const std::string& out_dir) {
    TrainConfig tcfg = make_train_config(cfg);
    tcfg.backbone_weights = resolve_backbone_weights(cfg);
    if (tcfg.backbone_weights.empty())
        std::cerr << "note: no pretrained backbone weights found; training from random "
                     "initialization (see tools/fetch_backbone.py)\n";
    RegADModel model(make_model_config(cfg));
    train(pool, tcfg, out_dir, &model);
    return model;
}

eval::ProtocolOptions protocol_from(const RunConfig& cfg, const RegADModel& model) {
    eval::ProtocolOptions p;
    p.k = cfg.k;
    p.n_runs = cfg.n_runs;
    p.base_seed = cfg.seed;
    p.est = make_estimate_options(cfg);
    p.est.side = model.config().side;
    p.aug = make_aug_config(cfg);
    p.smooth_sigma = cfg.smooth_sigma;
    p.per_image_pixel_auc = cfg.per_image_pixel_auc;
    return p;
}

int run_synth(const RunConfig& cfg, const std::string& out, const data::SynthConfig& sc) {
    data::generate_synthetic_dataset(out, sc);
    RunOutputs ro(out);
    ro.add(out);
    ro.write(cfg);
    std::cout << "synthetic dataset written to " << out << "\n";
    return 0;
}

int run_train(const RunConfig& cfg, const std::string& target, const std::string& out) {
    const auto dataset = load_for(cfg);
    std::vector<data::ImageSample> pool;
    if (target.empty()) {
        for (const auto& s : dataset)
            if (s.split == data::Split::Train && s.label == data::Label::Normal)
                pool.push_back(s);
    } else {
        pool = data::make_loo_split(dataset, target).train_pool;
    }
    train_one(cfg, pool, out);
    RunOutputs ro(out);
    ro.add((fs::path(out) / kCheckpointFile).string());
    ro.add((fs::path(out) / kCheckpointMeta).string());
    ro.add((fs::path(out) / "training_log.csv").string());
    ro.write(cfg);
    return 0;
}

int run_estimate(const RunConfig& cfg, const std::string& ckpt, const std::string& category,
                 const std::string& out) {
    RegADModel model = RegADModel::load_checkpoint(ckpt);
    const auto dataset = load_for(cfg);
    const auto support = data::sample_support(dataset, category, cfg.k, cfg.seed);
    EstimateOptions opts = make_estimate_options(cfg);
    opts.side = model.config().side;
    opts.channel_seed = cfg.seed;
    GaussianGrid grid = estimate(support, model, make_aug_config(cfg), opts);
    save_stats(grid, out);
    std::cout << "estimated " << category << " (k=" << cfg.k << ", N=" << grid.n
              << ") in " << grid.meta.at("adaptation_seconds") << " s -> " << out << "\n";
    RunOutputs ro(fs::path(out).parent_path().empty() ? "." : fs::path(out).parent_path().string());
    ro.add(out);
    ro.write(cfg);
    return 0;
}

int run_score(const RunConfig& cfg, const std::string& ckpt, const std::string& stats,
              const std::string& image, const std::string& out_heatmap,
              const std::string& out_score) {
    RegADModel model = RegADModel::load_checkpoint(ckpt);
    GaussianGrid grid = load_stats(stats);
    data::ImageSample sample;
    sample.source_path = image;
    ScoreOptions opts;
    opts.smooth_sigma = cfg.smooth_sigma;
    AnomalyMap am = score_image(sample, model, grid, opts);
    if (out_score == "-" || out_score.empty()) {
        std::cout << am.image_score << "\n";
    } else {
        std::ofstream os(out_score);
        os << am.image_score << "\n";
    }
    if (!out_heatmap.empty()) {
        eval::write_heatmap_png(am.image_scores, out_heatmap);
        RunOutputs ro(fs::path(out_heatmap).parent_path().empty()
                          ? "."
                          : fs::path(out_heatmap).parent_path().string());
        ro.add(out_heatmap);
        ro.write(cfg);
    }
    return 0;
}

int run_eval(const RunConfig& cfg, const std::string& ckpt, const std::string& category,
             const std::string& out, const std::string& dump_dir) {
    RegADModel model = RegADModel::load_checkpoint(ckpt);
    const auto dataset = load_for(cfg);
    auto opts = protocol_from(cfg, model);
    opts.dump_heatmap_dir = dump_dir;
    const auto report = eval::evaluate_category(dataset, category, model, opts);
    eval::write_reports({report}, out);
    std::cout << category << ": image AUC " << report.mean_image_auc << " (std "
              << report.std_image_auc << "), pixel AUC " << report.mean_pixel_auc << " over "
              << report.runs.size() << " runs\n";
    RunOutputs ro(out);
    ro.add((fs::path(out) / "runs.csv").string());
    ro.add((fs::path(out) / "summary.csv").string());
    ro.write(cfg);
    return 0;
}

int run_bench(const RunConfig& cfg, const std::string& categories_arg, const std::string& ckpt,
              const std::string& out) {
    const auto dataset = load_for(cfg);
    std::vector<std::string> categories;
    if (categories_arg.empty() || categories_arg == "all") {
        categories = data::list_categories(dataset);
    } else {
        std::stringstream ss(categories_arg);
        std::string c;
        while (std::getline(ss, c, ','))
            if (!c.empty()) categories.push_back(c);
    }

    RunOutputs ro(out);
    std::vector<eval::EvalReport> reports;
    for (const auto& cat : categories) {
        RegADModel model = [&] {
            if (!ckpt.empty()) return RegADModel::load_checkpoint(ckpt);
            const std::string ckpt_dir = (fs::path(out) / ("ckpt_" + cat)).string();
            std::cout << "training leave-one-out model for target " << cat << "\n";
            auto pool = data::make_loo_split(dataset, cat).train_pool;
            RegADModel m = train_one(cfg, pool, ckpt_dir);
            ro.add((fs::path(ckpt_dir) / kCheckpointFile).string());
            return m;
        }();
        auto report = eval::evaluate_category(dataset, cat, model, protocol_from(cfg, model));
        std::cout << cat << ": image AUC " << report.mean_image_auc << ", pixel AUC "
                  << report.mean_pixel_auc << "\n";
        reports.push_back(std::move(report));
    }
    eval::write_reports(reports, out);
    double macro = 0.0;
    for (const auto& r : reports) macro += r.mean_image_auc;
    std::cout << "macro-average image AUC over " << reports.size() << " categories: "
              << (reports.empty() ? 0.0 : macro / reports.size()) << "\n";
    ro.add((fs::path(out) / "runs.csv").string());
    ro.add((fs::path(out) / "summary.csv").string());
    ro.write(cfg);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    // the config file seeds defaults; explicit flags then override
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") apply_config_file(cfg, argv[i + 1]);

    CLI::App app{"registration-based few-shot anomaly detection"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "key=value config file (applied before flags)");

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", cfg.seed, "base random seed");
        sub->add_option("--jobs", cfg.jobs, "worker threads (0 = library default)");
        sub->add_option("--config", config_path, "key=value config file");
    };
    auto add_data = [&](CLI::App* sub) {
        sub->add_option("--data-root", cfg.data_root, "dataset root directory");
        sub->add_option("--dataset", cfg.dataset, "mvtec|mpdd|synthetic");
    };
    auto add_aug = [&](CLI::App* sub) {
        sub->add_flag("--no-aug-gray", [&](size_t) { cfg.aug_gray = false; }, "disable graying");
        sub->add_flag("--no-aug-flip", [&](size_t) { cfg.aug_flip = false; }, "disable flips");
        sub->add_flag("--no-aug-rotate", [&](size_t) { cfg.aug_rotate = false; },
                      "disable rotations");
        sub->add_flag("--no-aug-translate", [&](size_t) { cfg.aug_translate = false; },
                      "disable translations");
        sub->add_option("--rot-angles", cfg.rotation_angles, "rotation degrees, comma separated");
        sub->add_option("--trans-offsets", cfg.translation_offsets,
                        "translation fractions, 'dx,dy;dx,dy'");
        sub->add_option("--flip-axes", cfg.flip_axes, "horizontal,vertical");
    };
    auto add_estimate_opts = [&](CLI::App* sub) {
        sub->add_option("--epsilon", cfg.epsilon, "covariance regularizer");
        sub->add_option("--reduce-dims", cfg.reduce_dims,
                        "random channel subset size (0 = all channels)");
        sub->add_option("--est-source", cfg.est_source, "stn|encoder feature source");
    };

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string synth_out;
    data::SynthConfig sc;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--categories", sc.categories, "number of categories");
    synth->add_option("--train-per-cat", sc.train_per_cat, "train images per category");
    synth->add_option("--test-per-cat", sc.test_per_cat, "test images per category");
    synth->add_option("--side", sc.side, "image side in pixels");
    add_common(synth);

    // train
    auto* tr = app.add_subcommand("train", "train the registration model");
    std::string train_target, train_out;
    add_data(tr);
    tr->add_option("--target", train_target,
                   "leave-one-out target category to exclude (default: none)");
    tr->add_option("--out", train_out, "checkpoint output directory")->required();
    tr->add_option("--epochs", cfg.epochs, "training epochs");
    tr->add_option("--batch", cfg.batch_size, "pairs per optimization step");
    tr->add_option("--lr", cfg.lr, "base learning rate");
    tr->add_option("--momentum", cfg.momentum, "SGD momentum");
    tr->add_option("--side", cfg.side, "input resolution");
    tr->add_option("--stn-mode", cfg.stn_mode, "transform constraint family");
    tr->add_flag("--freeze-backbone", cfg.freeze_backbone, "exclude backbone from updates");
    tr->add_flag("--post-chaining", cfg.post_chaining,
                 "feed transformed features to the next stage");
    tr->add_option("--backbone-weights", cfg.backbone_weights, "pretrained backbone archive");
    add_common(tr);

    // estimate
    auto* est = app.add_subcommand("estimate", "fit the normal distribution for a category");
    std::string est_ckpt, est_category, est_out;
    add_data(est);
    est->add_option("--ckpt", est_ckpt, "checkpoint directory")->required();
    est->add_option("--category", est_category, "target category")->required();
    est->add_option("--k", cfg.k, "support set size");
    est->add_option("--out", est_out, "stats archive output path")->required();
    add_estimate_opts(est);
    add_aug(est);
    add_common(est);

    // score
    auto* sco = app.add_subcommand("score", "score one image against estimated stats");
    std::string sc_ckpt, sc_stats, sc_image, sc_heatmap, sc_score = "-";
    sco->add_option("--ckpt", sc_ckpt, "checkpoint directory")->required();
    sco->add_option("--stats", sc_stats, "stats archive")->required();
    sco->add_option("--image", sc_image, "image path")->required();
    sco->add_option("--out-heatmap", sc_heatmap, "heatmap PNG output path");
    sco->add_option("--out-score", sc_score, "score output ('-' = stdout)");
    sco->add_option("--smooth-sigma", cfg.smooth_sigma, "Gaussian smoothing sigma (0 = off)");
    add_common(sco);

    // eval
    auto* ev = app.add_subcommand("eval", "k-shot evaluation of one category");
    std::string ev_ckpt, ev_category, ev_out, ev_dump;
    add_data(ev);
    ev->add_option("--ckpt", ev_ckpt, "checkpoint directory")->required();
    ev->add_option("--category", ev_category, "target category")->required();
    ev->add_option("--k", cfg.k, "support set size");
    ev->add_option("--runs", cfg.n_runs, "independent support draws");
    ev->add_option("--out", ev_out, "report output directory")->required();
    ev->add_option("--dump-heatmaps", ev_dump, "directory for per-image heatmaps");
    ev->add_option("--smooth-sigma", cfg.smooth_sigma, "Gaussian smoothing sigma");
    ev->add_flag("--per-image-pixel-auc", cfg.per_image_pixel_auc,
                 "average per-image pixel AUCs instead of pooling");
    add_estimate_opts(ev);
    add_aug(ev);
    add_common(ev);

    // bench
    auto* be = app.add_subcommand("bench", "full leave-one-out benchmark");
    std::string be_categories, be_ckpt, be_out;
    add_data(be);
    be->add_option("--categories", be_categories, "comma list or 'all'");
    be->add_option("--ckpt", be_ckpt, "reuse one checkpoint for all categories");
    be->add_option("--k", cfg.k, "support set size");
    be->add_option("--runs", cfg.n_runs, "independent support draws per category");
    be->add_option("--out", be_out, "report output directory")->required();
    be->add_option("--epochs", cfg.epochs, "inline-training epochs");
    be->add_option("--batch", cfg.batch_size, "inline-training batch size");
    be->add_option("--lr", cfg.lr, "inline-training learning rate");
    be->add_option("--side", cfg.side, "input resolution");
    be->add_option("--stn-mode", cfg.stn_mode, "transform constraint family");
    be->add_option("--backbone-weights", cfg.backbone_weights, "pretrained backbone archive");
    be->add_option("--smooth-sigma", cfg.smooth_sigma, "Gaussian smoothing sigma");
    add_estimate_opts(be);
    add_aug(be);
    add_common(be);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);

    try {
        if (synth->parsed()) {
            sc.seed = cfg.seed;
            return run_synth(cfg, synth_out, sc);
        }
        if (tr->parsed()) return run_train(cfg, train_target, train_out);
        if (est->parsed()) return run_estimate(cfg, est_ckpt, est_category, est_out);
        if (sco->parsed()) return run_score(cfg, sc_ckpt, sc_stats, sc_image, sc_heatmap, sc_score);
        if (ev->parsed()) return run_eval(cfg, ev_ckpt, ev_category, ev_out, ev_dump);
        if (be->parsed()) return run_bench(cfg, be_categories, be_ckpt, be_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

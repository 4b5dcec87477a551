#include "prl/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "prl/config.hpp"
#include "prl/errors.hpp"
#include "prl/geometry.hpp"
#include "prl/grad_check.hpp"
#include "prl/image_io.hpp"
#include "prl/losses.hpp"
#include "prl/metrics.hpp"
#include "prl/net.hpp"
#include "prl/ops.hpp"
#include "prl/rng.hpp"
#include "prl/serialize.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace prl {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

uint64_t default_seed() {
    if (const char* env = std::getenv("PRL_SEED")) {
        try {
            return std::stoull(env);
        } catch (...) {
            throw Error("PRL_SEED is not a valid integer");
        }
    }
    return 0;
}

void write_manifest(const std::string& path, const std::string& command, uint64_t seed,
                    const json& options) {
    json m;
    m["version"] = kVersion;
    m["command"] = command;
    m["seed"] = seed;
    m["options"] = options;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << m.dump(2) << "\n";
}

SdmNormalization parse_normalization(const std::string& s) {
    if (s == "max-abs") return SdmNormalization::kMaxAbs;
    if (s == "diagonal") return SdmNormalization::kDiagonal;
    if (s == "none") return SdmNormalization::kNone;
    throw Error("unknown normalization '" + s + "'");
}

BorderRule parse_border_rule(const std::string& s) {
    if (s == "interface") return BorderRule::kInterface;
    if (s == "include-border") return BorderRule::kIncludeBorder;
    throw Error("unknown border rule '" + s + "'");
}

struct GenOptions {
    std::string mask_path;
    std::string out_dir;
    std::string normalize = "max-abs";
    std::string border_rule = "interface";
};

int cmd_gen_supervision(const GenOptions& opt, uint64_t seed) {
    const SdmNormalization norm = parse_normalization(opt.normalize);
    const BorderRule rule = parse_border_rule(opt.border_rule);
    std::vector<std::string> inputs;
    if (fs::is_directory(opt.mask_path)) {
        for (const auto& e : fs::directory_iterator(opt.mask_path)) {
            const auto ext = e.path().extension().string();
            if (e.is_regular_file() && (ext == ".png" || ext == ".pgm"))
                inputs.push_back(e.path().string());
        }
        std::sort(inputs.begin(), inputs.end());
    } else {
        inputs.push_back(opt.mask_path);
    }
    if (inputs.empty()) throw Error("no mask files under " + opt.mask_path);
    fs::create_directories(opt.out_dir);

    int failures = 0;
    json files = json::array();
    for (const auto& path : inputs) {
        const std::string stem = fs::path(path).stem().string();
        json entry;
        entry["input"] = fs::path(path).filename().string();
        try {
            const BinaryMask mask = mask_from_gray(load_gray(path));
            SignedDistanceMap sdm;
            DirectionField df;
            try {
                sdm = normalize_sdm(signed_distance_map(mask, rule), norm);
                df = direction_field(mask, rule);
                entry["status"] = "ok";
            } catch (const DegenerateMask&) {
                // Documented fallback: constant masks emit all-zero maps.
                sdm = zero_sdm(mask.height, mask.width);
                df = zero_df(mask.height, mask.width);
                entry["status"] = "degenerate(zero maps)";
                std::cerr << "warning: " << path << ": constant mask, emitting zero maps\n";
            }
            write_pfm(opt.out_dir + "/" + stem + "_sdm.pfm", sdm.height, sdm.width,
                      sdm.normalized);
            write_pfm(opt.out_dir + "/" + stem + "_fx.pfm", df.height, df.width, df.fx);
            write_pfm(opt.out_dir + "/" + stem + "_fy.pfm", df.height, df.width, df.fy);
        } catch (const Error& e) {
            std::cerr << "error: " << path << ": " << e.what() << "\n";
            entry["status"] = std::string("error: ") + e.what();
            ++failures;
        }
        files.push_back(entry);
    }
    json options{{"mask", opt.mask_path},
                 {"out", opt.out_dir},
                 {"normalize", opt.normalize},
                 {"border_rule", opt.border_rule},
                 {"files", files}};
    write_manifest(opt.out_dir + "/manifest.json", "gen-supervision", seed, options);
    return failures == 0 ? kExitOk : kExitValidation;
}

struct EvalOptions {
    std::string pred_dir, gt_dir;
    std::string report_csv = "report.csv";
    std::string pr_csv = "pr.csv";
};

int cmd_eval(const EvalOptions& opt, uint64_t seed) {
    const MetricReport report = evaluate_dir(opt.pred_dir, opt.gt_dir);
    write_report_csv(opt.report_csv, report);
    write_pr_csv(opt.pr_csv, report.pr);
    json options{{"pred", opt.pred_dir},
                 {"gt", opt.gt_dir},
                 {"out", opt.report_csv},
                 {"pr", opt.pr_csv},
                 {"images", report.per_image.size()}};
    write_manifest(opt.report_csv + ".manifest.json", "eval", seed, options);
    std::cout << "images=" << report.per_image.size() << " S=" << report.aggregate.s
              << " maxF=" << report.aggregate.max_f << " meanF=" << report.aggregate.mean_f
              << " adpF=" << report.aggregate.adaptive_f << " E=" << report.aggregate.e
              << " MAE=" << report.aggregate.mae << "\n";
    return kExitOk;
}

json config_json(const NetConfig& cfg) {
    return json{{"image_size", cfg.image_size},
                {"patch_size", cfg.patch_size},
                {"embed_dim", cfg.embed_dim},
                {"window_size", cfg.window_size},
                {"heads", cfg.heads},
                {"blocks", cfg.blocks},
                {"fusion_heads", cfg.fusion_heads},
                {"frdf_iterations", cfg.frdf_iterations},
                {"frdf_mode", to_string(cfg.frdf_mode)}};
}

void print_shape_chain(const ShapeChain& s) {
    auto grid = [](int g, int ch) {
        std::ostringstream os;
        os << g << "x" << g << "x" << ch;
        return os.str();
    };
    std::cout << "input: " << s.h << "x" << s.w << "x3 (per stream)\n";
    for (int i = 0; i < 4; ++i)
        std::cout << "x^" << i + 1 << ": " << grid(s.enc_grid[i], s.enc_ch[i]) << " per stream\n";
    std::cout << "y^i: " << grid(s.sdmam_grid, s.sdmam_scale_ch) << " (concat "
              << s.sdmam_concat_ch << ")\n";
    std::cout << "sdm: " << s.h << "x" << s.w << "x1\n";
    std::cout << "z^4: " << grid(s.z4_grid, s.z4_ch) << "\n";
    std::cout << "z^3: " << grid(s.z3_grid, s.z3_ch) << "\n";
    std::cout << "z^2: " << grid(s.z2_grid, s.z2_ch) << "\n";
    std::cout << "z^1: " << grid(s.z1_grid, s.z1_ch) << "\n";
    std::cout << "z: " << s.h << "x" << s.w << "x" << s.z_ch << "\n";
    std::cout << "F: " << s.h << "x" << s.w << "x" << s.df_ch << "\n";
    std::cout << "z*: " << s.h << "x" << s.w << "x" << s.zstar_ch << "\n";
    std::cout << "O_sal: " << s.h << "x" << s.w << "x" << s.sal_ch << "\n";
}

GrayImage sal_to_gray(const Tensor& sal) {
    const int h = sal.dim(0), w = sal.dim(1);
    GrayImage img{h, w, std::vector<uint8_t>(static_cast<size_t>(h) * w)};
    for (size_t i = 0; i < img.values.size(); ++i) {
        const double v = std::clamp(sal.values()[i], 0.0, 1.0);
        img.values[i] = static_cast<uint8_t>(std::lround(v * 255.0));
    }
    return img;
}

void write_plane_pfm(const std::string& path, const Tensor& t) {
    write_pfm(path, t.dim(0), t.dim(1), t.values());
}

void write_field_pfms(const std::string& stem, const Tensor& field) {
    const int h = field.dim(0), w = field.dim(1);
    std::vector<double> fx(static_cast<size_t>(h) * w), fy(fx.size());
    for (size_t i = 0; i < fx.size(); ++i) {
        fx[i] = field.values()[2 * i];
        fy[i] = field.values()[2 * i + 1];
    }
    write_pfm(stem + "_fx.pfm", h, w, fx);
    write_pfm(stem + "_fy.pfm", h, w, fy);
}

struct ForwardOptions {
    std::string rgb_path, thermal_path, out_dir, ckpt;
    std::string config_path;
    bool dry_run = false;
    bool paper_config = false;
    int image_size = 0;  // 0 = config default
    int embed_dim = 0;
};

NetConfig resolve_config(const std::string& config_path, bool paper, int image_size,
                         int embed_dim) {
    NetConfig cfg = paper ? NetConfig::paper() : NetConfig::toy();
    if (!config_path.empty()) cfg = load_net_config(config_path, cfg);
    if (image_size > 0) cfg.image_size = image_size;
    if (embed_dim > 0) cfg.embed_dim = embed_dim;
    return cfg;
}

int cmd_forward(const ForwardOptions& opt, uint64_t seed) {
    const NetConfig cfg =
        resolve_config(opt.config_path, opt.paper_config, opt.image_size, opt.embed_dim);
    if (opt.dry_run) {
        print_shape_chain(compute_shape_chain(cfg));
        return kExitOk;
    }
    cfg.validate();
    const RgbImage rgb = resize_bilinear(load_rgb(opt.rgb_path), cfg.image_size, cfg.image_size);
    const RgbImage thermal =
        resize_bilinear(load_rgb(opt.thermal_path), cfg.image_size, cfg.image_size);

    Rng rng(seed);
    PrlNet net = PrlNet::create(cfg, rng);
    if (!opt.ckpt.empty()) net.load_params(load_checkpoint(opt.ckpt));

    const PrlNet::Forward f = net.forward(image_to_tensor(rgb), image_to_tensor(thermal));
    fs::create_directories(opt.out_dir);
    save_gray_png(opt.out_dir + "/sal.png", sal_to_gray(reshape(f.sal, {cfg.image_size, cfg.image_size})));
    write_plane_pfm(opt.out_dir + "/sdm.pfm", reshape(f.sdm, {cfg.image_size, cfg.image_size}));
    write_field_pfms(opt.out_dir + "/df", f.df);
    json options{{"rgb", opt.rgb_path},
                 {"thermal", opt.thermal_path},
                 {"ckpt", opt.ckpt},
                 {"config", config_json(cfg)}};
    write_manifest(opt.out_dir + "/manifest.json", "forward", seed, options);
    return kExitOk;
}

int cmd_grad_check(uint64_t seed, bool inject_bug) {
    auto results = run_kernel_grad_suite(seed, inject_bug);
    auto losses = run_loss_grad_suite(seed);
    results.insert(results.end(), losses.begin(), losses.end());
    bool all_pass = true;
    double worst = 0.0;
    for (const auto& r : results) {
        std::printf("%-24s max_rel_err=%.3e tol=%.1e %s\n", r.name.c_str(), r.max_rel_err,
                    r.tol, r.pass ? "PASS" : "FAIL");
        all_pass = all_pass && r.pass;
        worst = std::max(worst, r.max_rel_err);
    }
    std::printf("checked %zu operations, worst rel err %.3e\n", results.size(), worst);
    return all_pass ? kExitOk : kExitNumerical;
}

struct TrainOptions {
    std::string rgb_path, thermal_path, mask_path, out_dir;
    std::string config_path;
    int steps = 200;
    double lr = 1e-3;
    double lambda1 = 1.0, lambda2 = 1.0;
    int frdf_k = -1;  // -1 = config default
    std::string frdf_mode;
    std::string normalize = "max-abs";
    std::string border_rule = "interface";
    std::string sweep;  // "", "k", "lambda1", "lambda2"
    std::string sweep_values;
};

struct TrainData {
    Tensor rgb, thermal;
    BinaryMask mask;
    Tensor d_gt;            // [h,w] normalized
    DirectionField f_gt;    // field form for loss_ds
    Tensor f_gt_tensor;     // [h,w,2]
};

TrainData load_train_data(const TrainOptions& opt, const NetConfig& cfg) {
    TrainData d;
    const int hw = cfg.image_size;
    d.rgb = image_to_tensor(resize_bilinear(load_rgb(opt.rgb_path), hw, hw));
    d.thermal = image_to_tensor(resize_bilinear(load_rgb(opt.thermal_path), hw, hw));
    d.mask = mask_from_gray(resize_nearest(load_gray(opt.mask_path), hw, hw));
    const BorderRule rule = parse_border_rule(opt.border_rule);
    try {
        d.d_gt = to_tensor(
            normalize_sdm(signed_distance_map(d.mask, rule), parse_normalization(opt.normalize)));
        d.f_gt = direction_field(d.mask, rule);
    } catch (const DegenerateMask&) {
        std::cerr << "warning: constant mask, training against zero maps\n";
        d.d_gt = to_tensor(zero_sdm(hw, hw));
        d.f_gt = zero_df(hw, hw);
    }
    d.f_gt_tensor = to_tensor(d.f_gt);
    return d;
}

struct StepLosses {
    double prl, sal, sdm, df;
};

// Scales all gradients down when their global norm exceeds max_norm; the
// acos angle gradient can spike near anti-parallel field vectors.
void clip_grad_norm(NamedParams& params, Real max_norm) {
    Real sq = 0.0;
    for (auto& [name, p] : params)
        for (Real g : p.grad()) sq += g * g;
    const Real norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const Real scale = max_norm / norm;
    for (auto& [name, p] : params) {
        auto& g = p.node()->ensure_grad();
        for (Real& gi : g) gi *= scale;
    }
}

// One optimization step of the end-to-end pipeline.
StepLosses train_step(PrlNet& net, NamedParams& params, Adam& adam, const TrainData& data,
                      const LossWeights& weights) {
    const int hw = net.cfg.image_size;
    const PrlNet::Forward f = net.forward(data.rgb, data.thermal);
    Tensor l_sal = loss_ds(reshape(f.sal, {hw, hw}), data.mask, data.f_gt, weights);
    Tensor l_sdm = loss_sdm(reshape(f.sdm, {hw, hw}), data.d_gt);
    Tensor l_df = loss_df(f.df, data.f_gt_tensor, weights.df_angle_eps);
    Tensor l_prl = loss_prl(l_sal, l_sdm, l_df, weights);
    l_prl.backward();
    clip_grad_norm(params, 1e3);
    adam.step(params);
    return {l_prl.item(), l_sal.item(), l_sdm.item(), l_df.item()};
}

double training_pair_mae(const PrlNet& net, const TrainData& data) {
    const PrlNet::Forward f = net.forward(data.rgb, data.thermal);
    SaliencyMap sal{net.cfg.image_size, net.cfg.image_size, f.sal.values()};
    return mae(sal, data.mask);
}

int cmd_train_toy(const TrainOptions& opt, uint64_t seed) {
    NetConfig cfg = resolve_config(opt.config_path, false, 0, 0);
    if (opt.frdf_k >= 0) cfg.frdf_iterations = opt.frdf_k;
    if (!opt.frdf_mode.empty()) cfg.frdf_mode = frdf_mode_from_string(opt.frdf_mode);
    cfg.validate();

    LossWeights weights;
    weights.lambda1 = opt.lambda1;
    weights.lambda2 = opt.lambda2;
    weights.validate();

    const TrainData data = load_train_data(opt, cfg);
    fs::create_directories(opt.out_dir);

    json options{{"rgb", opt.rgb_path},       {"thermal", opt.thermal_path},
                 {"mask", opt.mask_path},     {"steps", opt.steps},
                 {"lr", opt.lr},              {"lambda1", weights.lambda1},
                 {"lambda2", weights.lambda2},{"alpha_edge", weights.alpha_edge},
                 {"psi_eps", weights.psi_eps},{"beta2_f_measure", 0.3},
                 {"s_measure_alpha", 0.5},    {"normalize", opt.normalize},
                 {"border_rule", opt.border_rule}, {"config", config_json(cfg)}};

    if (!opt.sweep.empty()) {
        // One summary row per swept value; curve values are emitted, not
        // asserted.
        std::vector<double> values;
        std::stringstream ss(opt.sweep_values);
        std::string item;
        while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
        if (values.empty()) throw Error("--sweep requires --sweep-values");
        std::ofstream sweep_csv(opt.out_dir + "/sweep.csv");
        sweep_csv << "param,value,loss_prl,loss_sal,loss_sdm,loss_df,mae\n";
        for (double v : values) {
            NetConfig scfg = cfg;
            LossWeights sw = weights;
            if (opt.sweep == "k") scfg.frdf_iterations = static_cast<int>(v);
            else if (opt.sweep == "lambda1") sw.lambda1 = v;
            else if (opt.sweep == "lambda2") sw.lambda2 = v;
            else throw Error("unknown sweep parameter '" + opt.sweep + "'");
            Rng rng(seed);
            PrlNet net = PrlNet::create(scfg, rng);
            NamedParams params = net.params();
            Adam adam(params, opt.lr);
            StepLosses last{};
            for (int step = 0; step < opt.steps; ++step) {
                last = train_step(net, params, adam, data, sw);
                if (!std::isfinite(last.prl)) {
                    std::cerr << "divergence at step " << step << " (value " << v << ")\n";
                    return kExitNumerical;
                }
            }
            char buf[256];
            std::snprintf(buf, sizeof(buf), "%s,%g,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                          opt.sweep.c_str(), v, last.prl, last.sal, last.sdm, last.df,
                          training_pair_mae(net, data));
            sweep_csv << buf;
        }
        options["sweep"] = opt.sweep;
        options["sweep_values"] = opt.sweep_values;
        write_manifest(opt.out_dir + "/manifest.json", "train-toy", seed, options);
        return kExitOk;
    }

    Rng rng(seed);
    PrlNet net = PrlNet::create(cfg, rng);
    NamedParams params = net.params();
    Adam adam(params, opt.lr);

    std::ofstream log(opt.out_dir + "/log.csv");
    if (!log) throw IoError("cannot write training log");
    log << "step,loss_prl,loss_sal,loss_sdm,loss_df\n";
    for (int step = 0; step < opt.steps; ++step) {
        StepLosses l;
        try {
            l = train_step(net, params, adam, data, weights);
        } catch (const NumericalError& e) {
            std::cerr << "numerical failure at step " << step << ": " << e.what() << "\n";
            return kExitNumerical;
        }
        if (!std::isfinite(l.prl)) {
            std::cerr << "divergence (NaN loss) at step " << step << "\n";
            return kExitNumerical;
        }
        char buf[192];
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f\n", step, l.prl, l.sal, l.sdm,
                      l.df);
        log << buf;
    }

    const PrlNet::Forward f = net.forward(data.rgb, data.thermal);
    const int hw = cfg.image_size;
    save_gray_png(opt.out_dir + "/sal.png", sal_to_gray(reshape(f.sal, {hw, hw})));
    write_plane_pfm(opt.out_dir + "/sdm.pfm", reshape(f.sdm, {hw, hw}));
    write_field_pfms(opt.out_dir + "/df", f.df);
    save_checkpoint(opt.out_dir + "/ckpt.prlt", params);
    options["final_mae"] = training_pair_mae(net, data);
    write_manifest(opt.out_dir + "/manifest.json", "train-toy", seed, options);
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Position-aware relation learning toolkit for RGB-T salient object detection"};
    app.require_subcommand(1);
    app.fallthrough();
    uint64_t seed = default_seed();
    app.add_option("--seed", seed, "RNG seed (default from PRL_SEED, else 0)");

    GenOptions gen;
    auto* sc_gen = app.add_subcommand("gen-supervision",
                                      "Generate SDM and direction-field supervision from masks");
    sc_gen->add_option("--mask", gen.mask_path, "Mask file or directory")->required();
    sc_gen->add_option("--out", gen.out_dir, "Output directory")->required();
    sc_gen->add_option("--normalize", gen.normalize, "max-abs|diagonal|none");
    sc_gen->add_option("--border-rule", gen.border_rule, "interface|include-border");

    EvalOptions ev;
    auto* sc_eval = app.add_subcommand("eval", "Evaluate predictions against ground truth");
    sc_eval->add_option("--pred", ev.pred_dir, "Prediction directory")->required();
    sc_eval->add_option("--gt", ev.gt_dir, "Ground-truth directory")->required();
    sc_eval->add_option("--out", ev.report_csv, "Report CSV path");
    sc_eval->add_option("--pr", ev.pr_csv, "P-R curve CSV path");

    ForwardOptions fw;
    auto* sc_fwd = app.add_subcommand("forward", "Run the network on one RGB-T pair");
    sc_fwd->add_option("--rgb", fw.rgb_path, "RGB image");
    sc_fwd->add_option("--thermal", fw.thermal_path, "Thermal image");
    sc_fwd->add_option("--ckpt", fw.ckpt, "Checkpoint file");
    sc_fwd->add_option("--out", fw.out_dir, "Output directory");
    sc_fwd->add_option("--config", fw.config_path, "INI config file");
    sc_fwd->add_flag("--dry-run", fw.dry_run, "Print the dimension chain and exit");
    sc_fwd->add_flag("--paper-config", fw.paper_config, "Use the full-scale configuration");
    sc_fwd->add_option("--image-size", fw.image_size, "Override image size");
    sc_fwd->add_option("--embed-dim", fw.embed_dim, "Override embed dim");

    bool inject_bug = false;
    auto* sc_grad = app.add_subcommand("grad-check", "Run the finite-difference gradient suites");
    sc_grad->add_flag("--inject-bug", inject_bug, "Flip one analytic gradient (must fail)");

    TrainOptions tr;
    auto* sc_train = app.add_subcommand("train-toy", "Overfit one RGB-T pair at toy scale");
    sc_train->add_option("--rgb", tr.rgb_path, "RGB image")->required();
    sc_train->add_option("--thermal", tr.thermal_path, "Thermal image")->required();
    sc_train->add_option("--mask", tr.mask_path, "Ground-truth mask")->required();
    sc_train->add_option("--out", tr.out_dir, "Output directory")->required();
    sc_train->add_option("--steps", tr.steps, "Optimization steps");
    sc_train->add_option("--lr", tr.lr, "Adam learning rate");
    sc_train->add_option("--lambda1", tr.lambda1, "SDM loss weight");
    sc_train->add_option("--lambda2", tr.lambda2, "DF loss weight");
    sc_train->add_option("--K", tr.frdf_k, "FRDF iterations");
    sc_train->add_option("--frdf-mode", tr.frdf_mode, "warp|additive");
    sc_train->add_option("--normalize", tr.normalize, "SDM target normalization");
    sc_train->add_option("--border-rule", tr.border_rule, "interface|include-border");
    sc_train->add_option("--config", tr.config_path, "INI config file");
    sc_train->add_option("--sweep", tr.sweep, "Sweep parameter: k|lambda1|lambda2");
    sc_train->add_option("--sweep-values", tr.sweep_values, "Comma-separated sweep values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (sc_gen->parsed()) return cmd_gen_supervision(gen, seed);
        if (sc_eval->parsed()) return cmd_eval(ev, seed);
        if (sc_fwd->parsed()) {
            if (!fw.dry_run && (fw.rgb_path.empty() || fw.thermal_path.empty() ||
                                fw.out_dir.empty())) {
                std::cerr << "forward requires --rgb, --thermal and --out (or --dry-run)\n";
                return kExitValidation;
            }
            return cmd_forward(fw, seed);
        }
        if (sc_grad->parsed()) return cmd_grad_check(seed, inject_bug);
        if (sc_train->parsed()) return cmd_train_toy(tr, seed);
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> full;
    full.emplace_back("prl");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(full.size());
    for (const auto& s : full) argv.push_back(s.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace prl

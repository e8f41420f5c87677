#include "cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "neodeform/amortizer.hpp"
#include "neodeform/config.hpp"
#include "neodeform/grad.hpp"
#include "neodeform/io.hpp"
#include "neodeform/metrics.hpp"
#include "neodeform/phantom.hpp"
#include "neodeform/random.hpp"
#include "neodeform/solver.hpp"

namespace neodeform::cli {

namespace fs = std::filesystem;

namespace {

/// Shortest representation that reads back to the same double.
std::string num(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

RunConfig config_or_default(const std::string& path) { return path.empty() ? RunConfig{} : load_config(path); }

// Writes displacement, det F and warped inputs next to each other.
void write_outputs(const fs::path& dir, const DisplacementField& u, const LabelField& labels,
                   const std::optional<ScalarField>& image) {
    write_field(dir / "displacement.atrf", u);
    write_field(dir / "detF.atrf", jacobian_det(deformation_gradient(u)));
    write_field(dir / "warped_labels.atrf", warp_labels(labels, u));
    if (image) write_field(dir / "warped_image.atrf", warp_image(*image, u));
}

std::optional<ScalarField> optional_image(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return read_scalar(path);
}

// ---------------------------------------------------------------------------

struct PhantomArgs {
    int size = 64;
    std::uint64_t seed = 0;
    std::string out_dir;
    double min_a = 0.85, max_a = 1.05;
    int smoothing = 4;
    bool whole_map = false;
    bool csf_compensation = false;
    bool pgm = false;
};

int cmd_phantom(const PhantomArgs& a) {
    AtrophySpec as;
    as.min_a = a.min_a;
    as.max_a = a.max_a;
    as.smoothing_radius = a.smoothing;
    as.restrict_to_brain = !a.whole_map;
    as.csf_compensation = a.csf_compensation;
    const PhantomCase pc = make_case(a.size, a.seed, as);

    const fs::path dir = a.out_dir;
    ensure_dir(dir);
    write_field(dir / "labels.atrf", pc.labels);
    write_field(dir / "intensity.atrf", pc.intensity);
    write_field(dir / "atrophy.atrf", pc.atrophy);
    if (a.pgm) {
        ScalarField label_img(pc.labels.width(), pc.labels.height());
        for (std::size_t i = 0; i < label_img.size(); ++i) label_img[i] = static_cast<double>(pc.labels[i]);
        export_pgm(label_img, dir / "labels.pgm", 0.0, kTissueCount - 1);
        export_pgm(pc.intensity, dir / "intensity.pgm", 0.0, 1.0);
        export_pgm(pc.atrophy, dir / "atrophy.pgm", a.min_a, std::max(a.max_a, a.min_a + 1e-9));
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct SolveArgs {
    std::string atrophy, labels, image, config, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> max_iters;
    std::optional<double> lr;
    bool brain_only = false;
};

int cmd_solve(const SolveArgs& a) {
    RunConfig cfg = config_or_default(a.config);
    if (a.seed) cfg.seed = *a.seed;
    SolveOptions opts;
    opts.max_iters = a.max_iters.value_or(cfg.max_iters);
    opts.learning_rate = a.lr.value_or(cfg.learning_rate.value_or(opts.learning_rate));
    opts.brain_only = a.brain_only || cfg.brain_only;

    const ScalarField atrophy = read_scalar(a.atrophy);
    const LabelField labels = read_labels(a.labels);
    const auto image = optional_image(a.image);
    const SolveResult res = solve_displacement(atrophy, labels, cfg.energy, opts);

    const fs::path dir = a.out_dir;
    ensure_dir(dir);
    write_outputs(dir, res.displacement, labels, image);

    const SolveReport& r = res.report;
    std::ostringstream csv;
    csv << "iterations_run,terminated_by,total,energy,background_penalty,center_penalty,mse_atrophy,"
           "mse_atrophy_unmasked,lr_halvings\n"
        << r.iterations_run << ',' << to_string(r.terminated_by) << ',' << num(r.final_loss.total) << ','
        << num(r.final_loss.energy) << ',' << num(r.final_loss.background_penalty) << ','
        << num(r.final_loss.center_penalty) << ',' << num(r.mse_atrophy) << ',' << num(r.mse_atrophy_unmasked) << ','
        << r.lr_halvings << '\n';
    write_text(dir / "report.csv", csv.str());

    std::ostringstream hist;
    hist << "iteration,total_loss\n";
    for (std::size_t i = 0; i < r.loss_history.size(); ++i) hist << i << ',' << num(r.loss_history[i]) << '\n';
    write_text(dir / "loss_history.csv", hist.str());
    return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string config, out_dir;
    int samples = 200;
    int size = 32;
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs, batch_size;
    std::optional<double> lr;
    bool slow_lr = false;
};

std::vector<TrainingSample> synthetic_dataset(int count, int size, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<TrainingSample> data;
    data.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        PhantomCase pc = make_case(size, rng.next());
        data.push_back({std::move(pc.atrophy), std::move(pc.labels)});
    }
    return data;
}

int cmd_train(const TrainArgs& a) {
    if (a.samples < 1) throw Error(ErrorCode::InvalidArgument, "--samples must be >= 1");
    RunConfig cfg = config_or_default(a.config);
    if (a.seed) cfg.seed = *a.seed;
    TrainOptions opts = a.slow_lr ? TrainOptions::slow() : TrainOptions{};
    opts.epochs = a.epochs.value_or(cfg.epochs);
    opts.batch_size = a.batch_size.value_or(cfg.batch_size);
    if (cfg.learning_rate) opts.learning_rate = *cfg.learning_rate;
    if (a.lr) opts.learning_rate = *a.lr;
    opts.seed = cfg.seed;
    opts.params = cfg.energy;

    const auto data = synthetic_dataset(a.samples, a.size, cfg.seed);
    const TrainResult res = train(data, opts);

    const fs::path dir = a.out_dir;
    ensure_dir(dir);
    save_checkpoint(dir / "checkpoint.nawt", res.weights);
    std::ostringstream csv;
    csv << "epoch,mean_loss,skipped_samples\n0," << num(res.log.initial_loss) << ",0\n";
    for (std::size_t e = 0; e < res.log.epoch_loss.size(); ++e)
        csv << e + 1 << ',' << num(res.log.epoch_loss[e]) << ',' << res.log.epoch_skipped[e] << '\n';
    write_text(dir / "loss_curve.csv", csv.str());
    return 0;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
    std::string checkpoint, atrophy, labels, image, config, out_dir;
};

int cmd_predict(const PredictArgs& a) {
    const RunConfig cfg = config_or_default(a.config);
    const NetWeights w = load_checkpoint(a.checkpoint);
    const ScalarField atrophy = read_scalar(a.atrophy);
    const LabelField labels = read_labels(a.labels);
    const auto image = optional_image(a.image);
    const DisplacementField u = net_forward(w, atrophy, labels);

    const fs::path dir = a.out_dir;
    ensure_dir(dir);
    write_outputs(dir, u, labels, image);
    const LossBreakdown l = total_loss(u, atrophy, labels, cfg.energy);
    std::ostringstream csv;
    csv << "total,energy,background_penalty,center_penalty,mse_atrophy,mse_atrophy_unmasked\n"
        << num(l.total) << ',' << num(l.energy) << ',' << num(l.background_penalty) << ',' << num(l.center_penalty)
        << ',' << num(mse_atrophy(atrophy, u, labels, true)) << ',' << num(mse_atrophy(atrophy, u, labels, false))
        << '\n';
    write_text(dir / "report.csv", csv.str());
    return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string atrophy, displacement, mask, image_a, image_b, labels_a, labels_b, out;
    bool unmasked = false;
};

int cmd_eval(const EvalArgs& a) {
    std::string mse_a = "nan", mse_i = "nan";
    std::string dice_cols[4] = {"nan", "nan", "nan", "nan"};
    if (!a.atrophy.empty() || !a.displacement.empty()) {
        if (a.atrophy.empty() || a.displacement.empty() || (a.mask.empty() && !a.unmasked))
            throw Error(ErrorCode::InvalidArgument, "MSE_atrophy needs --atrophy, --displacement and --mask");
        const ScalarField atrophy = read_scalar(a.atrophy);
        const DisplacementField u = read_displacement(a.displacement);
        const LabelField mask =
            a.mask.empty() ? LabelField(atrophy.width(), atrophy.height(), Tissue::Gm) : read_labels(a.mask);
        mse_a = num(mse_atrophy(atrophy, u, mask, !a.unmasked));
    }
    if (!a.image_a.empty() || !a.image_b.empty()) {
        if (a.image_a.empty() || a.image_b.empty())
            throw Error(ErrorCode::InvalidArgument, "MSE_image needs --image-a and --image-b");
        mse_i = num(mse_image(read_scalar(a.image_a), read_scalar(a.image_b)));
    }
    if (!a.labels_a.empty() || !a.labels_b.empty()) {
        if (a.labels_a.empty() || a.labels_b.empty())
            throw Error(ErrorCode::InvalidArgument, "Dice needs --labels-a and --labels-b");
        const LabelField x = read_labels(a.labels_a), y = read_labels(a.labels_b);
        const Tissue order[4] = {Tissue::Csf, Tissue::Wm, Tissue::Gm, Tissue::Dgm};
        for (int k = 0; k < 4; ++k) dice_cols[k] = num(dice(x, y, order[k]));
    }
    std::ostringstream csv;
    csv << "MSE_atrophy,MSE_image,Dice_CSF,Dice_WM,Dice_GM,Dice_DGM\n"
        << mse_a << ',' << mse_i << ',' << dice_cols[0] << ',' << dice_cols[1] << ',' << dice_cols[2] << ','
        << dice_cols[3] << '\n';
    if (a.out.empty()) std::cout << csv.str();
    else write_text(a.out, csv.str());
    return 0;
}

// ---------------------------------------------------------------------------

struct GradcheckArgs {
    std::uint64_t seed = 0;
    int size = 16;
    int probes = 64;
    double step = 1e-6;
    double tol = 1e-5;
    int net_probes = 32;
    double net_step = 1e-5;
    double net_tol = 1e-4;
    std::string config;
};

int cmd_gradcheck(const GradcheckArgs& a) {
    if (a.probes < 1 || a.net_probes < 1) throw Error(ErrorCode::InvalidArgument, "probe counts must be >= 1");
    const RunConfig cfg = config_or_default(a.config);
    const PhantomCase pc = make_case(a.size, a.seed);

    Rng rng(a.seed);
    DisplacementField u(a.size, a.size);
    for (std::size_t i = 0; i < u.ux.size(); ++i) {
        u.ux[i] = rng.uniform(-0.1, 0.1);
        u.uy[i] = rng.uniform(-0.1, 0.1);
    }
    const GradCheckReport field = finite_diff_check(u, pc.atrophy, pc.labels, cfg.energy,
                                                    static_cast<std::size_t>(a.probes), a.step, a.tol, a.seed);
    std::cout << "field,probes=" << field.n_probes << ",max_rel_error=" << num(field.max_rel_error)
              << ",max_abs_error=" << num(field.max_abs_error) << ',' << (field.pass ? "PASS" : "FAIL") << '\n';

    bool net_pass = true;
    const NetArchitecture arch;
    if (a.size % arch.divisor() == 0) {
        const NetGradCheckReport net = net_gradient_check(probe_weights(arch, a.seed), pc.atrophy, pc.labels, cfg.energy,
                                                          static_cast<std::size_t>(a.net_probes), a.net_step,
                                                          a.net_tol, a.seed + 1);
        net_pass = net.pass;
        std::cout << "network,probes=" << net.n_probes << ",max_rel_error=" << num(net.max_rel_error)
                  << ",max_abs_error=" << num(net.max_abs_error) << ',' << (net.pass ? "PASS" : "FAIL") << '\n';
    } else {
        std::cout << "network,skipped (size not a multiple of " << arch.divisor() << ")\n";
    }
    return field.pass && net_pass ? 0 : 2;
}

// ---------------------------------------------------------------------------

struct WarpArgs {
    std::string displacement, input, out;
};

int cmd_warp(const WarpArgs& a) {
    const DisplacementField u = read_displacement(a.displacement);
    const AnyField in = read_field(a.input);
    if (const auto* s = std::get_if<ScalarField>(&in)) write_field(a.out, warp_image(*s, u));
    else if (const auto* l = std::get_if<LabelField>(&in)) write_field(a.out, warp_labels(*l, u));
    else throw Error(ErrorCode::InvalidArgument, "warp input must be a scalar or label field");
    return 0;
}

struct PgmArgs {
    std::string input, out;
    double lo = 0.0, hi = 1.0;
};

int cmd_pgm(const PgmArgs& a) {
    export_pgm(read_scalar(a.input), a.out, a.lo, a.hi);
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Differentiable 2D Neo-Hookean atrophy simulation"};
    app.require_subcommand(1);

    PhantomArgs ph;
    auto* phantom = app.add_subcommand("phantom", "Generate labels, intensity and atrophy fields");
    phantom->add_option("--size", ph.size, "Grid side in pixels")->capture_default_str();
    phantom->add_option("--seed", ph.seed, "Random seed")->capture_default_str();
    phantom->add_option("--out-dir", ph.out_dir, "Output directory")->required();
    phantom->add_option("--min-a", ph.min_a, "Smallest atrophy value")->capture_default_str();
    phantom->add_option("--max-a", ph.max_a, "Largest atrophy value")->capture_default_str();
    phantom->add_option("--smoothing", ph.smoothing, "Box-blur radius")->capture_default_str();
    phantom->add_flag("--whole-map", ph.whole_map, "Keep the random map outside the brain");
    phantom->add_flag("--csf-compensation", ph.csf_compensation, "Let CSF expand to conserve intracranial area");
    phantom->add_flag("--pgm", ph.pgm, "Also write PGM previews");

    SolveArgs so;
    auto* solve = app.add_subcommand("solve", "Direct displacement solve for one atrophy map");
    solve->add_option("--atrophy", so.atrophy, "Atrophy map (ATRF scalar)")->required();
    solve->add_option("--labels", so.labels, "Tissue labels (ATRF labels)")->required();
    solve->add_option("--image", so.image, "Image to warp (ATRF scalar)");
    solve->add_option("--config", so.config, "key=value run configuration");
    solve->add_option("--seed", so.seed, "Seed (overrides config)");
    solve->add_option("--max-iters", so.max_iters, "Iteration cap (overrides config)");
    solve->add_option("--lr", so.lr, "Adam step size in pixels (overrides config)");
    solve->add_flag("--brain-only", so.brain_only, "Prescribe atrophy on GM/WM/DGM only");
    solve->add_option("--out-dir", so.out_dir, "Output directory")->required();

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train the amortizing network on synthetic phantoms");
    train_cmd->add_option("--config", tr.config, "key=value run configuration");
    train_cmd->add_option("--samples", tr.samples, "Number of training pairs")->capture_default_str();
    train_cmd->add_option("--size", tr.size, "Grid side in pixels")->capture_default_str();
    train_cmd->add_option("--seed", tr.seed, "Seed (overrides config)");
    train_cmd->add_option("--epochs", tr.epochs, "Epochs (overrides config)");
    train_cmd->add_option("--batch-size", tr.batch_size, "Batch size (overrides config)");
    train_cmd->add_option("--lr", tr.lr, "Learning rate (overrides config)");
    train_cmd->add_flag("--slow-lr", tr.slow_lr, "Use learning rate 1e-5");
    train_cmd->add_option("--out-dir", tr.out_dir, "Output directory")->required();

    PredictArgs pr;
    auto* predict = app.add_subcommand("predict", "Predict a displacement with a trained network");
    predict->add_option("--checkpoint", pr.checkpoint, "NAWT checkpoint")->required();
    predict->add_option("--atrophy", pr.atrophy, "Atrophy map (ATRF scalar)")->required();
    predict->add_option("--labels", pr.labels, "Tissue labels (ATRF labels)")->required();
    predict->add_option("--image", pr.image, "Image to warp (ATRF scalar)");
    predict->add_option("--config", pr.config, "key=value run configuration");
    predict->add_option("--out-dir", pr.out_dir, "Output directory")->required();

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "Table metrics between fields (CSV)");
    eval->add_option("--atrophy", ev.atrophy, "Prescribed atrophy map");
    eval->add_option("--displacement", ev.displacement, "Displacement whose det F is compared");
    eval->add_option("--mask", ev.mask, "Labels defining the brain mask");
    eval->add_flag("--unmasked", ev.unmasked, "Average MSE_atrophy over the whole grid");
    eval->add_option("--image-a", ev.image_a, "First image");
    eval->add_option("--image-b", ev.image_b, "Second image");
    eval->add_option("--labels-a", ev.labels_a, "First label map");
    eval->add_option("--labels-b", ev.labels_b, "Second label map");
    eval->add_option("--out", ev.out, "CSV path (default: stdout)");

    GradcheckArgs gc;
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference checks of the loss and network gradients");
    gradcheck->add_option("--seed", gc.seed, "Random seed")->capture_default_str();
    gradcheck->add_option("--size", gc.size, "Grid side in pixels")->capture_default_str()->check(CLI::Range(4, 4096));
    gradcheck->add_option("--probes", gc.probes, "Loss-gradient probes")->capture_default_str();
    gradcheck->add_option("--step", gc.step, "Loss-gradient step")->capture_default_str();
    gradcheck->add_option("--tol", gc.tol, "Loss-gradient relative tolerance")->capture_default_str();
    gradcheck->add_option("--net-probes", gc.net_probes, "Network probes")->capture_default_str();
    gradcheck->add_option("--net-step", gc.net_step, "Network step")->capture_default_str();
    gradcheck->add_option("--net-tol", gc.net_tol, "Network relative tolerance")->capture_default_str();
    gradcheck->add_option("--config", gc.config, "key=value run configuration");

    WarpArgs wa;
    auto* warp = app.add_subcommand("warp", "Apply a displacement to an image or label field");
    warp->add_option("--displacement", wa.displacement, "Displacement (ATRF)")->required();
    warp->add_option("--input", wa.input, "Scalar or label field (ATRF)")->required();
    warp->add_option("--out", wa.out, "Output path")->required();

    PgmArgs pg;
    auto* pgm = app.add_subcommand("pgm", "Export a scalar field as 8-bit PGM");
    pgm->add_option("--input", pg.input, "Scalar field (ATRF)")->required();
    pgm->add_option("--out", pg.out, "Output path")->required();
    pgm->add_option("--lo", pg.lo, "Value mapped to 0")->capture_default_str();
    pgm->add_option("--hi", pg.hi, "Value mapped to 255")->capture_default_str();

    std::vector<char*> argv;
    std::vector<std::string> storage = args.empty() ? std::vector<std::string>{"neodeform"} : args;
    for (auto& s : storage) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (phantom->parsed()) return cmd_phantom(ph);
        if (solve->parsed()) return cmd_solve(so);
        if (train_cmd->parsed()) return cmd_train(tr);
        if (predict->parsed()) return cmd_predict(pr);
        if (eval->parsed()) return cmd_eval(ev);
        if (gradcheck->parsed()) return cmd_gradcheck(gc);
        if (warp->parsed()) return cmd_warp(wa);
        if (pgm->parsed()) return cmd_pgm(pg);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace neodeform::cli

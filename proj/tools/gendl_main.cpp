// gendl: one binary driving the three pipelines end to end —
// shape-classifier training, conditional image generation, and facade
// daylight scoring. Every subcommand is deterministic given --seed; all
// artifacts land under --out.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gendl/acgan.hpp"
#include "gendl/classifier.hpp"
#include "gendl/daylight.hpp"
#include "gendl/facade.hpp"
#include "gendl/morphology.hpp"
#include "gendl/report.hpp"
#include "gendl/shapegen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gendl;

namespace {

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config: " + path);
    return json::parse(in);
}

// Values resolve as: explicit flag > config file entry > built-in default.
template <typename T>
void merge_cfg(const json& cfg, const CLI::Option* opt, const char* key, T& value) {
    if (opt->count() == 0 && cfg.contains(key)) value = cfg.at(key).get<T>();
}

// Compact text rendering of a metric series, newest-to-oldest left to right;
// good enough to eyeball convergence without leaving the terminal.
std::string ascii_plot(const std::vector<double>& ys, const std::string& title,
                       int rows = 10, int cols = 60) {
    if (ys.empty()) return title + ": (no data)\n";
    double lo = ys[0], hi = ys[0];
    for (double v : ys) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    const int n = static_cast<int>(ys.size());
    const int width = std::min(cols, n);
    std::vector<double> col(width, 0.0);
    for (int c = 0; c < width; ++c) {
        // average the points that fall into this column's bucket
        const int a = c * n / width, b = std::max(a + 1, (c + 1) * n / width);
        double acc = 0.0;
        for (int i = a; i < b; ++i) acc += ys[static_cast<std::size_t>(i)];
        col[static_cast<std::size_t>(c)] = acc / (b - a);
    }
    std::vector<std::string> grid(static_cast<std::size_t>(rows),
                                  std::string(static_cast<std::size_t>(width), ' '));
    for (int c = 0; c < width; ++c) {
        const double t = (col[static_cast<std::size_t>(c)] - lo) / span;
        int r = static_cast<int>((1.0 - t) * (rows - 1) + 0.5);
        r = std::clamp(r, 0, rows - 1);
        grid[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = '*';
    }
    char head[160];
    std::snprintf(head, sizeof(head), "%s (min %.6f, max %.6f, n=%d)\n",
                  title.c_str(), lo, hi, n);
    std::string out = head;
    for (const auto& row : grid) out += "  |" + row + "\n";
    out += "  +" + std::string(static_cast<std::size_t>(width), '-') + "\n";
    return out;
}

// Accepts either manifest schema: plain labeled sets ("filename,label,seed")
// or facade corpora ("seed,run,..."), so one flag feeds both trainers.
labeled_dataset load_any_labeled(const fs::path& dir) {
    std::istringstream in(read_text_file(dir / "manifest.csv"));
    std::string header;
    if (!std::getline(in, header))
        throw std::runtime_error("empty manifest in " + dir.string());
    const auto fields = split_csv_line(header);
    if (!fields.empty() && fields[0] == "filename") return load_dataset(dir);
    if (!fields.empty() && fields[0] == "seed")
        return load_facade_dataset(dir).to_labeled();
    throw std::runtime_error("unrecognized manifest header in " + dir.string());
}

int image_side(const labeled_dataset& ds) {
    if (ds.size() == 0) throw std::runtime_error("dataset is empty");
    const auto& img = ds.images[0];
    if (img.height != img.width)
        throw std::runtime_error("expected square images, got " +
                                 std::to_string(img.height) + "x" +
                                 std::to_string(img.width));
    return img.height;
}

int run_synth_shapes(int per_class, int freehand_n, int size,
                     std::uint64_t seed, const fs::path& out) {
    labeled_dataset ds = synth_dataset(per_class, jitter_spec{}, seed, size);
    save_dataset(out, ds);
    if (freehand_n > 0) {
        // separate sub-stream so the sketchy set never wraps the same
        // polygons the plain set was built from
        labeled_dataset fh = freehand_dataset(freehand_n, freehand_spec{},
                                              derive_seed(seed, 0xF8EEULL), size);
        save_dataset(out / "freehand", fh);
    }
    std::printf("summary: synth-shapes count=%zu freehand=%d size=%d out=%s\n",
                ds.size(), freehand_n, size, out.string().c_str());
    return 0;
}

int run_train_cnn(const fs::path& data, int epochs, int batch, float lr,
                  std::uint64_t seed, const fs::path& out, bool plot) {
    const labeled_dataset ds = load_any_labeled(data);
    cnn_spec spec;
    spec.input_size = image_side(ds);
    spec.classes = 1 + *std::max_element(ds.labels.begin(), ds.labels.end());
    train_config cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.lr = lr;
    cfg.seed = seed;

    const auto t0 = std::chrono::steady_clock::now();
    train_result res = train_classifier(ds, cfg, spec);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    fs::create_directories(out);
    save_checkpoint(out / "model.gdl1", res.net);
    write_text_file(out / "history.csv", res.history.csv());

    if (!res.split.val.empty()) {  // tiny sets can round the val slice to zero
        std::vector<image_grid> val_imgs;
        std::vector<int> val_labels;
        for (auto i : res.split.val) {
            val_imgs.push_back(ds.images[i]);
            val_labels.push_back(ds.labels[i]);
        }
        const eval_report rep =
            evaluate(res.net, val_imgs, val_labels, spec.classes);
        std::vector<std::string> names;
        for (int c = 0; c < spec.classes; ++c)
            names.push_back("class_" + std::to_string(c));
        write_text_file(out / "confusion.csv", rep.confusion_csv(names));
    }

    int best_epoch = 1;
    for (const auto& e : res.history.epochs)
        if (e.val_acc > res.history.epochs[static_cast<std::size_t>(best_epoch - 1)].val_acc)
            best_epoch = e.epoch;
    const auto& best = res.history.epochs[static_cast<std::size_t>(best_epoch - 1)];

    if (plot) {
        std::vector<double> tl, vl;
        for (const auto& e : res.history.epochs) {
            tl.push_back(e.train_loss);
            vl.push_back(e.val_loss);
        }
        std::fputs(ascii_plot(tl, "train_loss").c_str(), stdout);
        std::fputs(ascii_plot(vl, "val_loss").c_str(), stdout);
    }
    std::printf(
        "summary: train-cnn epochs=%d best_epoch=%d train_acc=%.6f "
        "val_acc=%.6f val_loss=%.6f seconds=%.1f model=%s\n",
        epochs, best_epoch, res.history.epochs.back().train_acc, best.val_acc,
        best.val_loss, secs, (out / "model.gdl1").string().c_str());
    return 0;
}

int run_train_acgan(const fs::path& data, const std::string& profile,
                    long long steps, int batch, int img_size,
                    long long snapshot_interval, std::uint64_t seed,
                    const fs::path& out, bool plot) {
    labeled_dataset ds = load_any_labeled(data);
    gan_spec spec;
    if (profile == "facade") {
        spec = facade_gan_spec();
    } else if (profile == "shapes") {
        spec = shapes_gan_spec(img_size);
    } else {
        throw CLI::ValidationError("--profile must be shapes or facade");
    }
    if (ds.images[0].height != spec.img_h || ds.images[0].width != spec.img_w)
        ds = resize_dataset(ds, spec.img_h, spec.img_w);

    gan_train_config cfg;
    cfg.steps = steps;
    cfg.batch_size = batch;
    cfg.seed = seed;
    cfg.snapshot_interval = snapshot_interval;
    cfg.out_dir = out;

    acgan_trainer trainer(spec, cfg);
    const gan_history hist = trainer.train(ds);

    if (plot) {
        std::vector<double> dl, gl;
        for (const auto& r : hist.steps) {
            dl.push_back(r.d_loss);
            gl.push_back(r.g_loss);
        }
        std::fputs(ascii_plot(dl, "d_loss").c_str(), stdout);
        std::fputs(ascii_plot(gl, "g_loss").c_str(), stdout);
    }
    const auto& last = hist.steps.back();
    std::printf(
        "summary: train-acgan profile=%s steps=%lld d_loss=%.6f g_loss=%.6f "
        "d_acc_real=%.4f d_acc_fake=%.4f out=%s\n",
        profile.c_str(), last.step, last.d_loss, last.g_loss, last.d_acc_real,
        last.d_acc_fake, out.string().c_str());
    return 0;
}

int run_generate(const fs::path& model, int label, int n, bool post,
                 std::uint64_t seed, const fs::path& out) {
    conditional_generator gen = conditional_generator::load(model);
    const auto imgs = generate(gen, label, n, seed);
    fs::create_directories(out);
    const auto se = structuring_element::cross3();
    char name[64];
    for (int i = 0; i < n; ++i) {
        std::snprintf(name, sizeof(name), "gen_label%d_%03d.pgm", label, i);
        write_pgm(imgs[static_cast<std::size_t>(i)], (out / name).string());
        if (post) {
            const facade_pattern pat = snap_to_grid(
                ratio_preserving_clean(binarize(imgs[static_cast<std::size_t>(i)]), se, 2.0));
            std::snprintf(name, sizeof(name), "gen_label%d_%03d.txt", label, i);
            write_text_file(out / name, pattern_to_text(pat));
        }
    }
    std::printf("summary: generate label=%d n=%d post=%d out=%s\n", label, n,
                post ? 1 : 0, out.string().c_str());
    return 0;
}

int run_synth_facade(const std::vector<std::uint64_t>& seeds, const fs::path& out) {
    const sky_schedule schedule = default_schedule();
    const facade_dataset ds = synth_facade_dataset(seeds, room_model{}, schedule);
    save_facade_dataset(ds, out);
    write_text_file(out / "schedule.csv", schedule_csv(schedule));
    std::printf("summary: synth-facade samples=%zu seeds=%zu out=%s\n", ds.size(),
                seeds.size(), out.string().c_str());
    return 0;
}

int run_simulate_sda(const fs::path& pattern_path, const fs::path& out) {
    const facade_pattern pat = pattern_from_text(read_text_file(pattern_path));
    const sky_schedule schedule = default_schedule();
    const sda_result res = sda_engine(room_model{}, schedule).compute(pat);

    fs::create_directories(out);
    std::string da_csv = "sensor,da\n";
    char line[48];
    for (std::size_t s = 0; s < res.da.size(); ++s) {
        std::snprintf(line, sizeof(line), "%zu,%.6f\n", s, res.da[s]);
        da_csv += line;
    }
    write_text_file(out / "da.csv", da_csv);
    write_text_file(out / "schedule.csv", schedule_csv(schedule));
    std::printf("summary: simulate-sda wwr=%.6f sda=%.6f label=%c out=%s\n",
                wwr(pat), res.sda_pct, res.label, out.string().c_str());
    return 0;
}

int run_evaluate(const fs::path& model, const fs::path& data, std::string mode,
                 int n, std::uint64_t seed, const fs::path& out) {
    network<float> net = load_checkpoint(model);
    if (net.layers.empty()) throw std::runtime_error("empty checkpoint");
    if (mode == "auto")
        mode = net.layers.front()->kind() == layer_kind::label_embed ? "table1"
                                                                     : "classifier";

    fs::create_directories(out);
    if (mode == "classifier") {
        const labeled_dataset ds = load_any_labeled(data);
        tensor<float> one({1, 1, ds.images[0].height, ds.images[0].width});
        std::copy(ds.images[0].values.begin(), ds.images[0].values.end(),
                  one.data());
        const int classes = net.forward(one, false).dim(1);
        const eval_report rep = evaluate(net, ds.images, ds.labels, classes);
        std::vector<std::string> names;
        for (int c = 0; c < classes; ++c)
            names.push_back("class_" + std::to_string(c));
        write_text_file(out / "confusion.csv", rep.confusion_csv(names));
        std::printf("summary: evaluate mode=classifier n=%zu accuracy=%.6f out=%s\n",
                    ds.size(), rep.accuracy, out.string().c_str());
        return 0;
    }
    if (mode != "table1")
        throw CLI::ValidationError("--mode must be auto, classifier or table1");

    conditional_generator gen = conditional_generator::wrap(std::move(net));
    const facade_dataset psg = load_facade_dataset(data);
    const sda_engine engine(room_model{}, default_schedule());
    const table1_report rep = make_table1_report(gen, psg, engine, n, seed);
    write_text_file(out / "table1.csv", rep.csv());
    bool increasing = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        increasing = increasing && rep.rows[i].gen_wwr_pct > rep.rows[i - 1].gen_wwr_pct;
    std::string wwrs;
    for (const auto& r : rep.rows) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%s%c:%.2f", wwrs.empty() ? "" : ",",
                      r.label, r.gen_wwr_pct);
        wwrs += buf;
    }
    std::printf("summary: evaluate mode=table1 rows=%zu wwr=%s increasing=%d out=%s\n",
                rep.rows.size(), wwrs.c_str(), increasing ? 1 : 0,
                out.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shape/facade deep-learning pipeline"};
    app.require_subcommand(1);

    // ---- synth-shapes ----------------------------------------------------
    auto* ss = app.add_subcommand("synth-shapes",
                                  "Render labeled plan-shape rasters + manifest");
    std::string ss_config;
    int ss_per_class = 1000, ss_freehand = 0, ss_size = 100;
    std::uint64_t ss_seed = 42;
    std::string ss_out = "out/shapes";
    ss->add_option("--config", ss_config, "JSON config file");
    auto* ss_pc = ss->add_option("--per-class", ss_per_class, "samples per class");
    auto* ss_fh = ss->add_option("--freehand", ss_freehand,
                                 "also render this many sketchy samples");
    auto* ss_sz = ss->add_option("--size", ss_size, "raster side in pixels");
    auto* ss_sd = ss->add_option("--seed", ss_seed, "master seed");
    auto* ss_ot = ss->add_option("--out", ss_out, "output directory");

    // ---- train-cnn -------------------------------------------------------
    auto* tc = app.add_subcommand("train-cnn", "Train the shape classifier");
    std::string tc_config, tc_data;
    int tc_epochs = 10, tc_batch = 20;
    float tc_lr = 1e-3f;
    std::uint64_t tc_seed = 42;
    std::string tc_out = "out/cnn";
    bool tc_plot = false;
    tc->add_option("--config", tc_config, "JSON config file");
    auto* tc_da = tc->add_option("--data", tc_data, "dataset directory (manifest + PGMs)");
    auto* tc_ep = tc->add_option("--epochs", tc_epochs, "training epochs");
    auto* tc_bs = tc->add_option("--batch-size", tc_batch, "minibatch size");
    auto* tc_lr_o = tc->add_option("--lr", tc_lr, "learning rate");
    auto* tc_sd = tc->add_option("--seed", tc_seed, "master seed");
    auto* tc_ot = tc->add_option("--out", tc_out, "output directory");
    tc->add_flag("--ascii-plot", tc_plot, "print loss curves as text");

    // ---- train-acgan -----------------------------------------------------
    auto* ta = app.add_subcommand("train-acgan",
                                  "Train the conditional generator");
    std::string ta_config, ta_data, ta_profile = "shapes";
    long long ta_steps = 5000, ta_snap = 250;
    int ta_batch = 32, ta_img = 64;
    std::uint64_t ta_seed = 42;
    std::string ta_out = "out/acgan";
    bool ta_plot = false;
    ta->add_option("--config", ta_config, "JSON config file");
    auto* ta_da = ta->add_option("--data", ta_data, "dataset directory (manifest + PGMs)");
    auto* ta_pr = ta->add_option("--profile", ta_profile, "shapes | facade");
    auto* ta_st = ta->add_option("--steps", ta_steps, "optimizer steps");
    auto* ta_bs = ta->add_option("--batch-size", ta_batch, "minibatch size");
    auto* ta_im = ta->add_option("--img-size", ta_img,
                                 "training resolution (shapes profile)");
    auto* ta_si = ta->add_option("--snapshot-interval", ta_snap,
                                 "contact-sheet interval in steps (0 = off)");
    auto* ta_sd = ta->add_option("--seed", ta_seed, "master seed");
    auto* ta_ot = ta->add_option("--out", ta_out, "output directory");
    ta->add_flag("--ascii-plot", ta_plot, "print loss curves as text");

    // ---- generate ----------------------------------------------------------
    auto* ge = app.add_subcommand("generate", "Sample images from a trained generator");
    std::string ge_config, ge_model;
    int ge_label = 0, ge_n = 1;
    bool ge_post = false;
    std::uint64_t ge_seed = 42;
    std::string ge_out = "out/generated";
    ge->add_option("--config", ge_config, "JSON config file");
    auto* ge_mo = ge->add_option("--model", ge_model, "generator checkpoint");
    auto* ge_lb = ge->add_option("--label", ge_label, "conditioning label index");
    auto* ge_n_o = ge->add_option("--n", ge_n, "number of samples");
    auto* ge_sd = ge->add_option("--seed", ge_seed, "master seed");
    auto* ge_ot = ge->add_option("--out", ge_out, "output directory");
    ge->add_flag("--post", ge_post,
                 "also write snapped cell-grid patterns as text");

    // ---- synth-facade ------------------------------------------------------
    auto* sf = app.add_subcommand("synth-facade",
                                  "Score nested facade sequences into a corpus");
    std::string sf_config;
    std::vector<std::uint64_t> sf_seeds = {0, 1, 2, 3};
    std::string sf_out = "out/facade";
    sf->add_option("--config", sf_config, "JSON config file");
    auto* sf_sd = sf->add_option("--seeds", sf_seeds, "sequence seeds")
                      ->delimiter(',');
    auto* sf_ot = sf->add_option("--out", sf_out, "output directory");

    // ---- simulate-sda ------------------------------------------------------
    auto* si = app.add_subcommand("simulate-sda",
                                  "Score one facade pattern against the sky schedule");
    std::string si_config, si_pattern;
    std::string si_out = "out/sda";
    si->add_option("--config", si_config, "JSON config file");
    auto* si_pa = si->add_option("--pattern", si_pattern,
                                 "text pattern file (8 rows x 18 cols of 0/1)");
    auto* si_ot = si->add_option("--out", si_out, "output directory");

    // ---- evaluate ----------------------------------------------------------
    auto* ev = app.add_subcommand("evaluate",
                                  "Score a classifier on a dataset, or a facade "
                                  "generator into a label table");
    std::string ev_config, ev_model, ev_data, ev_mode = "auto";
    int ev_n = 16;
    std::uint64_t ev_seed = 42;
    std::string ev_out = "out/eval";
    ev->add_option("--config", ev_config, "JSON config file");
    auto* ev_mo = ev->add_option("--model", ev_model, "checkpoint to evaluate");
    auto* ev_da = ev->add_option("--data", ev_data, "dataset directory");
    auto* ev_md = ev->add_option("--mode", ev_mode, "auto | classifier | table1");
    auto* ev_n_o = ev->add_option("--n", ev_n, "samples per label (table1)");
    auto* ev_sd = ev->add_option("--seed", ev_seed, "master seed");
    auto* ev_ot = ev->add_option("--out", ev_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // help/version exit 0, any parse error is usage
    }

    try {
        if (ss->parsed()) {
            const json cfg = load_config(ss_config);
            merge_cfg(cfg, ss_pc, "per-class", ss_per_class);
            merge_cfg(cfg, ss_fh, "freehand", ss_freehand);
            merge_cfg(cfg, ss_sz, "size", ss_size);
            merge_cfg(cfg, ss_sd, "seed", ss_seed);
            merge_cfg(cfg, ss_ot, "out", ss_out);
            return run_synth_shapes(ss_per_class, ss_freehand, ss_size, ss_seed,
                                    ss_out);
        }
        if (tc->parsed()) {
            const json cfg = load_config(tc_config);
            merge_cfg(cfg, tc_da, "data", tc_data);
            merge_cfg(cfg, tc_ep, "epochs", tc_epochs);
            merge_cfg(cfg, tc_bs, "batch-size", tc_batch);
            merge_cfg(cfg, tc_lr_o, "lr", tc_lr);
            merge_cfg(cfg, tc_sd, "seed", tc_seed);
            merge_cfg(cfg, tc_ot, "out", tc_out);
            if (tc_data.empty()) throw CLI::ValidationError("train-cnn needs --data");
            return run_train_cnn(tc_data, tc_epochs, tc_batch, tc_lr, tc_seed,
                                 tc_out, tc_plot);
        }
        if (ta->parsed()) {
            const json cfg = load_config(ta_config);
            merge_cfg(cfg, ta_da, "data", ta_data);
            merge_cfg(cfg, ta_pr, "profile", ta_profile);
            merge_cfg(cfg, ta_st, "steps", ta_steps);
            merge_cfg(cfg, ta_bs, "batch-size", ta_batch);
            merge_cfg(cfg, ta_im, "img-size", ta_img);
            merge_cfg(cfg, ta_si, "snapshot-interval", ta_snap);
            merge_cfg(cfg, ta_sd, "seed", ta_seed);
            merge_cfg(cfg, ta_ot, "out", ta_out);
            if (ta_data.empty())
                throw CLI::ValidationError("train-acgan needs --data");
            return run_train_acgan(ta_data, ta_profile, ta_steps, ta_batch,
                                   ta_img, ta_snap, ta_seed, ta_out, ta_plot);
        }
        if (ge->parsed()) {
            const json cfg = load_config(ge_config);
            merge_cfg(cfg, ge_mo, "model", ge_model);
            merge_cfg(cfg, ge_lb, "label", ge_label);
            merge_cfg(cfg, ge_n_o, "n", ge_n);
            merge_cfg(cfg, ge_sd, "seed", ge_seed);
            merge_cfg(cfg, ge_ot, "out", ge_out);
            if (ge_model.empty()) throw CLI::ValidationError("generate needs --model");
            return run_generate(ge_model, ge_label, ge_n, ge_post, ge_seed, ge_out);
        }
        if (sf->parsed()) {
            const json cfg = load_config(sf_config);
            merge_cfg(cfg, sf_sd, "seeds", sf_seeds);
            merge_cfg(cfg, sf_ot, "out", sf_out);
            return run_synth_facade(sf_seeds, sf_out);
        }
        if (si->parsed()) {
            const json cfg = load_config(si_config);
            merge_cfg(cfg, si_pa, "pattern", si_pattern);
            merge_cfg(cfg, si_ot, "out", si_out);
            if (si_pattern.empty())
                throw CLI::ValidationError("simulate-sda needs --pattern");
            return run_simulate_sda(si_pattern, si_out);
        }
        if (ev->parsed()) {
            const json cfg = load_config(ev_config);
            merge_cfg(cfg, ev_mo, "model", ev_model);
            merge_cfg(cfg, ev_da, "data", ev_data);
            merge_cfg(cfg, ev_md, "mode", ev_mode);
            merge_cfg(cfg, ev_n_o, "n", ev_n);
            merge_cfg(cfg, ev_sd, "seed", ev_seed);
            merge_cfg(cfg, ev_ot, "out", ev_out);
            if (ev_model.empty()) throw CLI::ValidationError("evaluate needs --model");
            if (ev_data.empty()) throw CLI::ValidationError("evaluate needs --data");
            return run_evaluate(ev_model, ev_data, ev_mode, ev_n, ev_seed, ev_out);
        }
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}

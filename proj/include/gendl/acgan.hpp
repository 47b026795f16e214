#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gendl/dataset.hpp"
#include "gendl/image.hpp"
#include "gendl/layers.hpp"
#include "gendl/losses.hpp"
#include "gendl/network.hpp"
#include "gendl/optim.hpp"
#include "gendl/rng.hpp"
#include "gendl/tensor.hpp"

namespace gendl {

// Conditional GAN over single-channel images. The generator maps a latent
// vector scaled by a per-class embedding to an image in [0,1]; the
// discriminator shares a conv trunk between a real/fake head and a class
// head.
struct gan_spec {
    int latent_dim = 100;
    int class_count = 6;
    int img_h = 64;
    int img_w = 64;
    int gen_base = 128;  // channels of the dense-projected quarter-res map
    int gen_mid = 64;
    int gen_late = 32;
    int disc_c1 = 16;
    int disc_c2 = 32;
    int disc_c3 = 64;
    float lrelu_alpha = 0.2f;
    float disc_dropout = 0.25f;
};

inline void validate_gan_spec(const gan_spec& s) {
    if (s.class_count < 2)
        throw std::invalid_argument("gan_spec: class_count must be >= 2");
    if (s.latent_dim < 1)
        throw std::invalid_argument("gan_spec: latent_dim must be >= 1");
    // the generator doubles a quarter-res map twice, so the target size must
    // be reachable by exact upsampling
    if (s.img_h < 8 || s.img_w < 8 || s.img_h % 4 != 0 || s.img_w % 4 != 0)
        throw std::invalid_argument(
            "gan_spec: image size must be >= 8x8 and divisible by 4, got " +
            std::to_string(s.img_h) + "x" + std::to_string(s.img_w));
    if (s.gen_base < 1 || s.gen_mid < 1 || s.gen_late < 1 || s.disc_c1 < 1 ||
        s.disc_c2 < 1 || s.disc_c3 < 1)
        throw std::invalid_argument("gan_spec: channel counts must be >= 1");
}

inline gan_spec shapes_gan_spec(int size = 64) {
    gan_spec s;
    s.img_h = s.img_w = size;
    validate_gan_spec(s);
    return s;
}

inline gan_spec facade_gan_spec() {
    gan_spec s;
    s.class_count = 5;
    s.img_h = 32;   // 8 cell rows at 4 px
    s.img_w = 72;   // 18 cell columns at 4 px
    s.gen_base = 64;
    s.gen_mid = 32;
    s.gen_late = 16;
    validate_gan_spec(s);
    return s;
}

// Sequential generator whose first layer is the label embedding; keeps a
// typed pointer to it so each forward can inject the batch's labels.
class conditional_generator {
  public:
    conditional_generator() = default;

    static conditional_generator build(const gan_spec& spec, std::uint64_t seed) {
        validate_gan_spec(spec);
        conditional_generator g;
        rng r(derive_seed(seed, 0xACF0ULL));
        const int h0 = spec.img_h / 4, w0 = spec.img_w / 4;
        auto& net = g.net_;
        net.emplace<label_embed<float>>(spec.class_count, spec.latent_dim, r);
        net.emplace<dense<float>>(spec.latent_dim, spec.gen_base * h0 * w0,
                                  weight_init::glorot, r);
        net.emplace<reshape<float>>(std::vector<int>{spec.gen_base, h0, w0});
        net.emplace<upsample_nearest<float>>(2);
        net.emplace<conv2d<float>>(spec.gen_base, spec.gen_mid, 3, 3, 1, 1,
                                   weight_init::he, r);
        net.emplace<batch_norm<float>>(spec.gen_mid);
        net.emplace<leaky_relu<float>>(spec.lrelu_alpha);
        net.emplace<upsample_nearest<float>>(2);
        net.emplace<conv2d<float>>(spec.gen_mid, spec.gen_late, 3, 3, 1, 1,
                                   weight_init::he, r);
        net.emplace<batch_norm<float>>(spec.gen_late);
        net.emplace<leaky_relu<float>>(spec.lrelu_alpha);
        net.emplace<conv2d<float>>(spec.gen_late, 1, 3, 3, 1, 1,
                                   weight_init::glorot, r);
        net.emplace<tanh_act<float>>();
        net.emplace<scale_shift<float>>(0.5f, 0.5f);  // [-1,1] -> [0,1]
        g.bind_embed();
        return g;
    }

    static conditional_generator wrap(network<float> net) {
        conditional_generator g;
        g.net_ = std::move(net);
        g.bind_embed();
        return g;
    }

    static conditional_generator load(const std::filesystem::path& path) {
        return wrap(load_checkpoint(path));
    }

    void save(const std::filesystem::path& path) { save_checkpoint(path, net_); }

    tensor<float> forward(const tensor<float>& z, const std::vector<int>& labels,
                          bool training) {
        embed_->set_labels(labels);
        return net_.forward(z, training);
    }

    tensor<float> backward(const tensor<float>& gy) { return net_.backward(gy); }

    network<float>& net() { return net_; }
    int latent_dim() const { return embed_->dim(); }
    int class_count() const { return embed_->classes(); }

  private:
    void bind_embed() {
        if (net_.layers.empty())
            throw std::runtime_error("generator: empty network");
        embed_ = dynamic_cast<label_embed<float>*>(net_.layers.front().get());
        if (!embed_)
            throw std::runtime_error(
                "generator: first layer must be a label embedding");
    }

    network<float> net_;
    label_embed<float>* embed_ = nullptr;
};

// Two-headed discriminator. Serialized as a single checkpoint with the trunk
// layers first, then the validity head (dense+sigmoid), then the class head
// (dense+softmax); load() splits on that fixed tail layout.
class discriminator {
  public:
    network<float> trunk;
    network<float> validity_head;
    network<float> class_head;

    static discriminator build(const gan_spec& spec, std::uint64_t seed) {
        validate_gan_spec(spec);
        rng r(derive_seed(seed, 0xDC01ULL));
        discriminator d;
        auto down = [](int n) { return (n - 1) / 2 + 1; };  // 3x3, stride 2, pad 1
        int h = spec.img_h, w = spec.img_w;
        const int chans[3] = {spec.disc_c1, spec.disc_c2, spec.disc_c3};
        int in_c = 1;
        for (int b = 0; b < 3; ++b) {
            d.trunk.emplace<conv2d<float>>(in_c, chans[b], 3, 3, 2, 1,
                                           weight_init::he, r);
            d.trunk.emplace<leaky_relu<float>>(spec.lrelu_alpha);
            d.trunk.emplace<dropout<float>>(spec.disc_dropout,
                                            derive_seed(seed, 0xD200ULL + b));
            in_c = chans[b];
            h = down(h);
            w = down(w);
        }
        d.trunk.emplace<flatten<float>>();
        const int flat = spec.disc_c3 * h * w;
        d.validity_head.emplace<dense<float>>(flat, 1, weight_init::glorot, r);
        d.validity_head.emplace<sigmoid<float>>();
        d.class_head.emplace<dense<float>>(flat, spec.class_count,
                                           weight_init::glorot, r);
        d.class_head.emplace<softmax<float>>();
        return d;
    }

    // (validity [N,1], class probs [N,K])
    std::pair<tensor<float>, tensor<float>> forward(const tensor<float>& x,
                                                    bool training) {
        const tensor<float> f = trunk.forward(x, training);
        return {validity_head.forward(f, training),
                class_head.forward(f, training)};
    }

    // Sums both heads' input gradients before walking back through the trunk;
    // returns the gradient at the image input.
    tensor<float> backward(const tensor<float>& g_validity,
                           const tensor<float>& g_class) {
        tensor<float> gf = validity_head.backward(g_validity);
        const tensor<float> gc = class_head.backward(g_class);
        if (!gf.same_shape(gc))
            throw std::logic_error("discriminator: head gradient shape mismatch");
        for (int i = 0; i < gf.size(); ++i) gf[i] += gc[i];
        return trunk.backward(gf);
    }

    std::vector<tensor<float>*> params() {
        auto out = trunk.params();
        for (auto* p : validity_head.params()) out.push_back(p);
        for (auto* p : class_head.params()) out.push_back(p);
        return out;
    }

    std::vector<tensor<float>*> grads() {
        auto out = trunk.grads();
        for (auto* g : validity_head.grads()) out.push_back(g);
        for (auto* g : class_head.grads()) out.push_back(g);
        return out;
    }

    void zero_grad() {
        trunk.zero_grad();
        validity_head.zero_grad();
        class_head.zero_grad();
    }

    void save(const std::filesystem::path& path) {
        std::vector<layer<float>*> ls;
        for (auto& l : trunk.layers) ls.push_back(l.get());
        for (auto& l : validity_head.layers) ls.push_back(l.get());
        for (auto& l : class_head.layers) ls.push_back(l.get());
        save_checkpoint(path, ls);
    }

    static discriminator load(const std::filesystem::path& path) {
        network<float> all = load_checkpoint(path);
        const std::size_t n = all.layers.size();
        auto kind_at = [&](std::size_t i) { return all.layers[i]->kind(); };
        if (n < 5 || kind_at(n - 4) != layer_kind::dense ||
            kind_at(n - 3) != layer_kind::sigmoid ||
            kind_at(n - 2) != layer_kind::dense ||
            kind_at(n - 1) != layer_kind::softmax)
            throw std::runtime_error(
                "discriminator checkpoint: unexpected head layout in " +
                path.string());
        discriminator d;
        for (std::size_t i = 0; i < n - 4; ++i)
            d.trunk.layers.push_back(std::move(all.layers[i]));
        d.validity_head.layers.push_back(std::move(all.layers[n - 4]));
        d.validity_head.layers.push_back(std::move(all.layers[n - 3]));
        d.class_head.layers.push_back(std::move(all.layers[n - 2]));
        d.class_head.layers.push_back(std::move(all.layers[n - 1]));
        return d;
    }
};

struct gan_train_config {
    long long steps = 5000;
    int batch_size = 32;
    std::uint64_t seed = 42;
    float lr = 2e-4f;
    float beta1 = 0.5f;
    float real_target = 0.9f;           // smoothed validity target for real batches
    long long snapshot_interval = 250;  // contact sheets; 0 disables
    int snapshot_per_label = 8;
    std::filesystem::path out_dir;  // empty: no files written during training
};

struct gan_step_record {
    long long step = 0;
    double d_loss = 0.0;
    double g_loss = 0.0;
    double d_acc_real = 0.0;  // real images scored >= 0.5
    double d_acc_fake = 0.0;  // generated images scored < 0.5
};

struct gan_history {
    std::vector<gan_step_record> steps;

    bool finite() const {
        for (const auto& r : steps)
            if (!std::isfinite(r.d_loss) || !std::isfinite(r.g_loss) ||
                !std::isfinite(r.d_acc_real) || !std::isfinite(r.d_acc_fake))
                return false;
        return true;
    }

    std::string csv() const {
        std::string out = "step,d_loss,g_loss,d_acc_real,d_acc_fake\n";
        char line[160];
        for (const auto& r : steps) {
            std::snprintf(line, sizeof(line), "%lld,%.6f,%.6f,%.4f,%.4f\n",
                          r.step, r.d_loss, r.g_loss, r.d_acc_real, r.d_acc_fake);
            out += line;
        }
        return out;
    }
};

class acgan_trainer {
  public:
    acgan_trainer(const gan_spec& spec, const gan_train_config& cfg)
        : spec_(spec), cfg_(cfg),
          gen_(conditional_generator::build(spec, cfg.seed)),
          disc_(discriminator::build(spec, derive_seed(cfg.seed, 0xD15CULL))),
          opt_g_(cfg.lr, cfg.beta1), opt_d_(cfg.lr, cfg.beta1),
          batch_rng_(derive_seed(cfg.seed, 0xBA7C4ULL)),
          latent_rng_(derive_seed(cfg.seed, 0x1A7E47ULL)) {
        if (cfg.steps < 1)
            throw std::invalid_argument("gan_train_config: steps must be >= 1");
        if (cfg.batch_size < 1)
            throw std::invalid_argument("gan_train_config: batch_size must be >= 1");
        if (cfg.snapshot_per_label < 1)
            throw std::invalid_argument(
                "gan_train_config: snapshot_per_label must be >= 1");
        opt_g_.attach(gen_.net().params());
        opt_d_.attach(disc_.params());

        // fixed latents for the contact sheets, drawn once so every snapshot
        // tracks the same points through training
        rng snap(derive_seed(cfg.seed, 0x5A4B4ULL));
        snap_z_ = tensor<float>({spec.class_count * cfg.snapshot_per_label,
                                 spec.latent_dim});
        for (auto& v : snap_z_.v)
            v = static_cast<float>(snap.range(-1.0, 1.0));
        for (int k = 0; k < spec.class_count; ++k)
            for (int j = 0; j < cfg.snapshot_per_label; ++j)
                snap_labels_.push_back(k);
    }

    // One generator-update step: discriminator on a real batch, discriminator
    // on a generated batch, then the generator through the frozen
    // discriminator. Optimizers are bound to their own network's parameters,
    // so each update leaves the other network's weights untouched.
    gan_step_record step(const labeled_dataset& ds) {
        check_dataset(ds);
        const int B = cfg_.batch_size;
        const int K = spec_.class_count;

        tensor<float> xr({B, 1, spec_.img_h, spec_.img_w});
        std::vector<int> yr(B);
        const std::size_t px =
            static_cast<std::size_t>(spec_.img_h) * spec_.img_w;
        for (int i = 0; i < B; ++i) {
            const auto j = static_cast<std::size_t>(batch_rng_.below(ds.size()));
            std::copy(ds.images[j].values.begin(), ds.images[j].values.end(),
                      xr.data() + i * px);
            yr[i] = ds.labels[j];
        }

        disc_.zero_grad();
        auto [vr, cr] = disc_.forward(xr, true);
        const tensor<float> target_real({B, 1}, cfg_.real_target);
        const tensor<float> tr = one_hot<float>(yr, K);
        const double loss_real = binary_crossentropy(vr, target_real) +
                                 categorical_crossentropy(cr, tr);
        const double acc_real = score_rate(vr, true);
        disc_.backward(binary_crossentropy_grad(vr, target_real),
                       categorical_crossentropy_grad(cr, tr));
        opt_d_.step(disc_.grads());

        tensor<float> z({B, spec_.latent_dim});
        std::vector<int> yf(B);
        draw_latents(z, yf);
        const tensor<float> xf = gen_.forward(z, yf, true);
        disc_.zero_grad();
        auto [vf, cf] = disc_.forward(xf, true);
        const tensor<float> target_fake({B, 1}, 0.0f);
        const tensor<float> tf = one_hot<float>(yf, K);
        const double loss_fake = binary_crossentropy(vf, target_fake) +
                                 categorical_crossentropy(cf, tf);
        const double acc_fake = score_rate(vf, false);
        disc_.backward(binary_crossentropy_grad(vf, target_fake),
                       categorical_crossentropy_grad(cf, tf));
        opt_d_.step(disc_.grads());

        draw_latents(z, yf);
        gen_.net().zero_grad();
        disc_.zero_grad();  // scratch gradient buffers only; weights not stepped
        const tensor<float> xg = gen_.forward(z, yf, true);
        auto [vg, cg] = disc_.forward(xg, true);
        const tensor<float> target_valid({B, 1}, 1.0f);
        const tensor<float> tg = one_hot<float>(yf, K);
        const double g_loss = binary_crossentropy(vg, target_valid) +
                              categorical_crossentropy(cg, tg);
        const tensor<float> gimg =
            disc_.backward(binary_crossentropy_grad(vg, target_valid),
                           categorical_crossentropy_grad(cg, tg));
        gen_.backward(gimg);
        opt_g_.step(gen_.net().grads());

        ++steps_done_;
        return {steps_done_, 0.5 * (loss_real + loss_fake), g_loss, acc_real,
                acc_fake};
    }

    gan_history train(const labeled_dataset& ds) {
        check_dataset(ds);
        gan_history hist;
        hist.steps.reserve(static_cast<std::size_t>(cfg_.steps));
        remember_weights();
        for (long long s = 1; s <= cfg_.steps; ++s) {
            gan_step_record rec;
            try {
                rec = step(ds);
            } catch (const std::runtime_error& e) {
                halt_dump(hist);
                throw std::runtime_error("acgan: halted at step " +
                                         std::to_string(s) + ": " + e.what());
            }
            hist.steps.push_back(rec);
            if (!std::isfinite(rec.d_loss) || !std::isfinite(rec.g_loss)) {
                halt_dump(hist);
                throw std::runtime_error(
                    "acgan: non-finite loss at step " + std::to_string(s) +
                    " (d_loss=" + std::to_string(rec.d_loss) +
                    ", g_loss=" + std::to_string(rec.g_loss) + ")");
            }
            remember_weights();
            const bool due = cfg_.snapshot_interval > 0 &&
                             (s == 1 || s % cfg_.snapshot_interval == 0 ||
                              s == cfg_.steps);
            if (due && !cfg_.out_dir.empty()) write_snapshot(s);
        }
        if (!cfg_.out_dir.empty()) {
            std::filesystem::create_directories(cfg_.out_dir);
            gen_.save(cfg_.out_dir / "generator.gdl1");
            disc_.save(cfg_.out_dir / "discriminator.gdl1");
            write_text_file(cfg_.out_dir / "gan_history.csv", hist.csv());
        }
        return hist;
    }

    conditional_generator& generator() { return gen_; }
    discriminator& disc() { return disc_; }
    long long steps_done() const { return steps_done_; }

    // Contact sheet of the fixed latent bank, one row per label, rendered in
    // inference mode so it reflects what generate() would produce.
    image_grid snapshot_sheet() {
        const tensor<float> y = gen_.forward(snap_z_, snap_labels_, false);
        std::vector<image_grid> tiles;
        tiles.reserve(static_cast<std::size_t>(y.dim(0)));
        for (int i = 0; i < y.dim(0); ++i) {
            image_grid g(y.dim(2), y.dim(3));
            const float* src = y.data() +
                               static_cast<std::size_t>(i) * y.dim(2) * y.dim(3);
            std::copy(src, src + g.values.size(), g.values.begin());
            tiles.push_back(std::move(g));
        }
        return make_mosaic(tiles, cfg_.snapshot_per_label);
    }

  private:
    void check_dataset(const labeled_dataset& ds) const {
        if (ds.size() == 0)
            throw std::invalid_argument("acgan: empty dataset");
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.images[i].height != spec_.img_h ||
                ds.images[i].width != spec_.img_w)
                throw std::invalid_argument(
                    "acgan: image " + std::to_string(i) + " is " +
                    std::to_string(ds.images[i].height) + "x" +
                    std::to_string(ds.images[i].width) + ", expected " +
                    std::to_string(spec_.img_h) + "x" +
                    std::to_string(spec_.img_w));
            if (ds.labels[i] < 0 || ds.labels[i] >= spec_.class_count)
                throw std::invalid_argument(
                    "acgan: label " + std::to_string(ds.labels[i]) +
                    " outside class space at image " + std::to_string(i));
        }
    }

    void draw_latents(tensor<float>& z, std::vector<int>& labels) {
        for (auto& v : z.v)
            v = static_cast<float>(latent_rng_.range(-1.0, 1.0));
        for (auto& l : labels)
            l = static_cast<int>(latent_rng_.below(
                static_cast<std::uint64_t>(spec_.class_count)));
    }

    static double score_rate(const tensor<float>& validity, bool want_high) {
        int hit = 0;
        for (int i = 0; i < validity.size(); ++i)
            hit += want_high ? (validity[i] >= 0.5f) : (validity[i] < 0.5f);
        return validity.size() ? static_cast<double>(hit) / validity.size()
                               : 0.0;
    }

    std::vector<tensor<float>*> state_ptrs() {
        std::vector<tensor<float>*> out;
        for (auto& l : gen_.net().layers)
            for (auto* t : l->state()) out.push_back(t);
        for (auto* n : {&disc_.trunk, &disc_.validity_head, &disc_.class_head})
            for (auto& l : n->layers)
                for (auto* t : l->state()) out.push_back(t);
        return out;
    }

    void remember_weights() {
        const auto ptrs = state_ptrs();
        last_good_.resize(ptrs.size());
        for (std::size_t i = 0; i < ptrs.size(); ++i) last_good_[i] = *ptrs[i];
    }

    // On a non-finite loss or gradient: restore the last finite weights and
    // leave them on disk next to the history so the run can be examined.
    void halt_dump(const gan_history& hist) {
        const auto ptrs = state_ptrs();
        if (last_good_.size() == ptrs.size())
            for (std::size_t i = 0; i < ptrs.size(); ++i) *ptrs[i] = last_good_[i];
        if (cfg_.out_dir.empty()) return;
        std::filesystem::create_directories(cfg_.out_dir);
        gen_.save(cfg_.out_dir / "generator_lastgood.gdl1");
        disc_.save(cfg_.out_dir / "discriminator_lastgood.gdl1");
        write_text_file(cfg_.out_dir / "gan_history.csv", hist.csv());
    }

    void write_snapshot(long long s) {
        std::filesystem::create_directories(cfg_.out_dir);
        char name[48];
        std::snprintf(name, sizeof(name), "snapshot_%06lld.pgm", s);
        write_pgm(snapshot_sheet(), (cfg_.out_dir / name).string());
    }

    gan_spec spec_;
    gan_train_config cfg_;
    conditional_generator gen_;
    discriminator disc_;
    adam<float> opt_g_, opt_d_;
    rng batch_rng_, latent_rng_;
    long long steps_done_ = 0;
    tensor<float> snap_z_;
    std::vector<int> snap_labels_;
    std::vector<tensor<float>> last_good_;
};

// n images for one label from seeded latents, in inference mode; batching is
// per-sample deterministic, so the set only depends on (seed, label, n).
inline std::vector<image_grid> generate(conditional_generator& gen, int label,
                                        int n, std::uint64_t seed) {
    if (n < 0) throw std::invalid_argument("generate: n must be >= 0");
    if (label < 0 || label >= gen.class_count())
        throw std::invalid_argument(
            "generate: label " + std::to_string(label) + " outside [0, " +
            std::to_string(gen.class_count()) + ")");
    if (n == 0) return {};
    rng r(derive_seed(seed, 0x9E4E0000ULL + static_cast<std::uint64_t>(label)));
    tensor<float> z({n, gen.latent_dim()});
    for (auto& v : z.v) v = static_cast<float>(r.range(-1.0, 1.0));
    const std::vector<int> labels(static_cast<std::size_t>(n), label);
    const tensor<float> y = gen.forward(z, labels, false);
    std::vector<image_grid> out;
    out.reserve(static_cast<std::size_t>(n));
    const std::size_t px = static_cast<std::size_t>(y.dim(2)) * y.dim(3);
    for (int i = 0; i < n; ++i) {
        image_grid g(y.dim(2), y.dim(3));
        std::copy(y.data() + i * px, y.data() + (i + 1) * px,
                  g.values.begin());
        out.push_back(std::move(g));
    }
    return out;
}

struct fidelity_report {
    std::vector<double> per_label;  // oracle-match rate per conditioning label
    double mean = 0.0;
};

// Generates n_per_label images per label, resizes them to the oracle's input
// and scores how often the oracle's argmax agrees with the conditioning.
inline fidelity_report label_fidelity(conditional_generator& gen,
                                      network<float>& oracle, int n_per_label,
                                      std::uint64_t seed,
                                      int oracle_size = 100) {
    if (n_per_label < 0)
        throw std::invalid_argument("label_fidelity: n_per_label must be >= 0");
    fidelity_report rep;
    if (n_per_label == 0) return rep;
    const int K = gen.class_count();
    for (int k = 0; k < K; ++k) {
        auto imgs = generate(gen, k, n_per_label,
                             derive_seed(seed, 0xF1DE0000ULL +
                                                   static_cast<std::uint64_t>(k)));
        tensor<float> x({n_per_label, 1, oracle_size, oracle_size});
        const std::size_t px =
            static_cast<std::size_t>(oracle_size) * oracle_size;
        for (int i = 0; i < n_per_label; ++i) {
            const image_grid r = resize_bilinear(imgs[static_cast<std::size_t>(i)],
                                                 oracle_size, oracle_size);
            std::copy(r.values.begin(), r.values.end(), x.data() + i * px);
        }
        const tensor<float> probs = oracle.forward(x, false);
        int hit = 0;
        for (int i = 0; i < n_per_label; ++i)
            hit += argmax_row(probs, i) == k;
        rep.per_label.push_back(static_cast<double>(hit) / n_per_label);
    }
    for (double v : rep.per_label) rep.mean += v;
    rep.mean /= K;
    return rep;
}

// Minimum mean-absolute pixel distance from a sample to any reference image;
// strictly positive means the sample is not a training-set copy.
inline double novelty_check(const image_grid& sample,
                            const std::vector<image_grid>& references) {
    if (references.empty())
        throw std::invalid_argument("novelty_check: no reference images");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ref : references) {
        if (ref.height != sample.height || ref.width != sample.width)
            throw std::invalid_argument("novelty_check: image size mismatch");
        double acc = 0.0;
        for (std::size_t i = 0; i < ref.values.size(); ++i)
            acc += std::abs(static_cast<double>(sample.values[i]) -
                            ref.values[i]);
        best = std::min(best, acc / static_cast<double>(ref.values.size()));
    }
    return best;
}

inline double novelty_check(const image_grid& sample,
                            const labeled_dataset& ds) {
    return novelty_check(sample, ds.images);
}

// Area-averaged copy of a dataset at a new resolution (images only; labels,
// seeds and filenames carry over).
inline labeled_dataset resize_dataset(const labeled_dataset& ds, int h, int w) {
    labeled_dataset out;
    for (std::size_t i = 0; i < ds.size(); ++i)
        out.add(downsample_area(ds.images[i], h, w), ds.labels[i], ds.seeds[i],
                ds.filenames[i]);
    return out;
}

}  // namespace gendl

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gendl/acgan.hpp"
#include "gendl/dataset.hpp"
#include "gendl/image.hpp"
#include "gendl/layers.hpp"
#include "gendl/network.hpp"
#include "gendl/optim.hpp"
#include "gendl/rng.hpp"
#include "gendl/tensor.hpp"

using namespace gendl;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

// Small profile so trainer steps cost microseconds instead of seconds.
gan_spec small_spec() {
    gan_spec s;
    s.latent_dim = 8;
    s.class_count = 3;
    s.img_h = 16;
    s.img_w = 16;
    s.gen_base = 8;
    s.gen_mid = 8;
    s.gen_late = 4;
    s.disc_c1 = 4;
    s.disc_c2 = 8;
    s.disc_c3 = 8;
    return s;
}

labeled_dataset noise_dataset(const gan_spec& spec, int n, std::uint64_t seed) {
    labeled_dataset ds;
    rng r(seed);
    for (int i = 0; i < n; ++i) {
        image_grid img(spec.img_h, spec.img_w);
        for (auto& v : img.values) v = static_cast<float>(r.range(0.0, 1.0));
        ds.add(img, i % spec.class_count, seed + i, "noise_" + std::to_string(i));
    }
    return ds;
}

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

bool same_images(const std::vector<image_grid>& a,
                 const std::vector<image_grid>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].height != b[i].height || a[i].width != b[i].width ||
            a[i].values != b[i].values)
            return false;
    return true;
}

std::vector<tensor<float>> snapshot_params(std::vector<tensor<float>*> ptrs) {
    std::vector<tensor<float>> out;
    out.reserve(ptrs.size());
    for (auto* p : ptrs) out.push_back(*p);
    return out;
}

bool params_equal(const std::vector<tensor<float>>& before,
                  std::vector<tensor<float>*> after) {
    if (before.size() != after.size()) return false;
    for (std::size_t i = 0; i < before.size(); ++i)
        if (before[i].v != after[i]->v) return false;
    return true;
}

bool params_finite(std::vector<tensor<float>*> ptrs) {
    for (auto* p : ptrs)
        for (float v : p->v)
            if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace

TEST_CASE("gan architecture specs are validated") {
    REQUIRE_NOTHROW(validate_gan_spec(small_spec()));

    gan_spec s = small_spec();
    s.class_count = 1;
    REQUIRE_THROWS_AS(validate_gan_spec(s), std::invalid_argument);

    s = small_spec();
    s.latent_dim = 0;
    REQUIRE_THROWS_AS(validate_gan_spec(s), std::invalid_argument);

    s = small_spec();
    s.img_h = 4;  // below the minimum
    REQUIRE_THROWS_AS(validate_gan_spec(s), std::invalid_argument);

    s = small_spec();
    s.img_w = 18;  // not divisible by 4, so two 2x upsamples cannot reach it
    REQUIRE_THROWS_WITH(validate_gan_spec(s), ContainsSubstring("divisible by 4"));

    s = small_spec();
    s.gen_mid = 0;
    REQUIRE_THROWS_AS(validate_gan_spec(s), std::invalid_argument);

    s = small_spec();
    s.disc_c2 = 0;
    REQUIRE_THROWS_AS(validate_gan_spec(s), std::invalid_argument);

    const gan_spec shapes = shapes_gan_spec();
    CHECK(shapes.img_h == 64);
    CHECK(shapes.img_w == 64);
    CHECK(shapes.class_count == 6);

    const gan_spec facade = facade_gan_spec();
    CHECK(facade.class_count == 5);
    CHECK(facade.img_h == 32);
    CHECK(facade.img_w == 72);
}

TEST_CASE("generator emits unit-interval images of the requested geometry") {
    const gan_spec spec = small_spec();
    auto gen = conditional_generator::build(spec, 1);
    CHECK(gen.latent_dim() == spec.latent_dim);
    CHECK(gen.class_count() == spec.class_count);

    for (int label = 0; label < spec.class_count; ++label) {
        const auto imgs = generate(gen, label, 3, 7);
        REQUIRE(imgs.size() == 3);
        for (const auto& img : imgs) {
            CHECK(img.height == spec.img_h);
            CHECK(img.width == spec.img_w);
            for (float v : img.values) {
                REQUIRE(std::isfinite(v));
                REQUIRE(v >= 0.0f);
                REQUIRE(v <= 1.0f);
            }
        }
    }

    // batched forward keeps the [N, 1, H, W] layout
    rng r(3);
    tensor<float> z({5, spec.latent_dim});
    for (auto& v : z.v) v = static_cast<float>(r.range(-1.0, 1.0));
    const tensor<float> y = gen.forward(z, {0, 1, 2, 0, 1}, false);
    REQUIRE(y.shape == std::vector<int>{5, 1, spec.img_h, spec.img_w});
}

TEST_CASE("generation is deterministic, label-sensitive and prefix-stable") {
    auto gen = conditional_generator::build(small_spec(), 1);

    const auto a1 = generate(gen, 1, 4, 99);
    const auto a2 = generate(gen, 1, 4, 99);
    CHECK(same_images(a1, a2));

    const auto other_seed = generate(gen, 1, 4, 100);
    CHECK_FALSE(same_images(a1, other_seed));

    const auto other_label = generate(gen, 2, 4, 99);
    CHECK_FALSE(same_images(a1, other_label));

    // asking for fewer images reproduces a prefix of the longer draw, so
    // sample identity does not depend on how many siblings were requested
    const auto prefix = generate(gen, 1, 2, 99);
    REQUIRE(prefix.size() == 2);
    CHECK(prefix[0].values == a1[0].values);
    CHECK(prefix[1].values == a1[1].values);
}

TEST_CASE("generate rejects bad labels and counts") {
    auto gen = conditional_generator::build(small_spec(), 1);
    REQUIRE_THROWS_AS(generate(gen, 0, -1, 5), std::invalid_argument);
    REQUIRE_THROWS_AS(generate(gen, -1, 1, 5), std::invalid_argument);
    REQUIRE_THROWS_WITH(generate(gen, 3, 1, 5), ContainsSubstring("outside"));
    CHECK(generate(gen, 0, 0, 5).empty());
}

TEST_CASE("generator construction is seeded and demands an embedding front") {
    const gan_spec spec = small_spec();
    auto g1 = conditional_generator::build(spec, 5);
    auto g2 = conditional_generator::build(spec, 5);
    auto g3 = conditional_generator::build(spec, 6);
    CHECK(same_images(generate(g1, 0, 2, 11), generate(g2, 0, 2, 11)));
    CHECK_FALSE(same_images(generate(g1, 0, 2, 11), generate(g3, 0, 2, 11)));

    network<float> empty_net;
    REQUIRE_THROWS_WITH(conditional_generator::wrap(std::move(empty_net)),
                        ContainsSubstring("empty network"));

    rng r(0);
    network<float> headless;
    headless.emplace<dense<float>>(4, 4, weight_init::glorot, r);
    REQUIRE_THROWS_WITH(conditional_generator::wrap(std::move(headless)),
                        ContainsSubstring("label embedding"));
}

TEST_CASE("generator checkpoints round-trip through disk") {
    const auto dir = fresh_dir("gendl_acgan_genio_test");
    const gan_spec spec = small_spec();
    auto gen = conditional_generator::build(spec, 8);

    // leave non-default running statistics in the batch-norm layers so the
    // round trip covers state beyond the trainable weights
    rng r(2);
    tensor<float> z({6, spec.latent_dim});
    for (auto& v : z.v) v = static_cast<float>(r.range(-1.0, 1.0));
    (void)gen.forward(z, {0, 1, 2, 0, 1, 2}, true);

    const auto path = dir / "gen.gdl1";
    gen.save(path);
    auto loaded = conditional_generator::load(path);
    CHECK(loaded.latent_dim() == spec.latent_dim);
    CHECK(loaded.class_count() == spec.class_count);
    CHECK(same_images(generate(gen, 1, 3, 42), generate(loaded, 1, 3, 42)));
}

TEST_CASE("discriminator heads emit probabilities and survive serialization") {
    const auto dir = fresh_dir("gendl_acgan_discio_test");
    const gan_spec spec = small_spec();
    auto disc = discriminator::build(spec, 3);

    rng r(4);
    tensor<float> x({4, 1, spec.img_h, spec.img_w});
    for (auto& v : x.v) v = static_cast<float>(r.range(0.0, 1.0));

    auto [validity, probs] = disc.forward(x, false);
    REQUIRE(validity.shape == std::vector<int>{4, 1});
    REQUIRE(probs.shape == std::vector<int>{4, spec.class_count});
    for (float v : validity.v) {
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
    }
    for (int i = 0; i < 4; ++i) {
        double row = 0.0;
        for (int k = 0; k < spec.class_count; ++k) {
            const float p = probs.v[static_cast<std::size_t>(i) * spec.class_count + k];
            CHECK(p >= 0.0f);
            row += p;
        }
        CHECK(row == Approx(1.0).margin(1e-5));
    }

    const auto path = dir / "disc.gdl1";
    disc.save(path);
    auto loaded = discriminator::load(path);
    CHECK(loaded.trunk.layers.size() == disc.trunk.layers.size());
    CHECK(loaded.validity_head.layers.size() == 2);
    CHECK(loaded.class_head.layers.size() == 2);
    auto [lv, lp] = loaded.forward(x, false);
    CHECK(lv.v == validity.v);
    CHECK(lp.v == probs.v);
}

TEST_CASE("discriminator loader rejects checkpoints without its head layout") {
    const auto dir = fresh_dir("gendl_acgan_headmix_test");
    auto gen = conditional_generator::build(small_spec(), 8);
    const auto path = dir / "not_a_disc.gdl1";
    gen.save(path);
    REQUIRE_THROWS_WITH(discriminator::load(path),
                        ContainsSubstring("unexpected head layout"));
}

TEST_CASE("trainer validates its configuration and dataset") {
    const gan_spec spec = small_spec();
    gan_train_config cfg;
    cfg.batch_size = 4;
    cfg.snapshot_interval = 0;

    {
        gan_train_config bad = cfg;
        bad.steps = 0;
        REQUIRE_THROWS_AS(acgan_trainer(spec, bad), std::invalid_argument);
    }
    {
        gan_train_config bad = cfg;
        bad.batch_size = 0;
        REQUIRE_THROWS_AS(acgan_trainer(spec, bad), std::invalid_argument);
    }
    {
        gan_train_config bad = cfg;
        bad.snapshot_per_label = 0;
        REQUIRE_THROWS_AS(acgan_trainer(spec, bad), std::invalid_argument);
    }

    cfg.steps = 1;
    acgan_trainer t(spec, cfg);

    labeled_dataset empty;
    REQUIRE_THROWS_WITH(t.step(empty), ContainsSubstring("empty dataset"));

    labeled_dataset wrong_size;
    wrong_size.add(image_grid(8, 8, 0.5f), 0, 1, "small");
    REQUIRE_THROWS_WITH(t.step(wrong_size), ContainsSubstring("expected"));

    labeled_dataset bad_label;
    bad_label.add(image_grid(spec.img_h, spec.img_w, 0.5f), spec.class_count, 1,
                  "oob");
    REQUIRE_THROWS_AS(t.step(bad_label), std::invalid_argument);
}

TEST_CASE("one adversarial step updates both networks and reports rates") {
    const gan_spec spec = small_spec();
    gan_train_config cfg;
    cfg.steps = 1;
    cfg.batch_size = 4;
    cfg.seed = 11;
    cfg.snapshot_interval = 0;
    acgan_trainer t(spec, cfg);
    const auto ds = noise_dataset(spec, 9, 77);

    const auto gen_before = snapshot_params(t.generator().net().params());
    const auto disc_before = snapshot_params(t.disc().params());

    const gan_step_record rec = t.step(ds);
    CHECK(rec.step == 1);
    CHECK(t.steps_done() == 1);
    CHECK(std::isfinite(rec.d_loss));
    CHECK(std::isfinite(rec.g_loss));
    CHECK(rec.d_loss > 0.0);
    CHECK(rec.g_loss > 0.0);
    CHECK(rec.d_acc_real >= 0.0);
    CHECK(rec.d_acc_real <= 1.0);
    CHECK(rec.d_acc_fake >= 0.0);
    CHECK(rec.d_acc_fake <= 1.0);

    CHECK_FALSE(params_equal(gen_before, t.generator().net().params()));
    CHECK_FALSE(params_equal(disc_before, t.disc().params()));
}

TEST_CASE("generator updates through a frozen discriminator keep it intact") {
    const gan_spec spec = small_spec();
    auto gen = conditional_generator::build(spec, 2);
    auto disc = discriminator::build(spec, 9);
    adam<float> opt_g(2e-4f, 0.5f);
    opt_g.attach(gen.net().params());

    const auto disc_before = snapshot_params(disc.params());
    const auto gen_before = snapshot_params(gen.net().params());

    rng r(6);
    tensor<float> z({3, spec.latent_dim});
    for (auto& v : z.v) v = static_cast<float>(r.range(-1.0, 1.0));
    const std::vector<int> labels = {0, 1, 2};

    gen.net().zero_grad();
    disc.zero_grad();
    const tensor<float> xg = gen.forward(z, labels, true);
    auto [vg, cg] = disc.forward(xg, true);
    const tensor<float> target_valid({3, 1}, 1.0f);
    const tensor<float> tg = one_hot<float>(labels, spec.class_count);
    const tensor<float> gimg =
        disc.backward(binary_crossentropy_grad(vg, target_valid),
                      categorical_crossentropy_grad(cg, tg));
    gen.backward(gimg);
    opt_g.step(gen.net().grads());

    CHECK(params_equal(disc_before, disc.params()));
    CHECK_FALSE(params_equal(gen_before, gen.net().params()));
}

TEST_CASE("adversarial training is reproducible step for step") {
    const gan_spec spec = small_spec();
    const auto ds = noise_dataset(spec, 12, 5);

    gan_train_config cfg;
    cfg.steps = 3;
    cfg.batch_size = 4;
    cfg.seed = 21;
    cfg.snapshot_interval = 0;

    acgan_trainer t1(spec, cfg);
    acgan_trainer t2(spec, cfg);
    const gan_history h1 = t1.train(ds);
    const gan_history h2 = t2.train(ds);
    REQUIRE(h1.steps.size() == 3);
    CHECK(h1.finite());
    CHECK(h1.csv() == h2.csv());
    CHECK(same_images(generate(t1.generator(), 0, 2, 9),
                      generate(t2.generator(), 0, 2, 9)));

    gan_train_config other = cfg;
    other.seed = 22;
    acgan_trainer t3(spec, other);
    CHECK(t3.train(ds).csv() != h1.csv());
}

TEST_CASE("training writes history, checkpoints and snapshot sheets") {
    const auto dir = fresh_dir("gendl_acgan_artifacts_test");
    const gan_spec spec = small_spec();
    const auto ds = noise_dataset(spec, 9, 13);

    gan_train_config cfg;
    cfg.steps = 2;
    cfg.batch_size = 4;
    cfg.seed = 31;
    cfg.snapshot_interval = 1;
    cfg.snapshot_per_label = 2;
    cfg.out_dir = dir;

    acgan_trainer t(spec, cfg);
    const gan_history hist = t.train(ds);
    REQUIRE(hist.steps.size() == 2);
    CHECK(hist.finite());

    CHECK(std::filesystem::exists(dir / "snapshot_000001.pgm"));
    CHECK(std::filesystem::exists(dir / "snapshot_000002.pgm"));
    REQUIRE(std::filesystem::exists(dir / "generator.gdl1"));
    REQUIRE(std::filesystem::exists(dir / "discriminator.gdl1"));
    REQUIRE(std::filesystem::exists(dir / "gan_history.csv"));

    const std::string csv = slurp(dir / "gan_history.csv");
    CHECK(csv == hist.csv());
    CHECK(csv.rfind("step,d_loss,g_loss,d_acc_real,d_acc_fake\n", 0) == 0);

    // the contact sheet holds class_count rows x snapshot_per_label columns
    // of tiles with a 2-pixel gutter
    const image_grid sheet = read_pgm((dir / "snapshot_000001.pgm").string());
    CHECK(sheet.height == spec.class_count * spec.img_h +
                              (spec.class_count + 1) * 2);
    CHECK(sheet.width == cfg.snapshot_per_label * spec.img_w +
                             (cfg.snapshot_per_label + 1) * 2);

    auto reloaded = conditional_generator::load(dir / "generator.gdl1");
    CHECK(same_images(generate(t.generator(), 1, 2, 3),
                      generate(reloaded, 1, 2, 3)));
}

TEST_CASE("gan history formats records and flags non-finite entries") {
    gan_history hist;
    hist.steps.push_back({3, 0.5, 1.25, 0.75, 0.5});
    CHECK(hist.csv() ==
          "step,d_loss,g_loss,d_acc_real,d_acc_fake\n"
          "3,0.500000,1.250000,0.7500,0.5000\n");
    CHECK(hist.finite());
    hist.steps.push_back({4, std::nan(""), 0.0, 0.0, 0.0});
    CHECK_FALSE(hist.finite());
}

TEST_CASE("a poisoned batch halts training and restores the last good state") {
    const auto dir = fresh_dir("gendl_acgan_halt_test");
    const gan_spec spec = small_spec();

    labeled_dataset poisoned;
    for (int i = 0; i < 6; ++i) {
        image_grid img(spec.img_h, spec.img_w, 0.5f);
        img.values[0] = std::numeric_limits<float>::quiet_NaN();
        poisoned.add(img, i % spec.class_count, i, "bad_" + std::to_string(i));
    }

    gan_train_config cfg;
    cfg.steps = 5;
    cfg.batch_size = 4;
    cfg.seed = 17;
    cfg.snapshot_interval = 0;
    cfg.out_dir = dir;

    acgan_trainer t(spec, cfg);
    const auto gen_before = snapshot_params(t.generator().net().params());
    const auto disc_before = snapshot_params(t.disc().params());

    REQUIRE_THROWS_WITH(t.train(poisoned), ContainsSubstring("halted at step 1"));

    // weights roll back to the snapshot taken before the failing step
    CHECK(params_finite(t.generator().net().params()));
    CHECK(params_finite(t.disc().params()));
    CHECK(params_equal(gen_before, t.generator().net().params()));
    CHECK(params_equal(disc_before, t.disc().params()));

    REQUIRE(std::filesystem::exists(dir / "generator_lastgood.gdl1"));
    REQUIRE(std::filesystem::exists(dir / "discriminator_lastgood.gdl1"));
    REQUIRE(std::filesystem::exists(dir / "gan_history.csv"));
    CHECK(slurp(dir / "gan_history.csv") ==
          "step,d_loss,g_loss,d_acc_real,d_acc_fake\n");

    // the dumped generator equals a fresh build from the same seed, i.e. the
    // restore really landed on the pre-step weights
    auto dumped = conditional_generator::load(dir / "generator_lastgood.gdl1");
    auto fresh = conditional_generator::build(spec, cfg.seed);
    CHECK(same_images(generate(dumped, 0, 2, 1), generate(fresh, 0, 2, 1)));
}

TEST_CASE("label fidelity counts oracle agreement per conditioning label") {
    const gan_spec spec = small_spec();
    auto gen = conditional_generator::build(spec, 4);

    // fixed oracle: zero weights and a biased logit make it predict class 2
    // for every input, so agreement must be exactly {0, 0, 1}
    const int oracle_size = 12;
    rng r(1);
    network<float> oracle;
    oracle.emplace<flatten<float>>();
    oracle.emplace<dense<float>>(oracle_size * oracle_size, spec.class_count,
                                 weight_init::glorot, r);
    oracle.emplace<softmax<float>>();
    auto params = oracle.params();
    REQUIRE(params.size() == 2);
    for (auto& v : params[0]->v) v = 0.0f;
    params[1]->v = {0.0f, 0.0f, 7.0f};

    const fidelity_report rep = label_fidelity(gen, oracle, 5, 77, oracle_size);
    REQUIRE(rep.per_label.size() == 3);
    CHECK(rep.per_label[0] == 0.0);
    CHECK(rep.per_label[1] == 0.0);
    CHECK(rep.per_label[2] == 1.0);
    CHECK(rep.mean == Approx(1.0 / 3.0));

    const fidelity_report again = label_fidelity(gen, oracle, 5, 77, oracle_size);
    CHECK(again.per_label == rep.per_label);

    CHECK(label_fidelity(gen, oracle, 0, 77, oracle_size).per_label.empty());
    REQUIRE_THROWS_AS(label_fidelity(gen, oracle, -1, 77, oracle_size),
                      std::invalid_argument);
}

TEST_CASE("novelty is the distance to the nearest reference image") {
    rng r(12);
    image_grid a(10, 10);
    for (auto& v : a.values) v = static_cast<float>(r.range(0.0, 1.0));

    CHECK(novelty_check(a, std::vector<image_grid>{a}) == 0.0);

    image_grid b(10, 10);
    double expect = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        b.values[i] = 1.0f - a.values[i];
        expect += std::abs(1.0 - 2.0 * static_cast<double>(a.values[i]));
    }
    expect /= static_cast<double>(a.values.size());
    CHECK(novelty_check(b, std::vector<image_grid>{a}) == Approx(expect));

    // the minimum over references picks the closer one
    CHECK(novelty_check(b, std::vector<image_grid>{a, b}) == 0.0);

    REQUIRE_THROWS_AS(novelty_check(a, std::vector<image_grid>{}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(novelty_check(a, std::vector<image_grid>{image_grid(4, 4)}),
                      std::invalid_argument);

    labeled_dataset ds;
    ds.add(a, 0, 1, "ref");
    CHECK(novelty_check(b, ds) == Approx(expect));
}

TEST_CASE("dataset resizing averages pixel areas and keeps the bookkeeping") {
    labeled_dataset ds;
    ds.add(image_grid(32, 32, 0.25f), 1, 11, "flat");
    image_grid halves(32, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) halves.at(y, x) = x < 16 ? 1.0f : 0.0f;
    ds.add(halves, 4, 22, "split");

    const labeled_dataset rs = resize_dataset(ds, 16, 16);
    REQUIRE(rs.size() == 2);
    CHECK(rs.labels == ds.labels);
    CHECK(rs.seeds == ds.seeds);
    CHECK(rs.filenames == ds.filenames);
    REQUIRE(rs.images[0].height == 16);
    REQUIRE(rs.images[0].width == 16);
    for (float v : rs.images[0].values) CHECK(v == Approx(0.25f).margin(1e-7));
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            CHECK(rs.images[1].at(y, x) ==
                  Approx(x < 8 ? 1.0f : 0.0f).margin(1e-7));
}

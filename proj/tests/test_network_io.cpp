#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gendl/layers.hpp"
#include "gendl/network.hpp"
#include "gendl/rng.hpp"

using namespace gendl;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
    const fs::path dir = fs::temp_directory_path() / "gendl_network_io_test";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    return std::string(std::istreambuf_iterator<char>(is),
                       std::istreambuf_iterator<char>());
}

void spit(const fs::path& p, const std::string& bytes) {
    std::ofstream os(p, std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    REQUIRE(os.good());
}

// One instance of every serializable layer kind. The shapes do not chain
// into a runnable network; this exercises serialization, not forward.
network<float> network_of_every_kind(rng& r) {
    network<float> net;
    net.emplace<dense<float>>(3, 4, weight_init::glorot, r);
    net.emplace<conv2d<float>>(2, 3, 3, 3, 2, 1, weight_init::he, r);
    net.emplace<conv2d_transpose<float>>(3, 2, 3, 3, 2, 1, weight_init::he, r);
    net.emplace<max_pool2d<float>>(2, 2);
    net.emplace<upsample_nearest<float>>(3);
    net.emplace<flatten<float>>();
    net.emplace<reshape<float>>(std::vector<int>{2, 6});
    net.emplace<relu<float>>();
    net.emplace<leaky_relu<float>>(0.2f);
    net.emplace<tanh_act<float>>();
    net.emplace<sigmoid<float>>();
    net.emplace<softmax<float>>();
    net.emplace<dropout<float>>(0.25f);
    auto& bn = net.emplace<batch_norm<float>>(5);
    net.emplace<scale_shift<float>>(0.5f, 0.5f);
    net.emplace<label_embed<float>>(4, 6, r);
    // Give the running stats non-default values so the round-trip proves
    // state (not just parameters) survives.
    for (int c = 0; c < 5; ++c) {
        bn.run_mean_.v[c] = 0.1f * static_cast<float>(c + 1);
        bn.run_var_.v[c] = 1.0f + 0.05f * static_cast<float>(c);
    }
    return net;
}

}  // namespace

TEST_CASE("checkpoints round-trip every layer kind with exact state") {
    rng r(31337);
    network<float> net = network_of_every_kind(r);
    const fs::path path = test_dir() / "every_kind.gdl1";
    save_checkpoint(path, net);

    network<float> loaded = load_checkpoint(path);
    REQUIRE(loaded.layers.size() == net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        INFO("layer " << i << ": " << net.layers[i]->name());
        CHECK(loaded.layers[i]->kind() == net.layers[i]->kind());
        CHECK(loaded.layers[i]->name() == net.layers[i]->name());
        CHECK(loaded.layers[i]->hypers() == net.layers[i]->hypers());
        const auto a = net.layers[i]->state();
        const auto b = loaded.layers[i]->state();
        REQUIRE(a.size() == b.size());
        for (std::size_t t = 0; t < a.size(); ++t) {
            REQUIRE(a[t]->shape == b[t]->shape);
            REQUIRE(a[t]->v == b[t]->v);  // bit-exact float round-trip
        }
    }

    // Serialization is canonical: re-saving the loaded network reproduces
    // the original file byte for byte.
    const fs::path resaved = test_dir() / "every_kind_resaved.gdl1";
    save_checkpoint(resaved, loaded);
    CHECK(slurp(path) == slurp(resaved));
}

TEST_CASE("a loaded classifier reproduces the saved network's outputs exactly") {
    rng r(99);
    network<float> net;
    net.emplace<conv2d<float>>(1, 4, 3, 3, 1, 0, weight_init::he, r);
    net.emplace<batch_norm<float>>(4);
    net.emplace<leaky_relu<float>>(0.2f);
    net.emplace<max_pool2d<float>>(2);
    net.emplace<flatten<float>>();
    net.emplace<dense<float>>(4 * 5 * 5, 3, weight_init::glorot, r);
    net.emplace<softmax<float>>();

    tensor<float> warm({8, 1, 12, 12});
    for (auto& v : warm.v) v = static_cast<float>(r.range(0.0, 1.0));
    (void)net.forward(warm, true);  // moves the batch-norm running stats

    tensor<float> x({2, 1, 12, 12});
    for (auto& v : x.v) v = static_cast<float>(r.range(0.0, 1.0));
    const tensor<float> y_before = net.forward(x, false);

    const fs::path path = test_dir() / "classifier.gdl1";
    save_checkpoint(path, net);
    network<float> loaded = load_checkpoint(path);
    const tensor<float> y_after = loaded.forward(x, false);

    REQUIRE(y_after.shape == y_before.shape);
    REQUIRE(y_after.v == y_before.v);
}

TEST_CASE("corrupt or unreadable checkpoints are rejected with clear errors") {
    rng r(7);
    network<float> net;
    net.emplace<dense<float>>(2, 2, weight_init::glorot, r);
    const fs::path good = test_dir() / "good.gdl1";
    save_checkpoint(good, net);
    const std::string bytes = slurp(good);

    SECTION("missing file") {
        CHECK_THROWS_WITH(load_checkpoint(test_dir() / "no_such.gdl1"),
                          Catch::Matchers::ContainsSubstring("cannot read"));
    }
    SECTION("bad magic") {
        std::string bad = bytes;
        bad[0] = 'X';
        const fs::path p = test_dir() / "bad_magic.gdl1";
        spit(p, bad);
        CHECK_THROWS_WITH(load_checkpoint(p),
                          Catch::Matchers::ContainsSubstring("bad magic"));
    }
    SECTION("unsupported version") {
        std::string bad = bytes;
        bad[4] = 2;  // version field lives right after the magic
        const fs::path p = test_dir() / "bad_version.gdl1";
        spit(p, bad);
        CHECK_THROWS_WITH(load_checkpoint(p),
                          Catch::Matchers::ContainsSubstring("version"));
    }
    SECTION("truncated file") {
        const fs::path p = test_dir() / "truncated.gdl1";
        spit(p, bytes.substr(0, bytes.size() / 2));
        CHECK_THROWS_WITH(load_checkpoint(p),
                          Catch::Matchers::ContainsSubstring("truncated"));
    }
    SECTION("unknown layer kind") {
        std::string bad = bytes;
        bad[12] = 99;  // first layer's kind tag
        const fs::path p = test_dir() / "bad_kind.gdl1";
        spit(p, bad);
        CHECK_THROWS_AS(load_checkpoint(p), std::runtime_error);
    }
    SECTION("unwritable destination") {
        CHECK_THROWS_WITH(
            save_checkpoint("/nonexistent_dir_gendl/x.gdl1", net),
            Catch::Matchers::ContainsSubstring("cannot write"));
    }
}

TEST_CASE("shape mismatches between header and tensors are rejected") {
    rng r(8);
    network<float> a;
    a.emplace<dense<float>>(3, 5, weight_init::glorot, r);
    const fs::path pa = test_dir() / "dense_3_5.gdl1";
    save_checkpoint(pa, a);

    // Forge the hypers to describe a different geometry than the stored
    // tensors: the loader must notice, not read garbage.
    std::string bytes = slurp(pa);
    // Layout: magic(4) version(4) count(4) kind(4) nhyper(4) h0(4) h1(4)...
    // h0 = in = 3.0f; change it to 4.0f.
    const float four = 4.0f;
    std::memcpy(bytes.data() + 20, &four, 4);
    const fs::path pb = test_dir() / "dense_forged.gdl1";
    spit(pb, bytes);
    CHECK_THROWS_WITH(load_checkpoint(pb),
                      Catch::Matchers::ContainsSubstring("shape mismatch"));
}

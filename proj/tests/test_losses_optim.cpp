#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>

#include "gendl/layers.hpp"
#include "gendl/losses.hpp"
#include "gendl/optim.hpp"
#include "gendl/rng.hpp"

using namespace gendl;

TEST_CASE("one-hot encoding is exact and validates labels") {
    tensor<float> t = one_hot<float>({2, 0, 1}, 3);
    REQUIRE(t.shape == std::vector<int>({3, 3}));
    CHECK(t.v == std::vector<float>({0, 0, 1, 1, 0, 0, 0, 1, 0}));
    CHECK_THROWS_AS(one_hot<float>({3}, 3), std::invalid_argument);
    CHECK_THROWS_AS(one_hot<float>({-1}, 3), std::invalid_argument);
}

TEST_CASE("cross-entropy of the uniform guess is the log class count") {
    // -log(1/6) = ln 6: a classifier that knows nothing scores exactly this.
    const int k = 6, n = 10;
    tensor<float> probs({n, k}, 1.0f / k);
    tensor<float> target = one_hot<float>(std::vector<int>(n, 3), k);
    CHECK(categorical_crossentropy(probs, target) ==
          Catch::Approx(std::log(6.0)).margin(1e-6));

    // A perfect one-hot prediction costs only the clip epsilon.
    CHECK(categorical_crossentropy(target, target) ==
          Catch::Approx(0.0).margin(1e-5));

    // Binary analogue: p = 0.5 everywhere costs ln 2 regardless of targets.
    tensor<float> half({8}, 0.5f);
    tensor<float> tgt({8});
    for (int i = 0; i < 8; ++i) tgt[i] = i % 2 ? 1.0f : 0.0f;
    CHECK(binary_crossentropy(half, tgt) ==
          Catch::Approx(std::log(2.0)).margin(1e-6));
}

TEST_CASE("softmax plus cross-entropy backward collapses to (p - t)/N") {
    rng r(77);
    const int n = 4, k = 5;
    tensor<float> logits({n, k});
    for (auto& v : logits.v) v = static_cast<float>(r.range(-2.0, 2.0));
    std::vector<int> labels = {1, 4, 0, 2};
    tensor<float> target = one_hot<float>(labels, k);

    softmax<float> sm;
    tensor<float> probs = sm.forward(logits, true);
    tensor<float> glogits = sm.backward(categorical_crossentropy_grad(probs, target));

    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j)
            CHECK(glogits.at2(i, j) ==
                  Catch::Approx((probs.at2(i, j) - target.at2(i, j)) / n)
                      .margin(1e-5));
}

TEST_CASE("binary cross-entropy gradient matches finite differences") {
    rng r(78);
    tensor<double> p({6});
    tensor<double> t({6});
    for (int i = 0; i < 6; ++i) {
        p[i] = r.range(0.05, 0.95);
        t[i] = i % 2 ? 1.0 : 0.0;
    }
    tensor<double> g = binary_crossentropy_grad(p, t);
    const double h = 1e-7;
    for (int i = 0; i < 6; ++i) {
        tensor<double> pp = p, pm = p;
        pp[i] += h;
        pm[i] -= h;
        const double num =
            (binary_crossentropy(pp, t) - binary_crossentropy(pm, t)) / (2 * h);
        CHECK(g[i] == Catch::Approx(num).epsilon(1e-5));
    }
}

TEST_CASE("loss functions reject mismatched shapes and saturate gracefully") {
    tensor<float> a({2, 3}, 0.5f);
    tensor<float> b({3, 2}, 0.5f);
    CHECK_THROWS_AS(categorical_crossentropy(a, b), std::invalid_argument);
    CHECK_THROWS_AS(binary_crossentropy(a, b), std::invalid_argument);

    // Exact zeros and ones stay finite thanks to probability clipping.
    tensor<float> p({4});
    p.v = {0.0f, 1.0f, 0.0f, 1.0f};
    tensor<float> t({4});
    t.v = {1.0f, 0.0f, 0.0f, 1.0f};
    CHECK(std::isfinite(binary_crossentropy(p, t)));
    tensor<float> g = binary_crossentropy_grad(p, t);
    for (int i = 0; i < 4; ++i) CHECK(std::isfinite(g[i]));
}

TEST_CASE("accuracy counts argmax agreements") {
    tensor<float> probs({3, 3});
    probs.v = {0.7f, 0.2f, 0.1f,   // -> 0
               0.1f, 0.3f, 0.6f,   // -> 2
               0.3f, 0.4f, 0.3f};  // -> 1
    CHECK(accuracy(probs, {0, 2, 1}) == Catch::Approx(1.0));
    CHECK(accuracy(probs, {0, 1, 1}) == Catch::Approx(2.0 / 3.0));
    CHECK(accuracy(probs, {1, 0, 2}) == Catch::Approx(0.0));
    CHECK_THROWS_AS(accuracy(probs, {0, 1}), std::invalid_argument);
}

TEST_CASE("adam with zero gradients leaves parameters untouched") {
    tensor<float> w({4}, 2.5f);
    tensor<float> g({4}, 0.0f);
    adam<float> opt(0.1f);
    opt.attach({&w});
    for (int i = 0; i < 5; ++i) opt.step({&g});
    for (int i = 0; i < 4; ++i) CHECK(w[i] == 2.5f);
}

TEST_CASE("the first adam step moves each weight by lr against the gradient sign") {
    // With bias correction, step one reduces to lr * sign(g) for any
    // gradient magnitude (up to the eps regularizer).
    tensor<float> w({3});
    w.v = {1.0f, -2.0f, 0.5f};
    tensor<float> g({3});
    g.v = {10.0f, -0.01f, 3.0f};
    adam<float> opt(0.05f);
    opt.attach({&w});
    opt.step({&g});
    CHECK(w[0] == Catch::Approx(1.0f - 0.05f).margin(1e-4));
    CHECK(w[1] == Catch::Approx(-2.0f + 0.05f).margin(1e-4));
    CHECK(w[2] == Catch::Approx(0.5f - 0.05f).margin(1e-4));
    CHECK(opt.steps() == 1);
}

TEST_CASE("adam minimizes a convex quadratic") {
    // f(w) = sum (w_i - target_i)^2 — a few hundred steps must get close.
    tensor<float> w({2});
    w.v = {4.0f, -3.0f};
    const float target[2] = {1.0f, 2.0f};
    adam<float> opt(0.05f);
    opt.attach({&w});
    tensor<float> g({2});
    for (int it = 0; it < 600; ++it) {
        for (int i = 0; i < 2; ++i) g[i] = 2.0f * (w[i] - target[i]);
        opt.step({&g});
    }
    CHECK(w[0] == Catch::Approx(1.0f).margin(1e-2));
    CHECK(w[1] == Catch::Approx(2.0f).margin(1e-2));
}

TEST_CASE("adam runs are deterministic") {
    auto run = []() {
        rng r(5);
        tensor<float> w({8});
        for (auto& v : w.v) v = static_cast<float>(r.range(-1.0, 1.0));
        adam<float> opt(0.01f);
        opt.attach({&w});
        tensor<float> g({8});
        for (int it = 0; it < 50; ++it) {
            for (int i = 0; i < 8; ++i) g[i] = w[i] * w[i] * w[i] - 0.2f * w[i];
            opt.step({&g});
        }
        return w.v;
    };
    CHECK(run() == run());
}

TEST_CASE("adam rejects malformed or non-finite gradients") {
    tensor<float> w({2}, 1.0f);
    adam<float> opt;
    opt.attach({&w});

    tensor<float> wrong({3}, 0.0f);
    CHECK_THROWS_AS(opt.step({&wrong}), std::invalid_argument);

    tensor<float> g({2}, 0.0f);
    tensor<float> extra({2}, 0.0f);
    CHECK_THROWS_AS(opt.step({&g, &extra}), std::invalid_argument);

    g[1] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(opt.step({&g}), std::runtime_error);
    g[1] = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(opt.step({&g}), std::runtime_error);
}

TEST_CASE("re-attaching resets optimizer moments") {
    tensor<float> w({1}, 0.0f);
    tensor<float> g({1}, 1.0f);
    adam<float> opt(0.1f);
    opt.attach({&w});
    opt.step({&g});
    const float after_one = w[0];

    // Re-attach and take one more unit-gradient step: the result must match
    // a fresh first step offset by where the weight already was.
    opt.attach({&w});
    CHECK(opt.steps() == 0);
    opt.step({&g});
    CHECK(w[0] == Catch::Approx(2.0f * after_one).margin(1e-6));
}

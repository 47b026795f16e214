#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "gendl/dataset.hpp"
#include "gendl/losses.hpp"
#include "gendl/network.hpp"
#include "gendl/optim.hpp"
#include "gendl/shapegen.hpp"

namespace gendl {

struct cnn_spec {
    int input_size = 100;
    int classes = 6;
    int conv1_filters = 30, conv1_kernel = 5;
    int conv2_filters = 15, conv2_kernel = 3;
    int dense_width = 128;
    float dropout_rate = 0.2f;
};

// conv(30,5x5) -> relu -> pool2 -> conv(15,3x3) -> relu -> pool2 -> flatten
// -> dense(128) -> relu -> dropout(0.2) -> dense(classes) -> softmax
inline network<float> build_cnn(const cnn_spec& spec, std::uint64_t seed) {
    rng r(derive_seed(seed, 0xC44ULL));
    auto after_conv_pool = [](int size, int kernel) { return (size - kernel + 1) / 2; };
    const int s1 = after_conv_pool(spec.input_size, spec.conv1_kernel);
    const int s2 = after_conv_pool(s1, spec.conv2_kernel);
    if (s2 < 1) throw std::invalid_argument("build_cnn: input too small for spec");
    const int flat = spec.conv2_filters * s2 * s2;

    network<float> net;
    net.emplace<conv2d<float>>(1, spec.conv1_filters, spec.conv1_kernel,
                               spec.conv1_kernel, 1, 0, weight_init::he, r);
    net.emplace<relu<float>>();
    net.emplace<max_pool2d<float>>(2);
    net.emplace<conv2d<float>>(spec.conv1_filters, spec.conv2_filters,
                               spec.conv2_kernel, spec.conv2_kernel, 1, 0,
                               weight_init::he, r);
    net.emplace<relu<float>>();
    net.emplace<max_pool2d<float>>(2);
    net.emplace<flatten<float>>();
    net.emplace<dense<float>>(flat, spec.dense_width, weight_init::he, r);
    net.emplace<relu<float>>();
    net.emplace<dropout<float>>(spec.dropout_rate, derive_seed(seed, 0xD40ULL));
    net.emplace<dense<float>>(spec.dense_width, spec.classes,
                              weight_init::glorot, r);
    net.emplace<softmax<float>>();
    return net;
}

struct train_config {
    int epochs = 10;
    int batch_size = 20;
    int split_train_parts = 3;  // 3:1 stratified train/validation split
    int split_val_parts = 1;
    std::uint64_t seed = 42;
    float lr = 1e-3f;
};

struct epoch_record {
    int epoch = 0;  // 1-based
    double train_acc = 0, train_loss = 0;
    double val_acc = 0, val_loss = 0;
};

struct train_history {
    std::vector<epoch_record> epochs;

    std::string csv() const {
        std::string out = "epoch,train_acc,train_loss,val_acc,val_loss\n";
        char buf[160];
        for (const auto& e : epochs) {
            std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f\n", e.epoch,
                          e.train_acc, e.train_loss, e.val_acc, e.val_loss);
            out += buf;
        }
        return out;
    }
};

inline tensor<float> batch_tensor(const std::vector<image_grid>& images,
                                  const std::vector<std::size_t>& order,
                                  std::size_t first, std::size_t count) {
    const int h = images[order[first]].height, w = images[order[first]].width;
    tensor<float> x({static_cast<int>(count), 1, h, w});
    float* dst = x.data();
    for (std::size_t i = 0; i < count; ++i) {
        const auto& img = images[order[first + i]];
        if (img.height != h || img.width != w)
            throw std::invalid_argument("batch_tensor: mixed image sizes");
        std::copy(img.values.begin(), img.values.end(),
                  dst + i * static_cast<std::size_t>(h) * w);
    }
    return x;
}

struct eval_report {
    double accuracy = 0;
    double mean_loss = 0;
    std::vector<std::vector<long long>> confusion;  // [true][pred]

    std::string confusion_csv(const std::vector<std::string>& names) const {
        std::string out = "true_label";
        for (const auto& n : names) out += ",pred_" + n;
        out += "\n";
        for (std::size_t i = 0; i < confusion.size(); ++i) {
            out += names[i];
            for (long long v : confusion[i]) out += "," + std::to_string(v);
            out += "\n";
        }
        return out;
    }
};

inline eval_report evaluate(network<float>& net,
                            const std::vector<image_grid>& images,
                            const std::vector<int>& labels, int classes,
                            int batch = 64) {
    if (images.empty()) throw std::invalid_argument("evaluate: empty dataset");
    eval_report rep;
    rep.confusion.assign(classes, std::vector<long long>(classes, 0));
    std::vector<std::size_t> order(images.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    double loss_sum = 0;
    long long hits = 0;
    for (std::size_t first = 0; first < images.size(); first += batch) {
        const std::size_t count = std::min<std::size_t>(batch, images.size() - first);
        const auto x = batch_tensor(images, order, first, count);
        std::vector<int> y(labels.begin() + first, labels.begin() + first + count);
        const auto probs = net.forward(x, false);
        loss_sum += categorical_crossentropy(probs, one_hot<float>(y, classes)) *
                    static_cast<double>(count);
        for (std::size_t i = 0; i < count; ++i) {
            const int pred = argmax_row(probs, static_cast<int>(i));
            rep.confusion[y[i]][pred] += 1;
            hits += pred == y[i];
        }
    }
    rep.accuracy = static_cast<double>(hits) / images.size();
    rep.mean_loss = loss_sum / images.size();
    return rep;
}

inline std::pair<int, std::vector<float>> predict(network<float>& net,
                                                  const image_grid& img) {
    tensor<float> x({1, 1, img.height, img.width});
    std::copy(img.values.begin(), img.values.end(), x.data());
    const auto probs = net.forward(x, false);
    std::vector<float> p(probs.v.begin(), probs.v.end());
    return {argmax_row(probs, 0), p};
}

struct train_result {
    network<float> net;
    train_history history;
    split_indices split;
    bool degenerate_split = false;  // fewer than 2 classes present
};

// Stratified 3:1 split, seeded per-epoch shuffling, Adam, and best-validation
// weight retention (by accuracy, ties to the earlier epoch).
inline train_result train_classifier(const labeled_dataset& ds,
                                     const train_config& cfg,
                                     const cnn_spec& spec = {}) {
    if (ds.size() == 0) throw std::invalid_argument("train_classifier: empty dataset");
    for (int l : ds.labels)
        if (l < 0 || l >= spec.classes)
            throw std::invalid_argument("train_classifier: label out of range");

    train_result res;
    res.split = stratified_split(ds.labels, spec.classes, cfg.split_train_parts,
                                 cfg.split_val_parts, derive_seed(cfg.seed, 0x51ULL));
    int class_seen = 0;
    for (int c = 0; c < spec.classes; ++c)
        class_seen += std::count(ds.labels.begin(), ds.labels.end(), c) > 0;
    res.degenerate_split = class_seen < 2;

    res.net = build_cnn(spec, cfg.seed);
    adam<float> opt(cfg.lr);
    opt.attach(res.net.params());

    std::vector<int> val_labels;
    std::vector<image_grid> val_imgs;
    for (auto i : res.split.val) {
        val_labels.push_back(ds.labels[i]);
        val_imgs.push_back(ds.images[i]);
    }

    double best_val_acc = -1.0;
    std::vector<tensor<float>> best_state;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<std::size_t> order = res.split.train;
        rng shuffle_rng(derive_seed(cfg.seed, 0xE000ULL + epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        double loss_sum = 0;
        long long hits = 0;
        for (std::size_t first = 0; first < order.size();
             first += cfg.batch_size) {
            const std::size_t count =
                std::min<std::size_t>(cfg.batch_size, order.size() - first);
            const auto x = batch_tensor(ds.images, order, first, count);
            std::vector<int> y;
            for (std::size_t i = 0; i < count; ++i)
                y.push_back(ds.labels[order[first + i]]);
            const auto target = one_hot<float>(y, spec.classes);
            const auto probs = res.net.forward(x, true);
            loss_sum += categorical_crossentropy(probs, target) *
                        static_cast<double>(count);
            for (std::size_t i = 0; i < count; ++i)
                hits += argmax_row(probs, static_cast<int>(i)) == y[i];
            res.net.zero_grad();
            res.net.backward(categorical_crossentropy_grad(probs, target));
            opt.step(res.net.grads());
        }

        epoch_record rec;
        rec.epoch = epoch;
        rec.train_acc = order.empty() ? 0.0 : static_cast<double>(hits) / order.size();
        rec.train_loss = order.empty() ? 0.0 : loss_sum / order.size();
        if (!res.split.val.empty()) {
            const auto val = evaluate(res.net, val_imgs, val_labels, spec.classes);
            rec.val_acc = val.accuracy;
            rec.val_loss = val.mean_loss;
        }
        res.history.epochs.push_back(rec);

        if (rec.val_acc > best_val_acc) {
            best_val_acc = rec.val_acc;
            best_state.clear();
            for (auto& l : res.net.layers)
                for (auto* t : l->state()) best_state.push_back(*t);
        }
    }

    if (!best_state.empty()) {
        std::size_t k = 0;
        for (auto& l : res.net.layers)
            for (auto* t : l->state()) *t = best_state[k++];
    }
    return res;
}

}  // namespace gendl

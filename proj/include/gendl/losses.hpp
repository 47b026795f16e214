#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gendl/tensor.hpp"

namespace gendl {

inline constexpr double k_prob_clip = 1e-7;

namespace detail {

template <typename T>
T clip_prob(T p) {
    const T lo = static_cast<T>(k_prob_clip), hi = T(1) - static_cast<T>(k_prob_clip);
    return p < lo ? lo : (p > hi ? hi : p);
}

template <typename T>
void require_same(const tensor<T>& a, const tensor<T>& b, const char* who) {
    if (a.shape != b.shape)
        throw std::invalid_argument(std::string(who) + ": shape mismatch " +
                                    shape_str(a.shape) + " vs " +
                                    shape_str(b.shape));
}

}  // namespace detail

template <typename T>
tensor<T> one_hot(const std::vector<int>& labels, int classes) {
    tensor<T> t({static_cast<int>(labels.size()), classes});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes)
            throw std::invalid_argument("one_hot: label out of range");
        t.at2(static_cast<int>(i), labels[i]) = T(1);
    }
    return t;
}

// Mean over batch rows of -sum_j target_j * log(prob_j), probs clipped to
// [1e-7, 1 - 1e-7].
template <typename T>
T categorical_crossentropy(const tensor<T>& probs, const tensor<T>& target) {
    detail::require_same(probs, target, "categorical_crossentropy");
    const int n = probs.dim(0), k = probs.dim(1);
    T loss = T(0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j)
            loss -= target.at2(i, j) *
                    std::log(detail::clip_prob(probs.at2(i, j)));
    return loss / static_cast<T>(n);
}

// d(mean loss)/d(probs); feeding this through a softmax layer's backward
// yields (probs - target) / N at the logits.
template <typename T>
tensor<T> categorical_crossentropy_grad(const tensor<T>& probs,
                                        const tensor<T>& target) {
    detail::require_same(probs, target, "categorical_crossentropy_grad");
    const int n = probs.dim(0), k = probs.dim(1);
    tensor<T> g(probs.shape);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j)
            g.at2(i, j) = -target.at2(i, j) /
                          detail::clip_prob(probs.at2(i, j)) / static_cast<T>(n);
    return g;
}

template <typename T>
T binary_crossentropy(const tensor<T>& p, const tensor<T>& target) {
    detail::require_same(p, target, "binary_crossentropy");
    T loss = T(0);
    for (int i = 0; i < p.size(); ++i) {
        const T q = detail::clip_prob(p[i]);
        loss -= target[i] * std::log(q) + (T(1) - target[i]) * std::log(T(1) - q);
    }
    return loss / static_cast<T>(p.size());
}

template <typename T>
tensor<T> binary_crossentropy_grad(const tensor<T>& p, const tensor<T>& target) {
    detail::require_same(p, target, "binary_crossentropy_grad");
    tensor<T> g(p.shape);
    const T n = static_cast<T>(p.size());
    for (int i = 0; i < p.size(); ++i) {
        const T q = detail::clip_prob(p[i]);
        g[i] = (q - target[i]) / (q * (T(1) - q)) / n;
    }
    return g;
}

template <typename T>
int argmax_row(const tensor<T>& t, int row) {
    const int k = t.dim(1);
    int best = 0;
    for (int j = 1; j < k; ++j)
        if (t.at2(row, j) > t.at2(row, best)) best = j;
    return best;
}

template <typename T>
double accuracy(const tensor<T>& probs, const std::vector<int>& labels) {
    if (static_cast<std::size_t>(probs.dim(0)) != labels.size())
        throw std::invalid_argument("accuracy: batch size mismatch");
    int hit = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (argmax_row(probs, static_cast<int>(i)) == labels[i]) ++hit;
    return labels.empty() ? 0.0 : static_cast<double>(hit) / labels.size();
}

}  // namespace gendl

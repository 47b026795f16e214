#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "gendl/layers.hpp"
#include "gendl/tensor.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace gendl {

template <typename T>
class network {
  public:
    std::vector<std::unique_ptr<layer<T>>> layers;

    network() = default;
    network(network&&) noexcept = default;
    network& operator=(network&&) noexcept = default;

    template <typename L, typename... Args>
    L& emplace(Args&&... args) {
        layers.push_back(std::make_unique<L>(std::forward<Args>(args)...));
        return static_cast<L&>(*layers.back());
    }

    tensor<T> forward(const tensor<T>& x, bool training = false) {
        tensor<T> a = x;
        for (auto& l : layers) a = l->forward(a, training);
        return a;
    }

    tensor<T> backward(const tensor<T>& gy) {
        tensor<T> g = gy;
        for (auto it = layers.rbegin(); it != layers.rend(); ++it)
            g = (*it)->backward(g);
        return g;
    }

    std::vector<tensor<T>*> params() {
        std::vector<tensor<T>*> out;
        for (auto& l : layers)
            for (auto* p : l->params()) out.push_back(p);
        return out;
    }

    std::vector<tensor<T>*> grads() {
        std::vector<tensor<T>*> out;
        for (auto& l : layers)
            for (auto* g : l->grads()) out.push_back(g);
        return out;
    }

    void zero_grad() {
        for (auto& l : layers) l->zero_grad();
    }

    std::string describe() const {
        std::string s;
        for (auto& l : layers) {
            if (!s.empty()) s += " -> ";
            s += l->name();
        }
        return s;
    }
};

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}

inline std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

inline void write_f32(std::ostream& os, float v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}

inline float read_f32(std::istream& is) {
    float v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

}  // namespace detail

inline constexpr char k_checkpoint_magic[4] = {'G', 'D', 'L', '1'};
inline constexpr std::uint32_t k_checkpoint_version = 1;

// Layout: magic "GDL1", u32 version, u32 layer count, then per layer
// u32 kind, u32 hyper count + f32 hypers, u32 tensor count, and per tensor
// u32 ndim + u32 dims + f32 values. Everything little-endian.
inline void save_checkpoint(const std::filesystem::path& path,
                            const std::vector<layer<float>*>& layers) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os.write(k_checkpoint_magic, 4);
    detail::write_u32(os, k_checkpoint_version);
    detail::write_u32(os, static_cast<std::uint32_t>(layers.size()));
    for (auto* l : layers) {
        detail::write_u32(os, static_cast<std::uint32_t>(l->kind()));
        const auto h = l->hypers();
        detail::write_u32(os, static_cast<std::uint32_t>(h.size()));
        for (float v : h) detail::write_f32(os, v);
        const auto st = l->state();
        detail::write_u32(os, static_cast<std::uint32_t>(st.size()));
        for (auto* t : st) {
            detail::write_u32(os, static_cast<std::uint32_t>(t->shape.size()));
            for (int d : t->shape)
                detail::write_u32(os, static_cast<std::uint32_t>(d));
            for (float v : t->v) detail::write_f32(os, v);
        }
    }
    if (!os) throw std::runtime_error("checkpoint: write failed " + path.string());
}

inline void save_checkpoint(const std::filesystem::path& path,
                            network<float>& net) {
    std::vector<layer<float>*> ls;
    ls.reserve(net.layers.size());
    for (auto& l : net.layers) ls.push_back(l.get());
    save_checkpoint(path, ls);
}

// Rebuilds a layer from its kind tag and hyperparameters; loaded state then
// overwrites the fresh initialization.
inline std::unique_ptr<layer<float>> make_layer(layer_kind kind,
                                                const std::vector<float>& h) {
    auto want = [&](std::size_t n) {
        if (h.size() != n)
            throw std::runtime_error("checkpoint: bad hyper count for kind " +
                                     std::to_string(static_cast<int>(kind)));
    };
    auto hi = [&](std::size_t i) { return static_cast<int>(h[i]); };
    rng r(0);  // placeholder init, replaced by loaded tensors
    switch (kind) {
        case layer_kind::dense:
            want(2);
            return std::make_unique<dense<float>>(hi(0), hi(1), weight_init::he, r);
        case layer_kind::conv2d:
            want(6);
            return std::make_unique<conv2d<float>>(hi(0), hi(1), hi(2), hi(3),
                                                   hi(4), hi(5),
                                                   weight_init::he, r);
        case layer_kind::conv2d_transpose:
            want(6);
            return std::make_unique<conv2d_transpose<float>>(
                hi(0), hi(1), hi(2), hi(3), hi(4), hi(5), weight_init::he, r);
        case layer_kind::max_pool2d:
            want(2);
            return std::make_unique<max_pool2d<float>>(hi(0), hi(1));
        case layer_kind::upsample_nearest:
            want(1);
            return std::make_unique<upsample_nearest<float>>(hi(0));
        case layer_kind::flatten:
            want(0);
            return std::make_unique<flatten<float>>();
        case layer_kind::reshape: {
            if (h.empty()) throw std::runtime_error("checkpoint: reshape hypers");
            std::vector<int> dims;
            for (std::size_t i = 1; i < h.size(); ++i) dims.push_back(hi(i));
            want(1 + dims.size());
            return std::make_unique<reshape<float>>(dims);
        }
        case layer_kind::relu:
            want(0);
            return std::make_unique<relu<float>>();
        case layer_kind::leaky_relu:
            want(1);
            return std::make_unique<leaky_relu<float>>(h[0]);
        case layer_kind::tanh_act:
            want(0);
            return std::make_unique<tanh_act<float>>();
        case layer_kind::sigmoid:
            want(0);
            return std::make_unique<sigmoid<float>>();
        case layer_kind::softmax:
            want(0);
            return std::make_unique<softmax<float>>();
        case layer_kind::dropout:
            want(1);
            return std::make_unique<dropout<float>>(h[0]);
        case layer_kind::batch_norm:
            want(3);
            return std::make_unique<batch_norm<float>>(hi(0), h[1], h[2]);
        case layer_kind::scale_shift:
            want(2);
            return std::make_unique<scale_shift<float>>(h[0], h[1]);
        case layer_kind::label_embed:
            want(2);
            return std::make_unique<label_embed<float>>(hi(0), hi(1));
    }
    throw std::runtime_error("checkpoint: unknown layer kind " +
                             std::to_string(static_cast<int>(kind)));
}

inline network<float> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, k_checkpoint_magic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path.string());
    if (detail::read_u32(is) != k_checkpoint_version)
        throw std::runtime_error("checkpoint: unsupported version in " +
                                 path.string());
    const std::uint32_t count = detail::read_u32(is);
    network<float> net;
    for (std::uint32_t li = 0; li < count; ++li) {
        const auto kind = static_cast<layer_kind>(detail::read_u32(is));
        std::vector<float> hypers(detail::read_u32(is));
        for (auto& v : hypers) v = detail::read_f32(is);
        auto lay = make_layer(kind, hypers);
        const std::uint32_t ntens = detail::read_u32(is);
        const auto st = lay->state();
        if (ntens != st.size())
            throw std::runtime_error("checkpoint: tensor count mismatch in layer " +
                                     std::to_string(li));
        for (auto* t : st) {
            std::vector<int> dims(detail::read_u32(is));
            for (auto& d : dims) d = static_cast<int>(detail::read_u32(is));
            if (dims != t->shape)
                throw std::runtime_error(
                    "checkpoint: shape mismatch in layer " + std::to_string(li) +
                    ": file " + shape_str(dims) + " vs layer " +
                    shape_str(t->shape));
            for (auto& v : t->v) v = detail::read_f32(is);
        }
        net.layers.push_back(std::move(lay));
    }
    return net;
}

}  // namespace gendl

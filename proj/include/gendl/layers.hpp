#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "gendl/rng.hpp"
#include "gendl/tensor.hpp"

namespace gendl {

// Stable tags used by the checkpoint format; append-only.
enum class layer_kind : std::uint32_t {
    dense = 1,
    conv2d = 2,
    conv2d_transpose = 3,
    max_pool2d = 4,
    upsample_nearest = 5,
    flatten = 6,
    reshape = 7,
    relu = 8,
    leaky_relu = 9,
    tanh_act = 10,
    sigmoid = 11,
    softmax = 12,
    dropout = 13,
    batch_norm = 14,
    scale_shift = 15,
    label_embed = 16,
};

enum class weight_init { he, glorot };

template <typename T>
void init_uniform(tensor<T>& w, weight_init kind, int fan_in, int fan_out,
                  rng& r) {
    const double limit = kind == weight_init::he
                             ? std::sqrt(6.0 / fan_in)
                             : std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& x : w.v) x = static_cast<T>(r.range(-limit, limit));
}

template <typename T>
class layer {
  public:
    virtual ~layer() = default;
    virtual layer_kind kind() const = 0;
    virtual std::string name() const = 0;
    // Constructor arguments, enough to rebuild the layer from a checkpoint.
    virtual std::vector<float> hypers() const { return {}; }
    virtual tensor<T> forward(const tensor<T>& x, bool training) = 0;
    virtual tensor<T> backward(const tensor<T>& gy) = 0;
    virtual std::vector<tensor<T>*> params() { return {}; }
    virtual std::vector<tensor<T>*> grads() { return {}; }
    // Everything persisted in checkpoints (params plus e.g. norm statistics).
    virtual std::vector<tensor<T>*> state() { return params(); }

    void zero_grad() {
        for (auto* g : grads()) g->fill(T(0));
    }

  protected:
    bool cached_ = false;
    void require_cache(const char* who) const {
        if (!cached_)
            throw std::logic_error(std::string(who) +
                                   ": backward called before forward");
    }
};

namespace detail {

// dst has shape [C*kh*kw, OH*OW]; out-of-bounds taps read as zero.
template <typename T>
void im2col(const T* src, int C, int H, int W, int kh, int kw, int stride,
            int pad, int OH, int OW, T* dst) {
    for (int c = 0; c < C; ++c) {
        const T* plane = src + static_cast<std::size_t>(c) * H * W;
        for (int ki = 0; ki < kh; ++ki) {
            for (int kj = 0; kj < kw; ++kj) {
                T* row = dst + (static_cast<std::size_t>(c) * kh * kw +
                                ki * kw + kj) *
                                   OH * OW;
                for (int oh = 0; oh < OH; ++oh) {
                    const int ih = oh * stride - pad + ki;
                    if (ih < 0 || ih >= H) {
                        for (int ow = 0; ow < OW; ++ow) row[oh * OW + ow] = T(0);
                        continue;
                    }
                    for (int ow = 0; ow < OW; ++ow) {
                        const int iw = ow * stride - pad + kj;
                        row[oh * OW + ow] =
                            (iw < 0 || iw >= W) ? T(0) : plane[ih * W + iw];
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: accumulates column entries back into the image.
template <typename T>
void col2im(const T* cols, int C, int H, int W, int kh, int kw, int stride,
            int pad, int OH, int OW, T* img) {
    for (int c = 0; c < C; ++c) {
        T* plane = img + static_cast<std::size_t>(c) * H * W;
        for (int ki = 0; ki < kh; ++ki) {
            for (int kj = 0; kj < kw; ++kj) {
                const T* row = cols + (static_cast<std::size_t>(c) * kh * kw +
                                       ki * kw + kj) *
                                          OH * OW;
                for (int oh = 0; oh < OH; ++oh) {
                    const int ih = oh * stride - pad + ki;
                    if (ih < 0 || ih >= H) continue;
                    for (int ow = 0; ow < OW; ++ow) {
                        const int iw = ow * stride - pad + kj;
                        if (iw >= 0 && iw < W)
                            plane[ih * W + iw] += row[oh * OW + ow];
                    }
                }
            }
        }
    }
}

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace detail

template <typename T>
class dense final : public layer<T> {
  public:
    dense(int in, int out, weight_init init, rng& r)
        : in_(in), out_(out), w_({out, in}), b_({out}), gw_({out, in}),
          gb_({out}) {
        init_uniform(w_, init, in, out, r);
    }

    layer_kind kind() const override { return layer_kind::dense; }
    std::string name() const override {
        return "dense(" + std::to_string(in_) + "->" + std::to_string(out_) + ")";
    }
    std::vector<float> hypers() const override {
        return {static_cast<float>(in_), static_cast<float>(out_)};
    }

    tensor<T> forward(const tensor<T>& x, bool) override {
        detail::require(x.ndim() == 2 && x.dim(1) == in_,
                        name() + ": bad input " + shape_str(x.shape));
        const int n = x.dim(0);
        tensor<T> y({n, out_});
        for (int i = 0; i < n; ++i)
            for (int o = 0; o < out_; ++o) y.at2(i, o) = b_[o];
        gemm_acc_nt(x.data(), w_.data(), y.data(), n, in_, out_);
        x_ = x;
        this->cached_ = true;
        return y;
    }

    tensor<T> backward(const tensor<T>& gy) override {
        this->require_cache("dense");
        const int n = x_.dim(0);
        detail::require(gy.ndim() == 2 && gy.dim(0) == n && gy.dim(1) == out_,
                        name() + ": bad grad " + shape_str(gy.shape));
        gemm_acc_tn(gy.data(), x_.data(), gw_.data(), out_, n, in_);
        for (int i = 0; i < n; ++i)
            for (int o = 0; o < out_; ++o) gb_[o] += gy.at2(i, o);
        tensor<T> gx({n, in_});
        gemm_acc_nn(gy.data(), w_.data(), gx.data(), n, out_, in_);
        return gx;
    }

    std::vector<tensor<T>*> params() override { return {&w_, &b_}; }
    std::vector<tensor<T>*> grads() override { return {&gw_, &gb_}; }

    int in_, out_;
    tensor<T> w_, b_, gw_, gb_;

  private:
    tensor<T> x_;
};

template <typename T>
class conv2d final : public layer<T> {
  public:
    conv2d(int in_ch, int filters, int kh, int kw, int stride, int pad,
           weight_init init, rng& r)
        : c_(in_ch), f_(filters), kh_(kh), kw_(kw), stride_(stride), pad_(pad),
          k_({filters, in_ch, kh, kw}), b_({filters}),
          gk_({filters, in_ch, kh, kw}), gb_({filters}) {
        detail::require(stride >= 1 && pad >= 0 && kh >= 1 && kw >= 1,
                        "conv2d: bad geometry");
        init_uniform(k_, init, in_ch * kh * kw, filters * kh * kw, r);
    }

    layer_kind kind() const override { return layer_kind::conv2d; }
    std::string name() const override {
        return "conv2d(" + std::to_string(c_) + "->" + std::to_string(f_) + "," +
               std::to_string(kh_) + "x" + std::to_string(kw_) + ",s" +
               std::to_string(stride_) + ",p" + std::to_string(pad_) + ")";
    }
    std::vector<float> hypers() const override {
        return {static_cast<float>(c_),  static_cast<float>(f_),
                static_cast<float>(kh_), static_cast<float>(kw_),
                static_cast<float>(stride_), static_cast<float>(pad_)};
    }

    tensor<T> forward(const tensor<T>& x, bool) override {
        detail::require(x.ndim() == 4 && x.dim(1) == c_,
                        name() + ": bad input " + shape_str(x.shape));
        const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
        detail::require(h + 2 * pad_ >= kh_ && w + 2 * pad_ >= kw_,
                        name() + ": kernel larger than padded input " +
                            shape_str(x.shape));
        const int oh = (h + 2 * pad_ - kh_) / stride_ + 1;
        const int ow = (w + 2 * pad_ - kw_) / stride_ + 1;
        const int ck = c_ * kh_ * kw_, p = oh * ow;
        tensor<T> y({n, f_, oh, ow});
        cols_.assign(static_cast<std::size_t>(ck) * p, T(0));
        for (int i = 0; i < n; ++i) {
            detail::im2col(&x.at4(i, 0, 0, 0), c_, h, w, kh_, kw_, stride_,
                           pad_, oh, ow, cols_.data());
            T* yi = &y.at4(i, 0, 0, 0);
            for (int f = 0; f < f_; ++f)
                for (int q = 0; q < p; ++q)
                    yi[static_cast<std::size_t>(f) * p + q] = b_[f];
            gemm_acc_nn(k_.data(), cols_.data(), yi, f_, ck, p);
        }
        x_ = x;
        oh_ = oh;
        ow_ = ow;
        this->cached_ = true;
        return y;
    }

    tensor<T> backward(const tensor<T>& gy) override {
        this->require_cache("conv2d");
        const int n = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
        detail::require(gy.shape == std::vector<int>({n, f_, oh_, ow_}),
                        name() + ": bad grad " + shape_str(gy.shape));
        const int ck = c_ * kh_ * kw_, p = oh_ * ow_;
        tensor<T> gx({n, c_, h, w});
        std::vector<T> gcols(static_cast<std::size_t>(ck) * p);
        for (int i = 0; i < n; ++i) {
            detail::im2col(&x_.at4(i, 0, 0, 0), c_, h, w, kh_, kw_, stride_,
                           pad_, oh_, ow_, cols_.data());
            const T* gyi = &gy.at4(i, 0, 0, 0);
            gemm_acc_nt(gyi, cols_.data(), gk_.data(), f_, p, ck);
            for (int f = 0; f < f_; ++f) {
                T s = T(0);
                for (int q = 0; q < p; ++q)
                    s += gyi[static_cast<std::size_t>(f) * p + q];
                gb_[f] += s;
            }
            std::fill(gcols.begin(), gcols.end(), T(0));
            gemm_acc_tn(k_.data(), gyi, gcols.data(), ck, f_, p);
            detail::col2im(gcols.data(), c_, h, w, kh_, kw_, stride_, pad_,
                           oh_, ow_, &gx.at4(i, 0, 0, 0));
        }
        return gx;
    }

    std::vector<tensor<T>*> params() override { return {&k_, &b_}; }
    std::vector<tensor<T>*> grads() override { return {&gk_, &gb_}; }

    int c_, f_, kh_, kw_, stride_, pad_;
    tensor<T> k_, b_, gk_, gb_;

  private:
    tensor<T> x_;
    std::vector<T> cols_;
    int oh_ = 0, ow_ = 0;
};

// Fractionally-strided convolution; kernel layout [C_in, F, kh, kw].
// Output H = (H_in - 1) * stride - 2 * pad + kh.
template <typename T>
class conv2d_transpose final : public layer<T> {
  public:
    conv2d_transpose(int in_ch, int filters, int kh, int kw, int stride,
                     int pad, weight_init init, rng& r)
        : c_(in_ch), f_(filters), kh_(kh), kw_(kw), stride_(stride), pad_(pad),
          k_({in_ch, filters, kh, kw}), b_({filters}),
          gk_({in_ch, filters, kh, kw}), gb_({filters}) {
        detail::require(stride >= 1 && pad >= 0, "conv2d_transpose: bad geometry");
        init_uniform(k_, init, in_ch * kh * kw, filters * kh * kw, r);
    }

    layer_kind kind() const override { return layer_kind::conv2d_transpose; }
    std::string name() const override {
        return "conv2d_transpose(" + std::to_string(c_) + "->" +
               std::to_string(f_) + "," + std::to_string(kh_) + "x" +
               std::to_string(kw_) + ",s" + std::to_string(stride_) + ",p" +
               std::to_string(pad_) + ")";
    }
    std::vector<float> hypers() const override {
        return {static_cast<float>(c_),  static_cast<float>(f_),
                static_cast<float>(kh_), static_cast<float>(kw_),
                static_cast<float>(stride_), static_cast<float>(pad_)};
    }

    tensor<T> forward(const tensor<T>& x, bool) override {
        detail::require(x.ndim() == 4 && x.dim(1) == c_,
                        name() + ": bad input " + shape_str(x.shape));
        const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
        const int oh = (h - 1) * stride_ - 2 * pad_ + kh_;
        const int ow = (w - 1) * stride_ - 2 * pad_ + kw_;
        detail::require(oh >= 1 && ow >= 1,
                        name() + ": empty output for " + shape_str(x.shape));
        const int fk = f_ * kh_ * kw_, p = h * w;
        tensor<T> y({n, f_, oh, ow});
        std::vector<T> cols(static_cast<std::size_t>(fk) * p);
        for (int i = 0; i < n; ++i) {
            std::fill(cols.begin(), cols.end(), T(0));
            gemm_acc_tn(k_.data(), &x.at4(i, 0, 0, 0), cols.data(), fk, c_, p);
            detail::col2im(cols.data(), f_, oh, ow, kh_, kw_, stride_, pad_, h,
                           w, &y.at4(i, 0, 0, 0));
            T* yi = &y.at4(i, 0, 0, 0);
            for (int f = 0; f < f_; ++f)
                for (int q = 0; q < oh * ow; ++q)
                    yi[static_cast<std::size_t>(f) * oh * ow + q] += b_[f];
        }
        x_ = x;
        oh_ = oh;
        ow_ = ow;
        this->cached_ = true;
        return y;
    }

    tensor<T> backward(const tensor<T>& gy) override {
        this->require_cache("conv2d_transpose");
        const int n = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
        detail::require(gy.shape == std::vector<int>({n, f_, oh_, ow_}),
                        name() + ": bad grad " + shape_str(gy.shape));
        const int fk = f_ * kh_ * kw_, p = h * w;
        tensor<T> gx({n, c_, h, w});
        std::vector<T> cols(static_cast<std::size_t>(fk) * p);
        for (int i = 0; i < n; ++i) {
            const T* gyi = &gy.at4(i, 0, 0, 0);
            detail::im2col(gyi, f_, oh_, ow_, kh_, kw_, stride_, pad_, h, w,
                           cols.data());
            gemm_acc_nn(k_.data(), cols.data(), &gx.at4(i, 0, 0, 0), c_, fk, p);
            gemm_acc_nt(&x_.at4(i, 0, 0, 0), cols.data(), gk_.data(), c_, p, fk);
            for (int f = 0; f < f_; ++f) {
                T s = T(0);
                for (int q = 0; q < oh_ * ow_; ++q)
                    s += gyi[static_cast<std::size_t>(f) * oh_ * ow_ + q];
                gb_[f] += s;
            }
        }
        return gx;
    }

    std::vector<tensor<T>*> params() override { return {&k_, &b_}; }
    std::vector<tensor<T>*> grads() override { return {&gk_, &gb_}; }

    int c_, f_, kh_, kw_, stride_, pad_;
    tensor<T> k_, b_, gk_, gb_;

  private:
    tensor<T> x_;
    int oh_ = 0, ow_ = 0;
};

template <typename T>
class max_pool2d final : public layer<T> {
  public:
    explicit max_pool2d(int window, int stride = 0)
        : k_(window), stride_(stride > 0 ? stride : window) {
        detail::require(k_ >= 1 && stride_ >= 1, "max_pool2d: bad geometry");
    }

    layer_kind kind() const override { return layer_kind::max_pool2d; }
    std::string name() const override {
        return "max_pool2d(" + std::to_string(k_) + ",s" +
               std::to_string(stride_) + ")";
    }
    std::vector<float> hypers() const override {
        return {static_cast<float>(k_), static_cast<float>(stride_)};
    }

    tensor<T> forward(const tensor<T>& x, bool) override {
        detail::require(x.ndim() == 4 && x.dim(2) >= k_ && x.dim(3) >= k_,
                        name() + ": bad input " + shape_str(x.shape));
        const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        const int oh = (h - k_) / stride_ + 1, ow = (w - k_) / stride_ + 1;
        tensor<T> y({n, c, oh, ow});
        in_shape_ = x.shape;
        arg_.assign(y.v.size(), 0);
        std::size_t o = 0;
        for (int i = 0; i < n; ++i)
            for (int cc = 0; cc < c; ++cc) {
                const T* plane = &x.at4(i, cc, 0, 0);
                const std::size_t base =
                    (static_cast<std::size_t>(i) * c + cc) * h * w;
                for (int ph = 0; ph < oh; ++ph)
                    for (int pw = 0; pw < ow; ++pw, ++o) {
                        int bi = ph * stride_, bj = pw * stride_;
                        T best = plane[bi * w + bj];
                        int br = bi, bc = bj;
                        for (int di = 0; di < k_; ++di)
                            for (int dj = 0; dj < k_; ++dj) {
                                const T val = plane[(bi + di) * w + (bj + dj)];
                                if (val > best) {
                                    best = val;
                                    br = bi + di;
                                    bc = bj + dj;
                                }
                            }
                        y.v[o] = best;
                        arg_[o] = base + static_cast<std::size_t>(br) * w + bc;
                    }
            }
        this->cached_ = true;
        return y;
    }

    tensor<T> backward(const tensor<T>& gy) override {
        this->require_cache("max_pool2d");
        detail::require(gy.v.size() == arg_.size(),
                        name() + ": bad grad " + shape_str(gy.shape));
        tensor<T> gx(in_shape_);
        for (std::size_t o = 0; o < arg_.size(); ++o) gx.v[arg_[o]] += gy.v[o];
        return gx;
    }

    int k_, stride_;

  private:
    std::vector<int> in_shape_;
    std::vector<std::size_t> arg_;
};

template <typename T>
class upsample_nearest final : public layer<T> {
  public:
    explicit upsample_nearest(int factor) : k_(factor) {
        detail::require(k_ >= 1, "upsample_nearest: factor < 1");
    }

    layer_kind kind() const override { return layer_kind::upsample_nearest; }
    std::string name() const override {
        return "upsample_nearest(" + std::to_string(k_) + ")";
    }
    std::vector<float> hypers() const override {
        return {static_cast<float>(k_)};
    }

    tensor<T> forward(const tensor<T>& x, bool) override {
        detail::require(x.ndim() == 4, name() + ": bad input " + shape_str(x.shape));
        const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        tensor<T> y({n, c, h * k_, w * k_});
        for (int i = 0; i < n; ++i)
            for (int cc = 0; cc < c; ++cc)
                for (int yh = 0; yh < h * k_; ++yh)
                    for (int yw = 0; yw < w * k_; ++yw)
                        y.at4(i, cc, yh, yw) = x.at4(i, cc, yh / k_, yw / k_);
        in_shape_ = x.shape;
        this->cached_ = true;
        return y;
    }

    tensor<T> backward(const tensor<T>& gy) override {
        this->require_cache("upsample_nearest");
        const int n = in_shape_[0], c = in_shape_[1], h = in_shape_[2],
                  w = in_shape_[3];
        detail::require(gy.shape == std::vector<int>({n, c, h * k_, w * k_}),
                        name() + ": bad grad " + shape_str(gy.shape));
        tensor<T> gx(in_shape_);
        for (int i = 0; i < n; ++i)
            for (int cc = 0; cc < c; ++cc)
                for (int yh = 0; yh < h * k_; ++yh)
                    for (int yw = 0; yw < w * k_; ++yw)
                        gx.at4(i, cc, yh / k_, yw / k_) += gy.at4(i, cc, yh, yw);
        return gx;
    }

    int k_;

  private:
    std::vector<int> in_shape_;
};

template <typename T>
class flatten final : public layer<T> {
  public:
    layer_kind kind() const override { return layer_kind::flatten; }
    std::string name() const override { return "flatten"; }

    tensor<T> forward(const tensor<T>& x, bool) override {
        detail::require(x.ndim() >= 2, "flatten: bad input " + shape_str(x.shape));
        in_shape_ = x.shape;
        tensor<T> y;
        y.shape = {x.dim(0), static_cast<int>(x.v.size()) / x.dim(0)};
        y.v = x.v;
        this->cached_ = true;
        return y;
    }

    tensor<T> backward(const tensor<T>& gy) override {
        this->require_cache("flatten");
        tensor<T> gx;
        gx.shape = in_shape_;
        gx.v = gy.v;
        return gx;
    }

  private:
    std::vector<int> in_shape_;
};

// Reshapes the non-batch dimensions to a fixed target.
template <typename T>
class reshape final : public layer<T> {
  public:
    explicit reshape(std::vector<int> dims) : dims_(std::move(dims)) {
        detail::require(!dims_.empty(), "reshape: empty target");
    }

    layer_kind kind() const override { return layer_kind::reshape; }
    std::string name() const override { return "reshape" + shape_str(dims_); }
    std::vector<float> hypers() const override {
        std::vector<float> h{static_cast<float>(dims_.size())};
        for (int d : dims_) h.push_back(static_cast<float>(d));
        return h;
    }

    tensor<T> forward(const tensor<T>& x, bool) override {
        long long want = 1;
        for (int d : dims_) want *= d;
        detail::require(x.ndim() >= 1 &&
                            static_cast<long long>(x.v.size()) ==
                                want * x.dim(0),
                        name() + ": cannot reshape " + shape_str(x.shape));
        in_shape_ = x.shape;
        tensor<T> y;
        y.shape = {x.dim(0)};
        y.shape.insert(y.shape.end(), dims_.begin(), dims_.end());
        y.v = x.v;
        this->cached_ = true;
        return y;
    }

    tensor<T> backward(const tensor<T>& gy) override {
        this->require_cache("reshape");
        tensor<T> gx;
        gx.shape = in_shape_;
        gx.v = gy.v;
        return gx;
    }

    std::vector<int> dims_;

  private:
    std::vector<int> in_shape_;
};

template <typename T>
class relu final : public layer<T> {
  public:
    layer_kind kind() const override { return layer_kind::relu; }
    std::string name() const override { return "relu"; }

    tensor<T> forward(const tensor<T>& x, bool) override {
        x_ = x;
        tensor<T> y = x;
        for (auto& v : y.v) v = v > T(0) ? v : T(0);
        this->cached_ = true;
        return y;
    }

    tensor<T> backward(const tensor<T>& gy) override {
        this->require_cache("relu");
        tensor<T> gx = gy;
        for (std::size_t i = 0; i < gx.v.size(); ++i)
            if (x_.v[i] <= T(0)) gx.v[i] = T(0);
        return gx;
    }

  private:
    tensor<T> x_;
};

template <typename T>
class leaky_relu final : public layer<T> {
  public:
    explicit leaky_relu(T alpha = T(0.2)) : alpha_(alpha) {}

    layer_kind kind() const override { return layer_kind::leaky_relu; }
    std::string name() const override { return "leaky_relu"; }
    std::vector<float> hypers() const override {
        return {static_cast<float>(alpha_)};
    }

    tensor<T> forward(const tensor<T>& x, bool) override {
        x_ = x;
        tensor<T> y = x;
        for (auto& v : y.v) v = v > T(0) ? v : alpha_ * v;
        this->cached_ = true;
        return y;
    }

    tensor<T> backward(const tensor<T>& gy) override {
        this->require_cache("leaky_relu");
        tensor<T> gx = gy;
        for (std::size_t i = 0; i < gx.v.size(); ++i)
            if (x_.v[i] <= T(0)) gx.v[i] *= alpha_;
        return gx;
    }

    T alpha_;

  private:
    tensor<T> x_;
};

template <typename T>
class tanh_act final : public layer<T> {
  public:
    layer_kind kind() const override { return layer_kind::tanh_act; }
    std::string name() const override { return "tanh"; }

    tensor<T> forward(const tensor<T>& x, bool) override {
        y_ = x;
        for (auto& v : y_.v) v = std::tanh(v);
        this->cached_ = true;
        return y_;
    }

    tensor<T> backward(const tensor<T>& gy) override {
        this->require_cache("tanh");
        tensor<T> gx = gy;
        for (std::size_t i = 0; i < gx.v.size(); ++i)
            gx.v[i] *= T(1) - y_.v[i] * y_.v[i];
        return gx;
    }

  private:
    tensor<T> y_;
};

template <typename T>
class sigmoid final : public layer<T> {
  public:
    layer_kind kind() const override { return layer_kind::sigmoid; }
    std::string name() const override { return "sigmoid"; }

    tensor<T> forward(const tensor<T>& x, bool) override {
        y_ = x;
        for (auto& v : y_.v) v = T(1) / (T(1) + std::exp(-v));
        this->cached_ = true;
        return y_;
    }

    tensor<T> backward(const tensor<T>& gy) override {
        this->require_cache("sigmoid");
        tensor<T> gx = gy;
        for (std::size_t i = 0; i < gx.v.size(); ++i)
            gx.v[i] *= y_.v[i] * (T(1) - y_.v[i]);
        return gx;
    }

  private:
    tensor<T> y_;
};

// Softmax over the last dimension.
template <typename T>
class softmax final : public layer<T> {
  public:
    layer_kind kind() const override { return layer_kind::softmax; }
    std::string name() const override { return "softmax"; }

    tensor<T> forward(const tensor<T>& x, bool) override {
        detail::require(x.ndim() >= 1, "softmax: empty input");
        const int k = x.shape.back();
        const int rows = static_cast<int>(x.v.size()) / k;
        y_ = x;
        for (int r = 0; r < rows; ++r) {
            T* row = y_.data() + static_cast<std::size_t>(r) * k;
            T mx = row[0];
            for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
            T sum = T(0);
            for (int j = 0; j < k; ++j) {
                row[j] = std::exp(row[j] - mx);
                sum += row[j];
            }
            for (int j = 0; j < k; ++j) row[j] /= sum;
        }
        this->cached_ = true;
        return y_;
    }

    tensor<T> backward(const tensor<T>& gy) override {
        this->require_cache("softmax");
        const int k = y_.shape.back();
        const int rows = static_cast<int>(y_.v.size()) / k;
        tensor<T> gx = gy;
        for (int r = 0; r < rows; ++r) {
            const T* yrow = y_.data() + static_cast<std::size_t>(r) * k;
            T* grow = gx.data() + static_cast<std::size_t>(r) * k;
            T dot = T(0);
            for (int j = 0; j < k; ++j) dot += grow[j] * yrow[j];
            for (int j = 0; j < k; ++j) grow[j] = yrow[j] * (grow[j] - dot);
        }
        return gx;
    }

  private:
    tensor<T> y_;
};

// Inverted dropout: kept units are scaled by 1/(1-rate) during training;
// inference is the identity.
template <typename T>
class dropout final : public layer<T> {
  public:
    explicit dropout(T rate, std::uint64_t seed = 0x64726f70ULL)
        : rate_(rate), rng_(seed) {
        detail::require(rate >= T(0) && rate < T(1), "dropout: rate outside [0,1)");
    }

    layer_kind kind() const override { return layer_kind::dropout; }
    std::string name() const override { return "dropout"; }
    std::vector<float> hypers() const override {
        return {static_cast<float>(rate_)};
    }

    tensor<T> forward(const tensor<T>& x, bool training) override {
        tensor<T> y = x;
        if (training && rate_ > T(0)) {
            mask_.assign(x.v.size(), T(0));
            const T keep = T(1) - rate_;
            for (std::size_t i = 0; i < x.v.size(); ++i) {
                if (static_cast<T>(rng_.unit()) >= rate_) mask_[i] = T(1) / keep;
                y.v[i] *= mask_[i];
            }
        } else {
            mask_.assign(x.v.size(), T(1));
        }
        this->cached_ = true;
        return y;
    }

    tensor<T> backward(const tensor<T>& gy) override {
        this->require_cache("dropout");
        detail::require(gy.v.size() == mask_.size(),
                        "dropout: bad grad " + shape_str(gy.shape));
        tensor<T> gx = gy;
        for (std::size_t i = 0; i < gx.v.size(); ++i) gx.v[i] *= mask_[i];
        return gx;
    }

    T rate_;

  private:
    rng rng_;
    std::vector<T> mask_;
};

// Per-channel normalization for 4D input (over N,H,W), per-feature for 2D
// (over N). Biased variance throughout; running stats updated with fixed
// momentum during training and used verbatim at inference.
template <typename T>
class batch_norm final : public layer<T> {
  public:
    explicit batch_norm(int features, T momentum = T(0.9), T eps = T(1e-5))
        : c_(features), momentum_(momentum), eps_(eps), gamma_({features}, T(1)),
          beta_({features}), run_mean_({features}), run_var_({features}, T(1)),
          ggamma_({features}), gbeta_({features}) {}

    layer_kind kind() const override { return layer_kind::batch_norm; }
    std::string name() const override {
        return "batch_norm(" + std::to_string(c_) + ")";
    }
    std::vector<float> hypers() const override {
        return {static_cast<float>(c_), static_cast<float>(momentum_),
                static_cast<float>(eps_)};
    }

    tensor<T> forward(const tensor<T>& x, bool training) override {
        detail::require((x.ndim() == 2 || x.ndim() == 4) && x.dim(1) == c_,
                        name() + ": bad input " + shape_str(x.shape));
        const int n = x.dim(0);
        const int sp = x.ndim() == 4 ? x.dim(2) * x.dim(3) : 1;
        const long long m = static_cast<long long>(n) * sp;
        training_ = training;
        tensor<T> y = x;
        xhat_ = x;
        inv_std_.assign(static_cast<std::size_t>(c_), T(0));
        for (int c = 0; c < c_; ++c) {
            T mean, var;
            if (training) {
                T s = T(0);
                for (int i = 0; i < n; ++i) {
                    const T* p = channel(x, i, c, sp);
                    for (int q = 0; q < sp; ++q) s += p[q];
                }
                mean = s / static_cast<T>(m);
                T s2 = T(0);
                for (int i = 0; i < n; ++i) {
                    const T* p = channel(x, i, c, sp);
                    for (int q = 0; q < sp; ++q) {
                        const T d = p[q] - mean;
                        s2 += d * d;
                    }
                }
                var = s2 / static_cast<T>(m);
                run_mean_[c] = momentum_ * run_mean_[c] + (T(1) - momentum_) * mean;
                run_var_[c] = momentum_ * run_var_[c] + (T(1) - momentum_) * var;
            } else {
                mean = run_mean_[c];
                var = run_var_[c];
            }
            const T istd = T(1) / std::sqrt(var + eps_);
            inv_std_[static_cast<std::size_t>(c)] = istd;
            for (int i = 0; i < n; ++i) {
                const T* p = channel(x, i, c, sp);
                T* xh = const_cast<T*>(channel(xhat_, i, c, sp));
                T* yp = const_cast<T*>(channel(y, i, c, sp));
                for (int q = 0; q < sp; ++q) {
                    xh[q] = (p[q] - mean) * istd;
                    yp[q] = gamma_[c] * xh[q] + beta_[c];
                }
            }
        }
        this->cached_ = true;
        return y;
    }

    tensor<T> backward(const tensor<T>& gy) override {
        this->require_cache("batch_norm");
        detail::require(gy.shape == xhat_.shape,
                        name() + ": bad grad " + shape_str(gy.shape));
        const int n = gy.dim(0);
        const int sp = gy.ndim() == 4 ? gy.dim(2) * gy.dim(3) : 1;
        const T m = static_cast<T>(static_cast<long long>(n) * sp);
        tensor<T> gx = gy;
        for (int c = 0; c < c_; ++c) {
            T sum_gy = T(0), sum_gy_xh = T(0);
            for (int i = 0; i < n; ++i) {
                const T* g = channel(gy, i, c, sp);
                const T* xh = channel(xhat_, i, c, sp);
                for (int q = 0; q < sp; ++q) {
                    sum_gy += g[q];
                    sum_gy_xh += g[q] * xh[q];
                }
            }
            ggamma_[c] += sum_gy_xh;
            gbeta_[c] += sum_gy;
            const T istd = inv_std_[static_cast<std::size_t>(c)];
            for (int i = 0; i < n; ++i) {
                const T* g = channel(gy, i, c, sp);
                const T* xh = channel(xhat_, i, c, sp);
                T* out = const_cast<T*>(channel(gx, i, c, sp));
                if (training_) {
                    for (int q = 0; q < sp; ++q)
                        out[q] = gamma_[c] * istd *
                                 (g[q] - sum_gy / m - xh[q] * sum_gy_xh / m);
                } else {
                    for (int q = 0; q < sp; ++q) out[q] = gamma_[c] * istd * g[q];
                }
            }
        }
        return gx;
    }

    std::vector<tensor<T>*> params() override { return {&gamma_, &beta_}; }
    std::vector<tensor<T>*> grads() override { return {&ggamma_, &gbeta_}; }
    std::vector<tensor<T>*> state() override {
        return {&gamma_, &beta_, &run_mean_, &run_var_};
    }

    int c_;
    T momentum_, eps_;
    tensor<T> gamma_, beta_, run_mean_, run_var_, ggamma_, gbeta_;

  private:
    static const T* channel(const tensor<T>& t, int i, int c, int sp) {
        return t.data() + (static_cast<std::size_t>(i) * t.dim(1) + c) * sp;
    }

    tensor<T> xhat_;
    std::vector<T> inv_std_;
    bool training_ = true;
};

// Fixed affine map y = a*x + b with no trainable parameters; used to move
// tanh output into [0,1].
template <typename T>
class scale_shift final : public layer<T> {
  public:
    scale_shift(T a, T b) : a_(a), b_(b) {}

    layer_kind kind() const override { return layer_kind::scale_shift; }
    std::string name() const override { return "scale_shift"; }
    std::vector<float> hypers() const override {
        return {static_cast<float>(a_), static_cast<float>(b_)};
    }

    tensor<T> forward(const tensor<T>& x, bool) override {
        tensor<T> y = x;
        for (auto& v : y.v) v = a_ * v + b_;
        this->cached_ = true;
        return y;
    }

    tensor<T> backward(const tensor<T>& gy) override {
        this->require_cache("scale_shift");
        tensor<T> gx = gy;
        for (auto& v : gx.v) v *= a_;
        return gx;
    }

    T a_, b_;
};

// Multiplicative class conditioning for generator inputs.  Holds one learned
// embedding row per class; forward() scales each latent row by the embedding
// of its label.  Labels arrive through set_labels() before forward, which
// keeps the layer stateless from the network's point of view and lets
// conditioned generators round-trip through ordinary checkpoints.
template <typename T>
class label_embed final : public layer<T> {
  public:
    label_embed(int classes, int dim)
        : classes_(classes), dim_(dim), emb_({classes, dim}, T(1)), gemb_(emb_.shape) {
        if (classes <= 0 || dim <= 0) throw std::invalid_argument("label_embed: classes and dim must be positive");
    }

    label_embed(int classes, int dim, rng& r) : label_embed(classes, dim) {
        for (auto& v : emb_.v) v = static_cast<T>(r.range(0.8, 1.2));
    }

    layer_kind kind() const override { return layer_kind::label_embed; }
    std::string name() const override { return "label_embed"; }
    std::vector<float> hypers() const override {
        return {static_cast<float>(classes_), static_cast<float>(dim_)};
    }

    void set_labels(std::vector<int> labels) {
        for (int l : labels) {
            if (l < 0 || l >= classes_)
                throw std::invalid_argument("label_embed: label " + std::to_string(l) + " outside [0, " +
                                            std::to_string(classes_) + ")");
        }
        labels_ = std::move(labels);
    }

    tensor<T> forward(const tensor<T>& x, bool) override {
        if (x.ndim() != 2 || x.dim(1) != dim_)
            throw std::invalid_argument("label_embed: expected input [N, " + std::to_string(dim_) + "], got " +
                                        shape_str(x.shape));
        if (static_cast<int>(labels_.size()) != x.dim(0))
            throw std::runtime_error("label_embed: set_labels() must supply one label per row before forward");
        x_ = x;
        tensor<T> y(x.shape);
        for (int i = 0; i < x.dim(0); ++i) {
            const T* e = emb_.data() + static_cast<std::size_t>(labels_[i]) * dim_;
            for (int d = 0; d < dim_; ++d) y.at2(i, d) = x.at2(i, d) * e[d];
        }
        this->cached_ = true;
        return y;
    }

    tensor<T> backward(const tensor<T>& gy) override {
        this->require_cache("label_embed");
        if (!gy.same_shape(x_)) throw std::invalid_argument("label_embed: gradient shape mismatch");
        tensor<T> gx(x_.shape);
        for (int i = 0; i < x_.dim(0); ++i) {
            const std::size_t row = static_cast<std::size_t>(labels_[i]) * dim_;
            for (int d = 0; d < dim_; ++d) {
                gx.at2(i, d) = gy.at2(i, d) * emb_.v[row + d];
                gemb_.v[row + d] += gy.at2(i, d) * x_.at2(i, d);
            }
        }
        return gx;
    }

    std::vector<tensor<T>*> params() override { return {&emb_}; }
    std::vector<tensor<T>*> grads() override { return {&gemb_}; }
    std::vector<tensor<T>*> state() override { return {&emb_}; }

    int classes() const { return classes_; }
    int dim() const { return dim_; }

  private:
    int classes_, dim_;
    tensor<T> emb_, gemb_;
    std::vector<int> labels_;
    tensor<T> x_;
};

}  // namespace gendl

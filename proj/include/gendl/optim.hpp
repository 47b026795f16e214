#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "gendl/tensor.hpp"

namespace gendl {

// Adam with bias correction. attach() binds the optimizer to a fixed
// parameter list; step() applies one update from the matching gradients.
template <typename T>
class adam {
  public:
    adam(T lr = T(1e-3), T beta1 = T(0.9), T beta2 = T(0.999), T eps = T(1e-8))
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void attach(const std::vector<tensor<T>*>& params) {
        params_ = params;
        m_.clear();
        v_.clear();
        for (auto* p : params) {
            m_.emplace_back(p->shape);
            v_.emplace_back(p->shape);
        }
        t_ = 0;
    }

    void step(const std::vector<tensor<T>*>& grads) {
        if (grads.size() != params_.size())
            throw std::invalid_argument("adam: gradient list size mismatch");
        ++t_;
        const T bc1 = T(1) - std::pow(beta1_, static_cast<T>(t_));
        const T bc2 = T(1) - std::pow(beta2_, static_cast<T>(t_));
        for (std::size_t k = 0; k < params_.size(); ++k) {
            tensor<T>& p = *params_[k];
            const tensor<T>& g = *grads[k];
            if (!p.same_shape(g))
                throw std::invalid_argument("adam: param/grad shape mismatch " +
                                            shape_str(p.shape) + " vs " +
                                            shape_str(g.shape));
            for (int i = 0; i < p.size(); ++i) {
                if (!std::isfinite(g[i]))
                    throw std::runtime_error(
                        "adam: non-finite gradient in tensor " +
                        std::to_string(k) + " at index " + std::to_string(i) +
                        " (step " + std::to_string(t_) + ")");
                m_[k][i] = beta1_ * m_[k][i] + (T(1) - beta1_) * g[i];
                v_[k][i] = beta2_ * v_[k][i] + (T(1) - beta2_) * g[i] * g[i];
                const T mhat = m_[k][i] / bc1;
                const T vhat = v_[k][i] / bc2;
                p[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    long long steps() const { return t_; }
    T lr() const { return lr_; }

  private:
    T lr_, beta1_, beta2_, eps_;
    long long t_ = 0;
    std::vector<tensor<T>*> params_;
    std::vector<tensor<T>> m_, v_;
};

}  // namespace gendl

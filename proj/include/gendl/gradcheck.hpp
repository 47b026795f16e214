#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gendl/layers.hpp"
#include "gendl/rng.hpp"
#include "gendl/tensor.hpp"

namespace gendl {

struct gradcheck_report {
    double max_rel_err = 0.0;
    long long checked = 0;
};

// Relative error with an absolute floor so tiny gradients compare absolutely.
inline double grad_rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Central-difference check of one layer in 64-bit mode. The scalar objective
// is sum(forward(x) * gy) for a fixed random gy; analytic input and parameter
// gradients are compared against (L(w+eps) - L(w-eps)) / (2 eps).
//
// Inputs are pushed away from 0 so piecewise-linear activations are probed on
// smooth regions only. Layers whose forward draws fresh randomness per call
// (dropout in training mode) must be checked in inference mode.
inline gradcheck_report finite_diff_check(layer<double>& lay,
                                          const std::vector<int>& input_shape,
                                          std::uint64_t seed,
                                          double eps = 1e-5,
                                          bool training = true) {
    rng r(seed);
    tensor<double> x(input_shape);
    for (auto& v : x.v) {
        v = r.range(-1.0, 1.0);
        if (std::abs(v) < 0.1) v += v < 0 ? -0.1 : 0.1;
    }
    for (auto* p : lay.params())
        for (auto& v : p->v)
            if (std::abs(v) < 1e-3) v += v < 0 ? -1e-3 : 1e-3;

    const tensor<double> y0 = lay.forward(x, training);
    tensor<double> gy(y0.shape);
    for (auto& v : gy.v) v = r.range(-1.0, 1.0);

    lay.zero_grad();
    const tensor<double> gx = lay.backward(gy);

    auto objective = [&](tensor<double>& xin) {
        const tensor<double> y = lay.forward(xin, training);
        double s = 0.0;
        for (std::size_t i = 0; i < y.v.size(); ++i) s += y.v[i] * gy.v[i];
        return s;
    };

    gradcheck_report rep;
    auto probe = [&](double* slot, double analytic) {
        const double keep = *slot;
        *slot = keep + eps;
        const double lp = objective(x);
        *slot = keep - eps;
        const double lm = objective(x);
        *slot = keep;
        const double fd = (lp - lm) / (2.0 * eps);
        rep.max_rel_err = std::max(rep.max_rel_err, grad_rel_err(analytic, fd));
        ++rep.checked;
    };

    for (std::size_t i = 0; i < x.v.size(); ++i) probe(&x.v[i], gx.v[i]);

    const auto params = lay.params();
    const auto grads = lay.grads();
    for (std::size_t k = 0; k < params.size(); ++k)
        for (std::size_t i = 0; i < params[k]->v.size(); ++i)
            probe(&params[k]->v[i], grads[k]->v[i]);

    return rep;
}

}  // namespace gendl

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "poselift/errors.hpp"
#include "poselift/model.hpp"

namespace poselift {

enum class OptKind { adam, adamw };

inline std::string to_string(OptKind k) { return k == OptKind::adam ? "adam" : "adamw"; }

/// Adam / AdamW state. Moments are keyed by parameter position, so
/// updates depend only on values and gradients, never on names.
struct OptimizerState {
    OptKind kind = OptKind::adam;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;  // adamw only
    std::vector<Tensor> m, v;
    long long step = 0;

    static OptimizerState adam(double lr) {
        OptimizerState s;
        s.kind = OptKind::adam;
        s.lr = lr;
        return s;
    }
    static OptimizerState adamw(double lr, double weight_decay = 0.01) {
        OptimizerState s;
        s.kind = OptKind::adamw;
        s.lr = lr;
        s.weight_decay = weight_decay;
        return s;
    }
};

/// One bias-corrected step in place. AdamW applies decoupled decay.
inline void optimizer_step(OptimizerState& state, ParamModel& model,
                           const std::vector<std::pair<std::string, Tensor>>& grads) {
    if (grads.size() != model.params.size())
        throw ShapeMismatch("optimizer_step: gradient count");
    if (state.m.empty()) {
        for (const auto& [name, t] : model.params) {
            state.m.emplace_back(t.rows, t.cols, 0.0);
            state.v.emplace_back(t.rows, t.cols, 0.0);
        }
    }
    for (std::size_t p = 0; p < grads.size(); ++p) {
        const Tensor& g = grads[p].second;
        if (!g.finite()) throw NonFiniteGradient("optimizer_step: " + grads[p].first);
        check_same_shape(g, model.params[p].second, "optimizer_step");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < grads.size(); ++p) {
        Tensor& w = model.params[p].second;
        const Tensor& g = grads[p].second;
        Tensor& m = state.m[p];
        Tensor& v = state.v[p];
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * g.data[i];
            v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * g.data[i] * g.data[i];
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            double delta = state.lr * mhat / (std::sqrt(vhat) + state.eps);
            if (state.kind == OptKind::adamw) delta += state.lr * state.weight_decay * w.data[i];
            w.data[i] -= delta;
        }
    }
    if (!model.finite()) throw NonFiniteGradient("optimizer_step produced non-finite parameters");
}

}  // namespace poselift

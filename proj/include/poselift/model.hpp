#pragma once

#include <cmath>
#include <nlohmann/json.hpp>
#include <string>
#include <unordered_map>
#include <vector>

#include "poselift/autodiff.hpp"
#include "poselift/errors.hpp"
#include "poselift/rng.hpp"
#include "poselift/tensor.hpp"

namespace poselift {

/// Differentiable model: a descriptor (fully determines the parameter
/// layout) plus named flat parameter arrays.
struct ParamModel {
    nlohmann::json desc;
    std::vector<std::pair<std::string, Tensor>> params;

    const Tensor& param(const std::string& name) const {
        for (const auto& [n, t] : params)
            if (n == name) return t;
        throw ShapeMismatch("no parameter named " + name);
    }
    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& [nm, t] : params) n += t.size();
        return n;
    }
    bool finite() const {
        for (const auto& [nm, t] : params)
            if (!t.finite()) return false;
        return true;
    }
    bool same_descriptor(const ParamModel& o) const { return desc == o.desc; }

    std::uint64_t param_hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& [nm, t] : params) {
            h = fnv1a(nm.data(), nm.size(), h);
            h = fnv1a(t.data.data(), t.data.size() * sizeof(double), h);
        }
        return h;
    }
};

/// Parameters lifted into graph nodes, aligned with ParamModel order.
struct ModelVars {
    std::vector<ad::Var> ordered;
    std::unordered_map<std::string, ad::Var> by_name;

    const ad::Var& at(const std::string& name) const {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw ShapeMismatch("no lifted parameter " + name);
        return it->second;
    }
};

/// trainable=false lifts parameters as constants: gradients neither flow
/// to nor through-to them, which is how frozen submodels are expressed.
inline ModelVars lift(const ParamModel& m, bool trainable) {
    ModelVars out;
    for (const auto& [name, t] : m.params) {
        ad::Var v = trainable ? ad::leaf(t) : ad::constant(t);
        out.ordered.push_back(v);
        out.by_name.emplace(name, v);
    }
    return out;
}

inline ad::Var activation(const std::string& kind, const ad::Var& x) {
    if (kind == "tanh") return ad::tanh(x);
    if (kind == "relu") return ad::relu(x);
    throw ConfigError("unknown activation: " + kind);
}

/// When enabled (the `check` probe suite, tests), every model factory
/// verifies a down-scaled sibling of the requested architecture against
/// finite differences before returning.
inline bool& gradient_probe_enabled() {
    static bool on = false;
    return on;
}

inline double gradient_probe(const ParamModel& m, std::size_t input_cols, Rng& rng);

namespace detail {
inline bool& probe_guard() {
    thread_local bool inside = false;
    return inside;
}
struct ProbeScope {
    ProbeScope() { probe_guard() = true; }
    ~ProbeScope() { probe_guard() = false; }
};
}  // namespace detail

// ---- MLP -----------------------------------------------------------------

/// sizes = {in, hidden..., out}. zero_head zero-initialises the last layer,
/// which pins composite modules built on top to the identity at start.
inline ParamModel make_mlp(std::vector<int> sizes, const std::string& act, Rng& rng,
                           bool zero_head = false) {
    if (sizes.size() < 2) throw ConfigError("mlp needs at least in/out sizes");
    ParamModel m;
    m.desc = {{"kind", "mlp"}, {"sizes", sizes}, {"activation", act}, {"zero_head", zero_head}};
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l], fan_out = sizes[l + 1];
        Tensor w(fan_in, fan_out), b(1, fan_out, 0.0);
        const bool zero = zero_head && l + 2 == sizes.size();
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& x : w.data) x = zero ? 0.0 : rng.uniform(-bound, bound);
        const std::string p = "layer" + std::to_string(l);
        m.params.emplace_back(p + ".weight", std::move(w));
        m.params.emplace_back(p + ".bias", std::move(b));
    }
    if (gradient_probe_enabled() && !detail::probe_guard()) {
        detail::ProbeScope scope;
        std::vector<int> tiny(sizes.size(), 4);
        Rng probe_rng(0x9e3779b9);
        ParamModel probe = make_mlp(tiny, act, probe_rng);
        const double err = gradient_probe(probe, 4, probe_rng);
        if (err >= 1e-4)
            throw NonFiniteGradient("mlp construction probe failed: rel err " +
                                    std::to_string(err));
    }
    return m;
}

inline ad::Var mlp_forward(const ParamModel& m, const ModelVars& vars, ad::Var x) {
    const auto sizes = m.desc.at("sizes").get<std::vector<int>>();
    const auto act = m.desc.at("activation").get<std::string>();
    if (x->value.cols != static_cast<std::size_t>(sizes.front()))
        throw ShapeMismatch("mlp_forward: input cols " + x->value.shape_str());
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const std::string p = "layer" + std::to_string(l);
        x = ad::add(ad::matmul(x, vars.at(p + ".weight")), vars.at(p + ".bias"));
        if (l + 2 < sizes.size()) x = activation(act, x);
    }
    return x;
}

// ---- dilated temporal convolution stack ------------------------------------

/// Kernel-3 valid convolutions over time; dilations include the first
/// layer. Receptive field 1 + 2 * sum(dilations).
inline int tconv_receptive_field(const std::vector<int>& dilations) {
    int rf = 1;
    for (int d : dilations) rf += 2 * d;
    return rf;
}

/// The standard dilation ladder 1, 3, 9, ... sized so the receptive field
/// equals `frames` (frames must be a power of 3 times 3, e.g. 9/27/81).
inline std::vector<int> tconv_dilations_for(int frames) {
    std::vector<int> d{1};
    int rf = 3;
    while (rf < frames) {
        d.push_back(rf);
        rf += 2 * rf;
    }
    if (rf != frames)
        throw ConfigError("no dilation ladder reaches " + std::to_string(frames) + " frames");
    return d;
}

inline ParamModel make_tconv(int frames, int in_channels, int channels, int out_dim,
                             std::vector<int> dilations, const std::string& act, Rng& rng) {
    const int rf = tconv_receptive_field(dilations);
    if (rf < frames)
        throw ConfigError("receptive field " + std::to_string(rf) + " < frames " +
                          std::to_string(frames));
    if ((frames - rf) % 2 != 0)
        throw ConfigError("frames minus receptive field must be even");
    ParamModel m;
    m.desc = {{"kind", "tconv"},   {"frames", frames},       {"in_channels", in_channels},
              {"channels", channels}, {"out_dim", out_dim},  {"dilations", dilations},
              {"activation", act}};
    int cin = in_channels;
    for (std::size_t l = 0; l < dilations.size(); ++l) {
        Tensor w(3 * cin, channels), b(1, channels, 0.0);
        const double bound = std::sqrt(6.0 / (3 * cin + channels));
        for (double& x : w.data) x = rng.uniform(-bound, bound);
        const std::string p = "conv" + std::to_string(l);
        m.params.emplace_back(p + ".weight", std::move(w));
        m.params.emplace_back(p + ".bias", std::move(b));
        cin = channels;
    }
    Tensor hw(channels, out_dim), hb(1, out_dim, 0.0);
    const double bound = std::sqrt(6.0 / (channels + out_dim));
    for (double& x : hw.data) x = rng.uniform(-bound, bound);
    m.params.emplace_back("head.weight", std::move(hw));
    m.params.emplace_back("head.bias", std::move(hb));
    if (gradient_probe_enabled() && !detail::probe_guard()) {
        detail::ProbeScope scope;
        std::vector<int> tiny_dil(dilations.size(), 1);
        const int tiny_frames = tconv_receptive_field(tiny_dil);
        Rng probe_rng(0x85ebca6b);
        ParamModel probe = make_tconv(tiny_frames, 3, 4, 2, tiny_dil, act, probe_rng);
        const double err =
            gradient_probe(probe, static_cast<std::size_t>(tiny_frames) * 3, probe_rng);
        if (err >= 1e-4)
            throw NonFiniteGradient("tconv construction probe failed: rel err " +
                                    std::to_string(err));
    }
    return m;
}

/// One valid conv layer over x laid out (batch, t*channels).
inline ad::Var tconv_layer(const ad::Var& x, int t_in, int cin, int dilation,
                           const ad::Var& w, const ad::Var& b, const std::string& act) {
    const int t_out = t_in - 2 * dilation;
    if (t_out < 1) throw ShapeMismatch("tconv_layer: sequence too short");
    std::vector<ad::Var> outs;
    outs.reserve(t_out);
    for (int t = 0; t < t_out; ++t) {
        std::vector<ad::Var> taps;
        for (int k = 0; k < 3; ++k)
            taps.push_back(ad::slice_cols(x, static_cast<std::size_t>((t + k * dilation) * cin),
                                          static_cast<std::size_t>(cin)));
        ad::Var h = ad::add(ad::matmul(ad::concat_cols(taps), w), b);
        outs.push_back(activation(act, h));
    }
    return outs.size() == 1 ? outs[0] : ad::concat_cols(outs);
}

/// Full stack on (batch, t_in*in_channels); returns (batch, t_final*out_dim)
/// with t_final = t_in - rf + 1 (head applied per remaining frame).
inline ad::Var tconv_forward_seq(const ParamModel& m, const ModelVars& vars, ad::Var x,
                                 int t_in) {
    const auto dil = m.desc.at("dilations").get<std::vector<int>>();
    const auto act = m.desc.at("activation").get<std::string>();
    const int cin0 = m.desc.at("in_channels").get<int>();
    const int ch = m.desc.at("channels").get<int>();
    if (x->value.cols != static_cast<std::size_t>(t_in * cin0))
        throw ShapeMismatch("tconv_forward_seq: input " + x->value.shape_str());
    int t = t_in, cin = cin0;
    for (std::size_t l = 0; l < dil.size(); ++l) {
        const std::string p = "conv" + std::to_string(l);
        x = tconv_layer(x, t, cin, dil[l], vars.at(p + ".weight"), vars.at(p + ".bias"), act);
        t -= 2 * dil[l];
        cin = ch;
    }
    std::vector<ad::Var> outs;
    outs.reserve(t);
    for (int i = 0; i < t; ++i) {
        ad::Var frame = ad::slice_cols(x, static_cast<std::size_t>(i * ch),
                                       static_cast<std::size_t>(ch));
        outs.push_back(ad::add(ad::matmul(frame, vars.at("head.weight")), vars.at("head.bias")));
    }
    return outs.size() == 1 ? outs[0] : ad::concat_cols(outs);
}

/// Center-frame output for a clip of exactly `frames` frames.
inline ad::Var tconv_forward(const ParamModel& m, const ModelVars& vars, const ad::Var& x) {
    const int frames = m.desc.at("frames").get<int>();
    const int out_dim = m.desc.at("out_dim").get<int>();
    ad::Var seq = tconv_forward_seq(m, vars, x, frames);
    const std::size_t t_final = seq->value.cols / out_dim;
    const std::size_t center = t_final / 2;
    return ad::slice_cols(seq, center * out_dim, out_dim);
}

// ---- generic forward / gradient entry points -------------------------------

inline ad::Var model_forward(const ParamModel& m, const ModelVars& vars, const ad::Var& x) {
    const std::string kind = m.desc.at("kind").get<std::string>();
    if (kind == "mlp") return mlp_forward(m, vars, x);
    if (kind == "tconv") return tconv_forward(m, vars, x);
    throw ConfigError("unknown model kind: " + kind);
}

/// Deterministic value-level forward.
inline Tensor forward(const ParamModel& m, const Tensor& input) {
    ModelVars vars = lift(m, false);
    return model_forward(m, vars, ad::constant(input))->value;
}

/// Named gradient arrays of a scalar loss built on lifted parameters.
template <typename LossBuilder>
std::vector<std::pair<std::string, Tensor>> gradient(const ParamModel& m,
                                                     LossBuilder&& build_loss) {
    ModelVars vars = lift(m, true);
    ad::Var loss = build_loss(vars);
    if (loss->value.size() != 1 || !loss->value.finite())
        throw NonFiniteLoss("gradient: loss must be a finite scalar");
    std::vector<ad::Var> gs = ad::grad(loss, vars.ordered);
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::size_t i = 0; i < gs.size(); ++i)
        out.emplace_back(m.params[i].first, gs[i]->value);
    return out;
}

/// Central finite differences over every parameter scalar; the
/// independent oracle for the gradient contract.
template <typename LossBuilder>
std::vector<std::pair<std::string, Tensor>> fd_gradient(ParamModel m, LossBuilder&& build_loss,
                                                        double step = 1e-5) {
    auto eval = [&]() {
        ModelVars vars = lift(m, false);
        return build_loss(vars)->value.item();
    };
    std::vector<std::pair<std::string, Tensor>> out;
    for (auto& [name, t] : m.params) {
        Tensor g(t.rows, t.cols);
        for (std::size_t i = 0; i < t.data.size(); ++i) {
            const double keep = t.data[i];
            t.data[i] = keep + step;
            const double hi = eval();
            t.data[i] = keep - step;
            const double lo = eval();
            t.data[i] = keep;
            g.data[i] = (hi - lo) / (2.0 * step);
        }
        out.emplace_back(name, std::move(g));
    }
    return out;
}

inline double gradient_rel_error(const std::vector<std::pair<std::string, Tensor>>& a,
                                 const std::vector<std::pair<std::string, Tensor>>& b) {
    double worst = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p)
        for (std::size_t i = 0; i < a[p].second.data.size(); ++i) {
            const double x = a[p].second.data[i], y = b[p].second.data[i];
            const double denom = std::max({std::abs(x), std::abs(y), 1e-6});
            worst = std::max(worst, std::abs(x - y) / denom);
        }
    return worst;
}

/// Construction-time probe: verifies the analytic gradient of a quadratic
/// readout against finite differences on a random input.
inline double gradient_probe(const ParamModel& m, std::size_t input_cols, Rng& rng) {
    Tensor x(2, input_cols);
    for (double& v : x.data) v = rng.gaussian();
    auto build = [&](const ModelVars& vars) {
        ad::Var out = model_forward(m, vars, ad::constant(x));
        return ad::mean_all(ad::mul(out, out));
    };
    auto analytic = gradient(m, build);
    auto numeric = fd_gradient(m, build);
    return gradient_rel_error(analytic, numeric);
}

}  // namespace poselift

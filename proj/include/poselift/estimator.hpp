#pragma once

#include <vector>

#include "poselift/model.hpp"
#include "poselift/optim.hpp"
#include "poselift/pose.hpp"
#include "poselift/pose_graph.hpp"

namespace poselift {

/// How raw pixel inputs are brought to network units. Travels with the
/// estimator checkpoint so predictions reload bit-exactly.
struct NormalizeSpec {
    double cx = 500.0;
    double cy = 500.0;
    double pixel_scale = 500.0;

    nlohmann::json to_json() const {
        return {{"cx", cx}, {"cy", cy}, {"pixel_scale", pixel_scale}};
    }
    static NormalizeSpec from_json(const nlohmann::json& j) {
        return {j.at("cx").get<double>(), j.at("cy").get<double>(),
                j.at("pixel_scale").get<double>()};
    }
};

/// Temporal-convolution 2D-to-3D lifter. The network maps a normalized
/// T-frame 2D clip to the center-frame 3D pose in meters; predictions are
/// root-relative by construction (root subtracted in-graph).
struct LiftingModel {
    ParamModel net;
    int frames = 27;
    int joints = 16;
    NormalizeSpec norm;

    int receptive_field() const {
        return tconv_receptive_field(net.desc.at("dilations").get<std::vector<int>>());
    }
};

inline LiftingModel make_lifting(int frames, int joints, int channels,
                                 const NormalizeSpec& norm, Rng& rng,
                                 const std::string& act = "tanh") {
    LiftingModel m;
    m.frames = frames;
    m.joints = joints;
    m.norm = norm;
    m.net = make_tconv(frames, joints * 2, channels, joints * 3, tconv_dilations_for(frames),
                       act, rng);
    return m;
}

namespace detail {

inline std::vector<std::size_t> root_tile_cols(int joints) {
    std::vector<std::size_t> idx;
    idx.reserve(static_cast<std::size_t>(joints) * 3);
    for (int j = 0; j < joints; ++j)
        for (int d = 0; d < 3; ++d) idx.push_back(static_cast<std::size_t>(d));
    return idx;
}

/// Per-frame root centering over (B, T*J*3).
inline ad::Var root_center_frames(const ad::Var& seq, int frames, int joints) {
    std::vector<std::size_t> idx;
    idx.reserve(static_cast<std::size_t>(frames) * joints * 3);
    for (int f = 0; f < frames; ++f)
        for (int j = 0; j < joints; ++j)
            for (int d = 0; d < 3; ++d)
                idx.push_back(static_cast<std::size_t>(f) * joints * 3 + d);
    return ad::sub(seq, ad::gather_cols(seq, idx));
}

}  // namespace detail

/// Normalized (B, T*J*2) tensor from raw pixel clips.
inline Tensor normalize_clips(const std::vector<Clip2D>& clips, const NormalizeSpec& n) {
    if (clips.empty()) throw ShapeMismatch("normalize_clips: empty batch");
    const int T = clips[0].length();
    const int J = clips[0].frames[0].joints();
    Tensor out(clips.size(), static_cast<std::size_t>(T) * J * 2);
    for (std::size_t b = 0; b < clips.size(); ++b) {
        if (clips[b].length() != T) throw ShapeMismatch("normalize_clips: clip length");
        for (int f = 0; f < T; ++f)
            for (int j = 0; j < J; ++j) {
                out.at(b, static_cast<std::size_t>(f) * J * 2 + 2 * j + 0) =
                    (clips[b].frames[f].u(j) - n.cx) / n.pixel_scale;
                out.at(b, static_cast<std::size_t>(f) * J * 2 + 2 * j + 1) =
                    (clips[b].frames[f].v(j) - n.cy) / n.pixel_scale;
            }
    }
    return out;
}

/// Center-frame prediction graph: (B, T*J*2) normalized -> (B, J*3) meters,
/// root-relative.
inline ad::Var lifting_center_graph(const LiftingModel& m, const ModelVars& vars,
                                    const ad::Var& clip_norm) {
    ad::Var out = tconv_forward(m.net, vars, clip_norm);
    return ad::sub(out, ad::gather_cols(out, detail::root_tile_cols(m.joints)));
}

/// Edge-replicate pad so the valid conv stack emits all T frames.
inline Tensor pad_clip_tensor(const Tensor& clip_norm, int frames, int in_cols, int pad) {
    Tensor out(clip_norm.rows, static_cast<std::size_t>(frames + 2 * pad) * in_cols);
    for (std::size_t b = 0; b < clip_norm.rows; ++b)
        for (int f = 0; f < frames + 2 * pad; ++f) {
            const int src = std::min(std::max(f - pad, 0), frames - 1);
            for (int c = 0; c < in_cols; ++c)
                out.at(b, static_cast<std::size_t>(f) * in_cols + c) =
                    clip_norm.at(b, static_cast<std::size_t>(src) * in_cols + c);
        }
    return out;
}

/// Full-sequence prediction graph: all T frames, each root-relative.
/// The center frame is bitwise equal to lifting_center_graph's output.
inline ad::Var lifting_seq_graph(const LiftingModel& m, const ModelVars& vars,
                                 const Tensor& clip_norm) {
    const int rf = m.receptive_field();
    const int pad = (rf - 1) / 2;
    Tensor padded = pad_clip_tensor(clip_norm, m.frames, m.joints * 2, pad);
    ad::Var seq =
        tconv_forward_seq(m.net, vars, ad::constant(std::move(padded)), m.frames + 2 * pad);
    return detail::root_center_frames(seq, m.frames, m.joints);
}

/// Pseudo 3D pose for one clip (mm, root-relative). Pure function of
/// (parameters, clip).
inline Pose3D predict(const LiftingModel& m, const Clip2D& clip) {
    clip.validate();
    if (clip.length() != m.frames) throw ShapeMismatch("predict: clip length");
    ModelVars vars = lift(m.net, false);
    ad::Var out = lifting_center_graph(m, vars, ad::constant(normalize_clips({clip}, m.norm)));
    Pose3D p(m.joints);
    for (std::size_t i = 0; i < p.xyz.size(); ++i) p.xyz[i] = out->value.at(0, i) * 1000.0;
    return p;
}

inline std::vector<Pose3D> predict_batch(const LiftingModel& m,
                                         const std::vector<Clip2D>& clips) {
    if (clips.empty()) return {};
    ModelVars vars = lift(m.net, false);
    ad::Var out = lifting_center_graph(m, vars, ad::constant(normalize_clips(clips, m.norm)));
    std::vector<Pose3D> ps;
    for (std::size_t b = 0; b < clips.size(); ++b) {
        Pose3D p(m.joints);
        for (std::size_t i = 0; i < p.xyz.size(); ++i) p.xyz[i] = out->value.at(b, i) * 1000.0;
        ps.push_back(std::move(p));
    }
    return ps;
}

/// Supervised source pretraining: MSE in meters between the center-frame
/// prediction and the root-centered label, AdamW.
struct PretrainReport {
    std::vector<double> epoch_loss;
};

inline PretrainReport pretrain_source(LiftingModel& model, const std::vector<Clip2D>& clips2d,
                                      const std::vector<Pose3D>& centers3d_mm, int epochs,
                                      int batch_size, double lr, Rng& rng) {
    if (clips2d.empty()) throw EmptySource("pretrain_source: no labeled clips");
    if (clips2d.size() != centers3d_mm.size())
        throw ShapeMismatch("pretrain_source: label count");
    OptimizerState opt = OptimizerState::adamw(lr);
    PretrainReport report;
    const std::size_t n = clips2d.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (int e = 0; e < epochs; ++e) {
        // Fisher-Yates with the run's stream keeps epochs deterministic.
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        double accum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t end = std::min(n, start + batch_size);
            std::vector<Clip2D> bclips;
            Tensor labels(end - start, static_cast<std::size_t>(model.joints) * 3);
            for (std::size_t i = start; i < end; ++i) {
                bclips.push_back(clips2d[order[i]]);
                const Pose3D c = root_center(centers3d_mm[order[i]]);
                for (std::size_t k = 0; k < c.xyz.size(); ++k)
                    labels.at(i - start, k) = c.xyz[k] * 1e-3;  // meters
            }
            ModelVars vars = lift(model.net, true);
            ad::Var pred = lifting_center_graph(model, vars,
                                                ad::constant(normalize_clips(bclips, model.norm)));
            ad::Var d = ad::sub(pred, ad::constant(std::move(labels)));
            ad::Var loss = ad::mean_all(ad::mul(d, d));
            std::vector<ad::Var> gs = ad::grad(loss, vars.ordered);
            std::vector<std::pair<std::string, Tensor>> grads;
            for (std::size_t i = 0; i < gs.size(); ++i)
                grads.emplace_back(model.net.params[i].first, gs[i]->value);
            optimizer_step(opt, model.net, grads);
            accum += loss->value.item();
            ++batches;
        }
        report.epoch_loss.push_back(batches ? accum / batches : 0.0);
    }
    return report;
}

}  // namespace poselift

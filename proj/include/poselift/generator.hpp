#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "poselift/model.hpp"
#include "poselift/pose.hpp"
#include "poselift/pose_graph.hpp"

namespace poselift {

/// Sizes, gains and ablation switches for the generator stack.
struct GeneratorConfig {
    int embed_jc = 32;
    int embed_bv = 32;
    int embed_ps_per_segment = 16;  // x6 segments
    int embed_te = 32;
    int embed_de = 32;
    int hidden = 128;
    double angle_gain = 0.3;         // perturbation gain on bone directions
    double length_ratio_gain = 0.3;  // fixed: ratios live in (0.7, 1.3)
    double translation_gain = 200.0; // pose units (mm)
    bool enable_ps = true;
    bool enable_te = true;
    bool enable_de = true;
    // "bones_first": directions/lengths then rigid; "rigid_first" swaps.
    std::string chain_order = "bones_first";

    int embed_ps_total() const { return 6 * embed_ps_per_segment; }
    int embed_total() const {
        return embed_jc + embed_bv + embed_ps_total() + embed_te + embed_de;
    }
};

/// The encoder set, temporal weighting net and the three generators.
/// Generator heads are zero-initialised: the whole augmentation is the
/// identity map until training moves it.
struct GeneratorBundle {
    GeneratorConfig cfg;
    ParamModel enc_jc, enc_bv;
    std::vector<ParamModel> enc_ps;  // 6 per-segment encoders
    ParamModel enc_te, enc_de;
    ParamModel temporal;  // per-frame scalar logit
    ParamModel g_ba, g_bl, g_rt;

    // models() order: jc, bv, ps0..ps5, te, de, temporal, ba, bl, rt
    std::vector<ParamModel*> models() {
        std::vector<ParamModel*> v{&enc_jc, &enc_bv};
        for (auto& m : enc_ps) v.push_back(&m);
        v.insert(v.end(), {&enc_te, &enc_de, &temporal, &g_ba, &g_bl, &g_rt});
        return v;
    }
    std::vector<const ParamModel*> models() const {
        std::vector<const ParamModel*> v{&enc_jc, &enc_bv};
        for (const auto& m : enc_ps) v.push_back(&m);
        v.insert(v.end(), {&enc_te, &enc_de, &temporal, &g_ba, &g_bl, &g_rt});
        return v;
    }

    std::uint64_t param_hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const ParamModel* m : models()) h ^= mix64(m->param_hash());
        return h;
    }
};

namespace genslot {
// Indices into models() / GeneratorVars::per_model.
constexpr std::size_t jc = 0, bv = 1, ps0 = 2, te = 8, de = 9, temporal = 10, ba = 11,
                      bl = 12, rt = 13;
}  // namespace genslot

inline GeneratorBundle make_generators(const GeneratorConfig& cfg, const Skeleton& skel,
                                       Rng& rng) {
    GeneratorBundle b;
    b.cfg = cfg;
    const int j3 = skel.joint_count() * 3;
    const int b3 = skel.bone_count() * 3;
    b.enc_jc = make_mlp({j3, cfg.embed_jc}, "tanh", rng);
    b.enc_bv = make_mlp({b3, cfg.embed_bv}, "tanh", rng);
    for (const auto& [name, joints] : skel.part_segments)
        b.enc_ps.push_back(make_mlp(
            {static_cast<int>(joints.size()) * 3, cfg.embed_ps_per_segment}, "tanh", rng));
    b.enc_te = make_mlp({j3, cfg.embed_te}, "tanh", rng);
    b.enc_de = make_mlp({skel.joint_count() * 2, cfg.embed_de}, "tanh", rng);
    b.temporal = make_mlp({j3, 1}, "tanh", rng);
    const int in = cfg.embed_total();
    b.g_ba = make_mlp({in, cfg.hidden, cfg.hidden, b3}, "tanh", rng, /*zero_head=*/true);
    b.g_bl = make_mlp({in, cfg.hidden, cfg.hidden, skel.bone_count()}, "tanh", rng, true);
    b.g_rt = make_mlp({in, cfg.hidden, cfg.hidden, 7}, "tanh", rng, true);
    return b;
}

/// Lifted graph nodes for every model in the bundle, in models() order.
struct GeneratorVars {
    std::vector<ModelVars> per_model;
    std::vector<ad::Var> ordered;  // flat, aligned with bundle parameter order
};

inline GeneratorVars lift(const GeneratorBundle& b, bool trainable) {
    GeneratorVars out;
    for (const ParamModel* m : b.models()) {
        out.per_model.push_back(poselift::lift(*m, trainable));
        for (const auto& v : out.per_model.back().ordered) out.ordered.push_back(v);
    }
    return out;
}

/// Softmax-weighted single frame from a (B, T*J*3) clip. Anchored on
/// frame 0 so a clip of identical frames pools to that frame bitwise.
inline ad::Var temporal_pool_graph(const GeneratorBundle& b, const GeneratorVars& vars,
                                   const ad::Var& clip, int frames, int j3) {
    using namespace ad;
    std::vector<Var> logits;
    std::vector<Var> frame_vars;
    for (int t = 0; t < frames; ++t) {
        Var f = slice_cols(clip, static_cast<std::size_t>(t) * j3, j3);
        frame_vars.push_back(f);
        logits.push_back(mlp_forward(b.temporal, vars.per_model[genslot::temporal], f));
    }
    Var w = softmax_rows(concat_cols(logits));  // (B, T), rows sum to 1
    Var pooled = frame_vars[0];
    for (int t = 1; t < frames; ++t) {
        Var wt = slice_cols(w, static_cast<std::size_t>(t), 1);
        pooled = add(pooled, mul(wt, sub(frame_vars[t], frame_vars[0])));
    }
    return pooled;
}

/// Concatenated generator input (B, embed_total) from a predicted 3D clip
/// and a sampled 2D prior. scale3d/scale2d bring encoder inputs to O(1).
/// Disabled components contribute exact zero blocks of nominal width.
inline ad::Var encode_input_graph(const GeneratorBundle& b, const GeneratorVars& vars,
                                  const ad::Var& clip3d, const ad::Var& prior2d,
                                  const SkeletonGraph& sg, int frames, double scale3d,
                                  double scale2d) {
    using namespace ad;
    const GeneratorConfig& cfg = b.cfg;
    const int j3 = sg.joints * 3;
    const std::size_t batch = clip3d->value.rows;
    Var center = slice_cols(clip3d, static_cast<std::size_t>(frames / 2) * j3, j3);
    Var center_s = scale(center, scale3d);

    std::vector<Var> parts;
    parts.push_back(mlp_forward(b.enc_jc, vars.per_model[genslot::jc], center_s));
    parts.push_back(
        mlp_forward(b.enc_bv, vars.per_model[genslot::bv], bone_vectors(center_s, sg)));
    if (cfg.enable_ps) {
        std::vector<Var> seg_parts;
        for (std::size_t s = 0; s < b.enc_ps.size(); ++s)
            seg_parts.push_back(mlp_forward(b.enc_ps[s], vars.per_model[genslot::ps0 + s],
                                            gather_cols(center_s, sg.segment_cols[s])));
        parts.push_back(concat_cols(seg_parts));
    } else {
        parts.push_back(constant(Tensor(batch, cfg.embed_ps_total(), 0.0)));
    }
    if (cfg.enable_te) {
        Var pooled = temporal_pool_graph(b, vars, clip3d, frames, j3);
        parts.push_back(
            mlp_forward(b.enc_te, vars.per_model[genslot::te], scale(pooled, scale3d)));
    } else {
        parts.push_back(constant(Tensor(batch, cfg.embed_te, 0.0)));
    }
    if (cfg.enable_de) {
        parts.push_back(
            mlp_forward(b.enc_de, vars.per_model[genslot::de], scale(prior2d, scale2d)));
    } else {
        parts.push_back(constant(Tensor(batch, cfg.embed_de, 0.0)));
    }
    return concat_cols(parts);
}

/// Direction + length stage on a (B, J*3) pose given raw generator
/// outputs. New bone vectors have the direction of (unit + gain*raw) and
/// length base*ratio, routed back through exact linear FK.
inline ad::Var bones_stage_graph(const ad::Var& pose, const ad::Var& raw_ba,
                                 const ad::Var& raw_bl, double angle_gain,
                                 double ratio_gain, const SkeletonGraph& sg) {
    using namespace ad;
    Var v = bone_vectors(pose, sg);
    Var len = bone_lengths(v, sg);
    // perturb the direction; scaling by length keeps raw outputs unitless
    Var w = add(v, mul(mul(per_bone_expand(len, sg), raw_ba), constant(angle_gain)));
    Var wlen = bone_lengths(w, sg);
    for (double x : wlen->value.data)
        if (x < 1e-9) throw DegenerateDirection("perturbed bone direction vanished");
    Var ratio = add_scalar(scale(ad::tanh(raw_bl), ratio_gain), 1.0);
    Var v2 = mul(w, per_bone_expand(mul(div(len, wlen), ratio), sg));
    return apply_bone_delta(pose, v2, v, sg);
}

/// Rigid stage: unit quaternion from raw + (1,0,0,0), bounded translation.
inline ad::Var rigid_stage_graph(const ad::Var& pose, const ad::Var& raw_rt,
                                 double translation_gain, const SkeletonGraph& sg) {
    using namespace ad;
    Var q_raw = slice_cols(raw_rt, 0, 4);
    Tensor e0(q_raw->value.rows, 4, 0.0);
    for (std::size_t i = 0; i < e0.rows; ++i) e0.at(i, 0) = 1.0;
    Var q_off = add(q_raw, constant(std::move(e0)));
    Var qn = ad::sqrt(row_sum(mul(q_off, q_off)));
    for (double x : qn->value.data)
        if (x < 1e-9) throw DegenerateQuaternion("raw quaternion norm vanished");
    Var q = div(q_off, qn);
    Var t = scale(ad::tanh(slice_cols(raw_rt, 4, 3)), translation_gain);
    return rotate_translate(pose, q, t, sg);
}

/// Augmented center-frame pose from the chained generators, in the pose's
/// own units. Exact identity while the generator heads are zero.
inline ad::Var augment_graph(const GeneratorBundle& b, const GeneratorVars& vars,
                             const ad::Var& clip3d, const ad::Var& prior2d,
                             const SkeletonGraph& sg, int frames, double scale3d,
                             double scale2d) {
    const int j3 = sg.joints * 3;
    ad::Var input = encode_input_graph(b, vars, clip3d, prior2d, sg, frames, scale3d, scale2d);
    ad::Var pose = ad::slice_cols(clip3d, static_cast<std::size_t>(frames / 2) * j3, j3);

    ad::Var raw_ba = mlp_forward(b.g_ba, vars.per_model[genslot::ba], input);
    ad::Var raw_bl = mlp_forward(b.g_bl, vars.per_model[genslot::bl], input);
    ad::Var raw_rt = mlp_forward(b.g_rt, vars.per_model[genslot::rt], input);

    if (b.cfg.chain_order == "rigid_first") {
        ad::Var r = rigid_stage_graph(pose, raw_rt, b.cfg.translation_gain, sg);
        return bones_stage_graph(r, raw_ba, raw_bl, b.cfg.angle_gain,
                                 b.cfg.length_ratio_gain, sg);
    }
    ad::Var e = bones_stage_graph(pose, raw_ba, raw_bl, b.cfg.angle_gain,
                                  b.cfg.length_ratio_gain, sg);
    return rigid_stage_graph(e, raw_rt, b.cfg.translation_gain, sg);
}

// ---- value-level operations (single pose, spec units) ----------------------

struct GeneratorInput {
    std::vector<double> jc, bv, ps, te, de;
    std::vector<double> concatenated;
};

namespace detail {
inline Tensor clip_to_tensor(const Clip3D& clip) {
    clip.validate();
    const int j3 = clip.frames[0].joints() * 3;
    Tensor t(1, static_cast<std::size_t>(clip.length()) * j3);
    for (int f = 0; f < clip.length(); ++f)
        for (int i = 0; i < j3; ++i) t.at(0, f * j3 + i) = clip.frames[f].xyz[i];
    return t;
}
inline std::vector<double> slice_vec(const Tensor& t, std::size_t b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = t.at(0, b + i);
    return v;
}
}  // namespace detail

constexpr double kMetersPerMm = 1e-3;
constexpr double kPixelScale = 500.0;  // image units per normalized unit

/// Weighted single-frame pose (value level, input units preserved).
inline Pose3D temporal_pool(const Clip3D& clip, const GeneratorBundle& b) {
    Tensor ct = detail::clip_to_tensor(clip);
    GeneratorVars vars = lift(b, false);
    ad::Var pooled = temporal_pool_graph(b, vars, ad::constant(ct), clip.length(),
                                         clip.frames[0].joints() * 3);
    Pose3D out(clip.frames[0].joints());
    out.xyz = pooled->value.data;
    return out;
}

/// Concatenated generator input for one clip + prior (value level).
inline GeneratorInput encode_input(const Clip3D& clip, const Pose2D& prior,
                                   const GeneratorBundle& b, const Skeleton& skel) {
    const SkeletonGraph sg(skel);
    Tensor ct = detail::clip_to_tensor(clip);
    Tensor pt = Tensor::row(prior.uv);
    GeneratorVars vars = lift(b, false);
    ad::Var enc = encode_input_graph(b, vars, ad::constant(ct), ad::constant(pt), sg,
                                     clip.length(), kMetersPerMm, 1.0 / kPixelScale);
    GeneratorInput out;
    const auto& c = b.cfg;
    std::size_t off = 0;
    out.jc = detail::slice_vec(enc->value, off, c.embed_jc), off += c.embed_jc;
    out.bv = detail::slice_vec(enc->value, off, c.embed_bv), off += c.embed_bv;
    out.ps = detail::slice_vec(enc->value, off, c.embed_ps_total()), off += c.embed_ps_total();
    out.te = detail::slice_vec(enc->value, off, c.embed_te), off += c.embed_te;
    out.de = detail::slice_vec(enc->value, off, c.embed_de), off += c.embed_de;
    out.concatenated = enc->value.data;
    return out;
}

/// Bone-direction generator on an explicit base decomposition. Lengths
/// pass through untouched; the perturbed direction keeps the base
/// vector's norm (unit by construction of bones_from_joints).
inline BoneSet g_ba(const std::vector<double>& raw, const BoneSet& base, double angle_gain) {
    if (raw.size() != static_cast<std::size_t>(base.bones()) * 3)
        throw ShapeMismatch("g_ba: raw size");
    BoneSet out = base;
    for (int bn = 0; bn < base.bones(); ++bn) {
        double w[3], n2 = 0.0, bn2 = 0.0;
        for (int d = 0; d < 3; ++d) {
            w[d] = base.unit[bn][d] + angle_gain * raw[3 * bn + d];
            n2 += w[d] * w[d];
            bn2 += base.unit[bn][d] * base.unit[bn][d];
        }
        const double n = std::sqrt(n2);
        if (n < 1e-9) throw DegenerateDirection("g_ba: bone " + std::to_string(bn));
        const double s = std::sqrt(bn2) / n;
        for (int d = 0; d < 3; ++d) out.unit[bn][d] = w[d] * s;
    }
    return out;
}

/// Bone-length generator: ratios 1 + gain*tanh(raw), directions untouched.
inline BoneSet g_bl(const std::vector<double>& raw, const BoneSet& base, double ratio_gain) {
    if (raw.size() != static_cast<std::size_t>(base.bones()))
        throw ShapeMismatch("g_bl: raw size");
    BoneSet out = base;
    for (int bn = 0; bn < base.bones(); ++bn)
        out.length[bn] = base.length[bn] * (1.0 + ratio_gain * std::tanh(raw[bn]));
    return out;
}

/// Rigid generator: rotate by the unit quaternion from raw[0..3]+(1,0,0,0)
/// and translate by gain*tanh(raw[4..6]), units of the pose.
inline Pose3D g_rt(const std::vector<double>& raw, const Pose3D& pose, double translation_gain,
                   const Skeleton& skel) {
    if (raw.size() != 7) throw ShapeMismatch("g_rt: raw size");
    const SkeletonGraph sg(skel);
    Tensor pt = Tensor::row(pose.xyz);
    Tensor qt(1, 4), tt(1, 3);
    qt.at(0, 0) = raw[0] + 1.0;
    for (int i = 1; i < 4; ++i) qt.at(0, i) = raw[i];
    double qn = 0.0;
    for (int i = 0; i < 4; ++i) qn += qt.at(0, i) * qt.at(0, i);
    qn = std::sqrt(qn);
    if (qn < 1e-9) throw DegenerateQuaternion("g_rt: raw quaternion");
    for (int i = 0; i < 4; ++i) qt.at(0, i) /= qn;
    for (int i = 0; i < 3; ++i) tt.at(0, i) = translation_gain * std::tanh(raw[4 + i]);
    ad::Var out = rotate_translate(ad::constant(pt), ad::constant(qt), ad::constant(tt), sg);
    Pose3D res(pose.joints());
    res.xyz = out->value.data;
    return res;
}

/// Generator head output on a concatenated embedding.
inline std::vector<double> generator_raw(const ParamModel& model, const GeneratorInput& input) {
    return forward(model, Tensor::row(input.concatenated)).data;
}

inline BoneSet g_ba(const GeneratorInput& input, const BoneSet& base, const ParamModel& model,
                    double angle_gain = 0.3) {
    return g_ba(generator_raw(model, input), base, angle_gain);
}
inline BoneSet g_bl(const GeneratorInput& input, const BoneSet& base, const ParamModel& model,
                    double ratio_gain = 0.3) {
    return g_bl(generator_raw(model, input), base, ratio_gain);
}
inline Pose3D g_rt(const GeneratorInput& input, const Pose3D& pose, const ParamModel& model,
                   const Skeleton& skel, double translation_gain = 200.0) {
    return g_rt(generator_raw(model, input), pose, translation_gain, skel);
}

/// Full augmentation of the clip's center frame (mm in, mm out).
inline Pose3D augment(const Clip3D& clip, const Pose2D& prior, const GeneratorBundle& b,
                      const Skeleton& skel) {
    const SkeletonGraph sg(skel);
    Tensor ct = detail::clip_to_tensor(clip);
    Tensor pt = Tensor::row(prior.uv);
    GeneratorVars vars = lift(b, false);
    ad::Var out = augment_graph(b, vars, ad::constant(ct), ad::constant(pt), sg, clip.length(),
                                kMetersPerMm, 1.0 / kPixelScale);
    Pose3D res(clip.frames[0].joints());
    res.xyz = out->value.data;
    return res;
}

}  // namespace poselift

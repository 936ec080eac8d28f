#pragma once

#include <vector>

#include "poselift/diffusion.hpp"
#include "poselift/estimator.hpp"
#include "poselift/generator.hpp"
#include "poselift/losses.hpp"

namespace poselift {

/// The three trainable parties of the adaptation game.
struct AdversarialModels {
    LiftingModel estimator;  // the live estimator being adapted
    GeneratorBundle generators;
    ParamModel discriminator;
};

struct ChainSettings {
    Camera camera;  // source camera, used for every projection
    double pixel_scale = 500.0;
    LossWeights weights;
    PenaltyMode penalty = PenaltyMode::standard_gp;
    bool swap_critic_sign = false;
    bool use_ldis = true;
    // In the discriminator/estimator step, the critic term sees the
    // augmented poses as samples (cut from the producing chain), the
    // cited WGAN-GP recipe. The coupled variant keeps the literal
    // through-gradient into the estimator.
    bool couple_estimator_to_critic = false;
    int frames = 27;
};

namespace chain_detail {

/// (1, J*2) row of [cx, cy, cx, cy, ...] for pixel centering.
inline Tensor principal_row(const Camera& cam, int joints) {
    Tensor t(1, static_cast<std::size_t>(joints) * 2);
    for (int j = 0; j < joints; ++j) {
        t.at(0, 2 * j + 0) = cam.cx;
        t.at(0, 2 * j + 1) = cam.cy;
    }
    return t;
}

inline ad::Var normalize_px(const ad::Var& px, const Camera& cam, double pixel_scale,
                            int joints) {
    return ad::scale(ad::sub(px, ad::constant(principal_row(cam, joints))), 1.0 / pixel_scale);
}

/// Raw (B, J*2) tensor of the clips' center frames.
inline Tensor center_frames_px(const std::vector<Clip2D>& clips) {
    const int J = clips[0].frames[0].joints();
    Tensor t(clips.size(), static_cast<std::size_t>(J) * 2);
    for (std::size_t b = 0; b < clips.size(); ++b) {
        const Pose2D& c = clips[b].center();
        for (std::size_t i = 0; i < c.uv.size(); ++i) t.at(b, i) = c.uv[i];
    }
    return t;
}

inline Tensor priors_tensor(const std::vector<Pose2D>& priors) {
    Tensor t(priors.size(), priors.empty() ? 0 : priors[0].uv.size());
    for (std::size_t b = 0; b < priors.size(); ++b)
        for (std::size_t i = 0; i < priors[b].uv.size(); ++i) t.at(b, i) = priors[b].uv[i];
    return t;
}

}  // namespace chain_detail

/// Everything the two update steps share for one batch. Priors and the
/// interpolation epsilons are drawn once per batch and reused.
struct ChainBatch {
    Tensor clips_norm;   // (B, T*J*2) estimator input
    Tensor x_px;         // (B, J*2) raw center frames (the real side)
    Tensor priors_px;    // (B, J*2) sampled domain priors
    Tensor epsilons;     // (B, 1) interpolation draws
};

inline ChainBatch make_chain_batch(const std::vector<Clip2D>& clips,
                                   const std::vector<Pose2D>& priors,
                                   const NormalizeSpec& norm, Rng& rng) {
    ChainBatch b;
    b.clips_norm = normalize_clips(clips, norm);
    b.x_px = chain_detail::center_frames_px(clips);
    b.priors_px = chain_detail::priors_tensor(priors);
    b.epsilons = Tensor(clips.size(), 1);
    for (double& e : b.epsilons.data) e = rng.uniform();
    return b;
}

/// Which party receives gradients in a chain evaluation.
enum class ChainSide { generators, estimator_discriminator, none };

/// The assembled forward chain: predict -> augment -> project, with every
/// objective of the game evaluated on it.
struct ChainGraph {
    ad::Var l3d, l2d, ldis;  // ldis null when disabled
    ad::Var loss_g;          // L_3D - beta * L_dis
    ad::Var loss_dp;         // L_2D + gamma * L_dis
    GeneratorVars gen_vars;
    ModelVars est_vars, disc_vars;
};

inline ChainGraph build_chain(const AdversarialModels& models, const ChainBatch& batch,
                              const ChainSettings& s, const SkeletonGraph& sg,
                              ChainSide trainable) {
    using namespace ad;
    const int J = models.estimator.joints;
    const bool train_gen = trainable == ChainSide::generators;
    const bool train_ed = trainable == ChainSide::estimator_discriminator;

    ChainGraph g;
    g.est_vars = lift(models.estimator.net, train_ed);
    g.gen_vars = lift(models.generators, train_gen);
    g.disc_vars = lift(models.discriminator, train_ed);

    Var yhat_seq_mm =
        scale(lifting_seq_graph(models.estimator, g.est_vars, batch.clips_norm), 1000.0);
    Var ytilde_mm = augment_graph(models.generators, g.gen_vars, yhat_seq_mm,
                                  constant(batch.priors_px), sg, s.frames, kMetersPerMm,
                                  1.0 / s.pixel_scale);
    Var yhat_mm = slice_cols(yhat_seq_mm, static_cast<std::size_t>(s.frames / 2) * J * 3,
                             static_cast<std::size_t>(J) * 3);

    g.l3d = loss_3d_graph(scale(yhat_mm, kMetersPerMm), scale(ytilde_mm, kMetersPerMm));

    Var xt_px = project_graph(ytilde_mm, s.camera, sg);
    Var xn = chain_detail::normalize_px(constant(batch.x_px), s.camera, s.pixel_scale, J);
    Var xtn = chain_detail::normalize_px(xt_px, s.camera, s.pixel_scale, J);
    g.l2d = loss_2d_graph(xn, xtn);

    g.loss_g = g.l3d;
    g.loss_dp = g.l2d;
    if (s.use_ldis) {
        // The generator side differentiates the critic term through the
        // augmented samples; the discriminator side treats them as drawn
        // samples unless explicitly coupled.
        Var xtn_critic = (train_ed && !s.couple_estimator_to_critic) ? stop_grad(xtn) : xtn;
        g.ldis = loss_dis_graph(xn, xtn_critic, models.discriminator, g.disc_vars,
                                s.weights.alpha, s.penalty, constant(batch.epsilons),
                                s.swap_critic_sign);
        g.loss_g = sub(g.loss_g, scale(g.ldis, s.weights.beta));
        g.loss_dp = add(g.loss_dp, scale(g.ldis, s.weights.gamma));
    }
    return g;
}

struct ChainLosses {
    double l3d = 0.0, l2d = 0.0, ldis = 0.0, total = 0.0;
};

/// Generator update on L_G. Estimator and discriminator stay frozen;
/// gradients reach the encoder/generator stack only.
inline ChainLosses generator_step(AdversarialModels& models, const ChainBatch& batch,
                                  const ChainSettings& s, const SkeletonGraph& sg,
                                  std::vector<OptimizerState>& gen_opts) {
    ChainGraph g = build_chain(models, batch, s, sg, ChainSide::generators);
    ChainLosses out{g.l3d->value.item(), g.l2d->value.item(),
                    g.ldis ? g.ldis->value.item() : 0.0, g.loss_g->value.item()};
    std::vector<ad::Var> gs = ad::grad(g.loss_g, g.gen_vars.ordered);
    auto model_ptrs = models.generators.models();
    if (gen_opts.empty()) gen_opts.resize(model_ptrs.size());
    std::size_t cursor = 0;
    for (std::size_t m = 0; m < model_ptrs.size(); ++m) {
        std::vector<std::pair<std::string, Tensor>> grads;
        for (const auto& [name, t] : model_ptrs[m]->params)
            grads.emplace_back(name, gs[cursor++]->value);
        optimizer_step(gen_opts[m], *model_ptrs[m], grads);
    }
    return out;
}

/// Discriminator + estimator update on L_DP. Generators stay frozen;
/// gradients flow through the augmentation into the estimator and into
/// the critic (including the penalty's double-backward).
inline ChainLosses estimator_discriminator_step(AdversarialModels& models,
                                                const ChainBatch& batch,
                                                const ChainSettings& s,
                                                const SkeletonGraph& sg,
                                                OptimizerState& est_opt,
                                                OptimizerState& disc_opt) {
    ChainGraph g = build_chain(models, batch, s, sg, ChainSide::estimator_discriminator);
    ChainLosses out{g.l3d->value.item(), g.l2d->value.item(),
                    g.ldis ? g.ldis->value.item() : 0.0, g.loss_dp->value.item()};

    std::vector<ad::Var> est_gs = ad::grad(g.loss_dp, g.est_vars.ordered);
    std::vector<std::pair<std::string, Tensor>> est_grads;
    for (std::size_t i = 0; i < est_gs.size(); ++i)
        est_grads.emplace_back(models.estimator.net.params[i].first, est_gs[i]->value);
    optimizer_step(est_opt, models.estimator.net, est_grads);

    if (s.use_ldis) {
        std::vector<ad::Var> disc_gs = ad::grad(g.loss_dp, g.disc_vars.ordered);
        std::vector<std::pair<std::string, Tensor>> disc_grads;
        for (std::size_t i = 0; i < disc_gs.size(); ++i)
            disc_grads.emplace_back(models.discriminator.params[i].first, disc_gs[i]->value);
        optimizer_step(disc_opt, models.discriminator, disc_grads);
    }
    return out;
}

/// L_G = L_3D - beta * L_dis evaluated on a frozen batch, no updates.
inline double loss_generator(const AdversarialModels& models, const std::vector<Clip2D>& clips,
                             const std::vector<Pose2D>& priors, const ChainSettings& s,
                             std::uint64_t seed) {
    Rng rng(seed);
    const SkeletonGraph sg(canonical_skeleton());
    ChainBatch batch = make_chain_batch(clips, priors, models.estimator.norm, rng);
    return build_chain(models, batch, s, sg, ChainSide::none).loss_g->value.item();
}

/// L_DP = L_2D + gamma * L_dis evaluated on a frozen batch, no updates.
inline double loss_estimator_discriminator(const AdversarialModels& models,
                                           const std::vector<Clip2D>& clips,
                                           const std::vector<Pose2D>& priors,
                                           const ChainSettings& s, std::uint64_t seed) {
    Rng rng(seed);
    const SkeletonGraph sg(canonical_skeleton());
    ChainBatch batch = make_chain_batch(clips, priors, models.estimator.norm, rng);
    return build_chain(models, batch, s, sg, ChainSide::none).loss_dp->value.item();
}

}  // namespace poselift

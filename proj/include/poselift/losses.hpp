#pragma once

#include <string>
#include <vector>

#include "poselift/model.hpp"
#include "poselift/pose.hpp"
#include "poselift/rng.hpp"

namespace poselift {

/// Trade-off weights of the adversarial game.
struct LossWeights {
    double alpha = 0.35;  // gradient-penalty weight
    double beta = 2.5;    // generator adversarial weight
    double gamma = 2.5;   // estimator/discriminator adversarial weight
};

enum class PenaltyMode { standard_gp, as_written };

inline PenaltyMode penalty_mode_from_string(const std::string& s) {
    if (s == "standard-gp") return PenaltyMode::standard_gp;
    if (s == "as-written") return PenaltyMode::as_written;
    throw ConfigError("penalty mode must be standard-gp or as-written, got " + s);
}

/// 2D pose critic: flattened pose -> scalar score.
inline ParamModel make_discriminator(int joints, int hidden, Rng& rng) {
    return make_mlp({joints * 2, hidden, hidden, 1}, "tanh", rng);
}

// ---- graph-level losses -----------------------------------------------

/// MSE plus the amplitude feedback term: per-sample mean absolute
/// difference m, batch mean of |1 - exp(m)|. Nonnegative; zero iff equal.
inline ad::Var loss_3d_graph(const ad::Var& y_hat, const ad::Var& y_tilde) {
    using namespace ad;
    check_same_shape(y_hat->value, y_tilde->value, "loss_3d");
    Var d = sub(y_hat, y_tilde);
    Var mse = mean_all(mul(d, d));
    Var m = row_mean(ad::abs(d));  // (B,1)
    Var feedback = mean_all(ad::abs(sub(constant(1.0), ad::exp(m))));
    return add(mse, feedback);
}

/// MSE plus the scale-free term |x/||x|| - x~/||x~|||_l1 (per-sample
/// Frobenius norms, mean abs reduction, batch mean).
inline ad::Var loss_2d_graph(const ad::Var& x, const ad::Var& x_tilde) {
    using namespace ad;
    check_same_shape(x->value, x_tilde->value, "loss_2d");
    Var d = sub(x, x_tilde);
    Var mse = mean_all(mul(d, d));
    Var nx = ad::sqrt(row_sum(mul(x, x)));
    Var nt = ad::sqrt(row_sum(mul(x_tilde, x_tilde)));
    for (double v : nx->value.data)
        if (v <= 0.0) throw ZeroNormPose("loss_2d: zero-norm original pose");
    for (double v : nt->value.data)
        if (v <= 0.0) throw ZeroNormPose("loss_2d: zero-norm augmented pose");
    Var nd = mean_all(row_mean(ad::abs(sub(div(x, nx), div(x_tilde, nt)))));
    return add(mse, nd);
}

/// Critic objective: E[D(x)] - E[D(x~)] + alpha * penalty on the
/// real/augmented interpolation k. `epsilons` is the (B,1) draw; the
/// penalty gradient is taken w.r.t. k inside the graph, so the result
/// stays differentiable w.r.t. everything upstream.
inline ad::Var loss_dis_graph(const ad::Var& x, const ad::Var& x_tilde,
                              const ParamModel& disc, const ModelVars& disc_vars,
                              double alpha, PenaltyMode mode, const ad::Var& epsilons,
                              bool swap_critic_sign = false) {
    using namespace ad;
    check_same_shape(x->value, x_tilde->value, "loss_dis");
    if (epsilons->value.rows != x->value.rows || epsilons->value.cols != 1)
        throw ShapeMismatch("loss_dis: epsilons must be (batch,1)");

    Var gap = sub(mean_all(mlp_forward(disc, disc_vars, x)),
                  mean_all(mlp_forward(disc, disc_vars, x_tilde)));
    if (swap_critic_sign) gap = neg(gap);

    Var k = add(mul(epsilons, x), mul(sub(constant(1.0), epsilons), x_tilde));
    k->requires_grad = true;  // interpolation point is differentiated against
    Var s = sum_all(mlp_forward(disc, disc_vars, k));
    Var gk = grad(s, {k})[0];
    Var gn = ad::sqrt(row_sum(mul(gk, gk)));  // (B,1), exact at zero
    Var penalty;
    if (mode == PenaltyMode::standard_gp) {
        Var dm = sub(gn, constant(1.0));
        penalty = mean_all(mul(dm, dm));
    } else {
        penalty = mean_all(sub(constant(1.0), gn));
    }
    return add(gap, scale(penalty, alpha));
}

// ---- value-level operations (spec units) -----------------------------------

namespace detail {
inline Tensor poses3_to_tensor(const std::vector<Pose3D>& ps) {
    if (ps.empty()) throw ShapeMismatch("empty pose batch");
    Tensor t(ps.size(), ps[0].xyz.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (ps[i].xyz.size() != ps[0].xyz.size()) throw SkeletonMismatch("pose batch");
        for (std::size_t j = 0; j < ps[i].xyz.size(); ++j) t.at(i, j) = ps[i].xyz[j];
    }
    return t;
}
inline Tensor poses2_to_tensor(const std::vector<Pose2D>& ps) {
    if (ps.empty()) throw ShapeMismatch("empty pose batch");
    Tensor t(ps.size(), ps[0].uv.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (ps[i].uv.size() != ps[0].uv.size()) throw SkeletonMismatch("pose batch");
        for (std::size_t j = 0; j < ps[i].uv.size(); ++j) t.at(i, j) = ps[i].uv[j];
    }
    return t;
}
}  // namespace detail

inline double loss_3d(const Pose3D& y_hat, const Pose3D& y_tilde) {
    if (y_hat.joints() != y_tilde.joints()) throw SkeletonMismatch("loss_3d");
    return loss_3d_graph(ad::constant(Tensor::row(y_hat.xyz)),
                         ad::constant(Tensor::row(y_tilde.xyz)))
        ->value.item();
}

inline double loss_2d(const Pose2D& x, const Pose2D& x_tilde) {
    if (x.joints() != x_tilde.joints()) throw SkeletonMismatch("loss_2d");
    return loss_2d_graph(ad::constant(Tensor::row(x.uv)),
                         ad::constant(Tensor::row(x_tilde.uv)))
        ->value.item();
}

/// Batch critic loss with per-element epsilon draws from `seed`.
inline double loss_dis(const std::vector<Pose2D>& x, const std::vector<Pose2D>& x_tilde,
                       const ParamModel& disc, double alpha, std::uint64_t seed,
                       PenaltyMode mode = PenaltyMode::standard_gp) {
    if (x.size() != x_tilde.size()) throw ShapeMismatch("loss_dis: batch sizes differ");
    Rng rng(seed);
    Tensor eps(x.size(), 1);
    for (double& e : eps.data) e = rng.uniform();
    ModelVars dv = lift(disc, false);
    return loss_dis_graph(ad::constant(detail::poses2_to_tensor(x)),
                          ad::constant(detail::poses2_to_tensor(x_tilde)), disc, dv, alpha,
                          mode, ad::constant(std::move(eps)))
        ->value.item();
}

}  // namespace poselift

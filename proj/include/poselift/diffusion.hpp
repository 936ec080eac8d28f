#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "poselift/model.hpp"
#include "poselift/optim.hpp"
#include "poselift/pose.hpp"
#include "poselift/rng.hpp"

namespace poselift {

/// Linear-beta noise schedule with cumulative products. alpha_bar(0) = 1.
struct DiffusionSchedule {
    int T = 400;
    std::vector<double> beta;       // beta[k-1] for step k in [1, T]
    std::vector<double> alpha_bar;  // alpha_bar[k] for k in [0, T]

    static DiffusionSchedule linear(int T = 400, double beta_start = 1e-4,
                                    double beta_end = 0.02) {
        if (T < 1) throw ConfigError("schedule needs T >= 1");
        DiffusionSchedule s;
        s.T = T;
        s.alpha_bar.assign(static_cast<std::size_t>(T) + 1, 1.0);
        for (int k = 1; k <= T; ++k) {
            const double b =
                T == 1 ? beta_start
                       : beta_start + (beta_end - beta_start) * (k - 1) / double(T - 1);
            s.beta.push_back(b);
            s.alpha_bar[k] = s.alpha_bar[k - 1] * (1.0 - b);
        }
        s.validate();
        return s;
    }

    void validate() const {
        for (int k = 1; k <= T; ++k) {
            const double b = beta[k - 1];
            if (!(b > 0.0 && b < 1.0)) throw ConfigError("beta out of (0,1)");
            if (k > 1 && !(b > beta[k - 2])) throw ConfigError("beta must increase");
            if (!(alpha_bar[k] < alpha_bar[k - 1])) throw ConfigError("alpha_bar not decreasing");
            if (!(alpha_bar[k] > 0.0 && alpha_bar[k] < 1.0))
                throw ConfigError("alpha_bar out of (0,1)");
        }
    }

    double abar(int k) const {
        if (k < 0 || k > T) throw StepOutOfRange("alpha_bar index " + std::to_string(k));
        return alpha_bar[static_cast<std::size_t>(k)];
    }

    std::uint64_t hash() const {
        std::string key = "linear:" + std::to_string(T);
        for (double b : {beta.front(), beta.back()}) key += ":" + std::to_string(b);
        return fnv1a(key);
    }
};

/// DDIM per-step noise scale.
inline double ddim_sigma(double eta, double abar_prev, double abar_k) {
    return eta * std::sqrt((1.0 - abar_prev) / (1.0 - abar_k)) *
           std::sqrt(1.0 - abar_k / abar_prev);
}

/// Noise predictor over root-centered, RMS-normalized 2D poses. The
/// normalization constant travels with the model.
struct NoisePredictor {
    ParamModel net;  // input: pose dims + timestep embedding, output: pose dims
    int joints = 16;
    int t_embed_dim = 32;
    double norm_rms = 1.0;
    bool trained = false;
    std::uint64_t schedule_hash = 0;
    int domains_seen = 0;
};

inline NoisePredictor make_noise_predictor(int joints, int hidden, int depth, Rng& rng,
                                           int t_embed_dim = 32) {
    NoisePredictor np;
    np.joints = joints;
    np.t_embed_dim = t_embed_dim;
    std::vector<int> sizes{joints * 2 + t_embed_dim};
    for (int i = 0; i < depth; ++i) sizes.push_back(hidden);
    sizes.push_back(joints * 2);
    np.net = make_mlp(sizes, "tanh", rng);
    return np;
}

/// Sinusoidal embedding of the integer step, deterministic in k.
inline std::vector<double> timestep_embedding(int k, int dim) {
    std::vector<double> e(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim / 2; ++i) {
        const double freq = std::pow(10000.0, -2.0 * i / dim);
        e[2 * i] = std::sin(k * freq);
        e[2 * i + 1] = std::cos(k * freq);
    }
    return e;
}

/// Batched predictor evaluation: rows of x paired with per-row steps.
inline Tensor predict_noise(const NoisePredictor& np, const Tensor& x,
                            const std::vector<int>& steps) {
    if (x.rows != steps.size()) throw ShapeMismatch("predict_noise: step count");
    Tensor in(x.rows, x.cols + np.t_embed_dim);
    for (std::size_t r = 0; r < x.rows; ++r) {
        for (std::size_t c = 0; c < x.cols; ++c) in.at(r, c) = x.at(r, c);
        const auto emb = timestep_embedding(steps[r], np.t_embed_dim);
        for (int c = 0; c < np.t_embed_dim; ++c) in.at(r, x.cols + c) = emb[c];
    }
    return forward(np.net, in);
}

/// Closed-form forward corruption x_k = sqrt(abar_k) x0 + sqrt(1-abar_k) eps.
inline Pose2D forward_noise(const Pose2D& x0, int k, const Pose2D& noise,
                            const DiffusionSchedule& sched) {
    if (k < 1 || k > sched.T) throw StepOutOfRange("forward_noise step " + std::to_string(k));
    if (x0.joints() != noise.joints()) throw ShapeMismatch("forward_noise: noise shape");
    const double a = std::sqrt(sched.abar(k));
    const double b = std::sqrt(1.0 - sched.abar(k));
    Pose2D out(x0.joints());
    for (std::size_t i = 0; i < out.uv.size(); ++i) out.uv[i] = a * x0.uv[i] + b * noise.uv[i];
    return out;
}

struct DiffusionTrainReport {
    std::vector<double> epoch_loss;
};

/// Denoising pretraining on a domain's 2D poses (root-centered pixels).
/// Initialized from `init` (inherited across phases); `init` itself is
/// not modified. Zero epochs returns init unchanged.
inline NoisePredictor train_sampler(const std::vector<Pose2D>& domain_poses,
                                    const NoisePredictor& init, const DiffusionSchedule& sched,
                                    int epochs, int batch_size, double lr, Rng& rng,
                                    DiffusionTrainReport* report = nullptr) {
    if (domain_poses.empty()) throw EmptyDomain("train_sampler: no poses");
    NoisePredictor np = init;
    np.schedule_hash = sched.hash();
    if (epochs <= 0) return np;

    // Root-center and estimate the normalization RMS on this domain.
    const std::size_t dims = static_cast<std::size_t>(np.joints) * 2;
    std::vector<std::vector<double>> data;
    double sq = 0.0;
    for (const Pose2D& p : domain_poses) {
        if (p.uv.size() != dims) throw ShapeMismatch("train_sampler: pose dims");
        Pose2D c = root_center(p);
        for (double v : c.uv) sq += v * v;
        data.push_back(std::move(c.uv));
    }
    const double rms = std::sqrt(sq / (double(data.size()) * dims));
    np.norm_rms = rms > 0.0 ? rms : 1.0;
    for (auto& row : data)
        for (double& v : row) v /= np.norm_rms;

    OptimizerState opt = OptimizerState::adam(lr);
    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (int e = 0; e < epochs; ++e) {
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        double accum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t bsz = std::min(n - start, static_cast<std::size_t>(batch_size));
            Tensor xk(bsz, dims), eps(bsz, dims), emb(bsz, static_cast<std::size_t>(np.t_embed_dim));
            for (std::size_t i = 0; i < bsz; ++i) {
                const auto& x0 = data[order[start + i]];
                const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(sched.T))) + 1;
                const double a = std::sqrt(sched.abar(k));
                const double bnoise = std::sqrt(1.0 - sched.abar(k));
                const auto embk = timestep_embedding(k, np.t_embed_dim);
                for (std::size_t c = 0; c < dims; ++c) {
                    eps.at(i, c) = rng.gaussian();
                    xk.at(i, c) = a * x0[c] + bnoise * eps.at(i, c);
                }
                for (int c = 0; c < np.t_embed_dim; ++c) emb.at(i, c) = embk[c];
            }
            ModelVars vars = lift(np.net, true);
            ad::Var in = ad::concat_cols({ad::constant(std::move(xk)), ad::constant(std::move(emb))});
            ad::Var pred = mlp_forward(np.net, vars, in);
            ad::Var d = ad::sub(ad::constant(std::move(eps)), pred);
            ad::Var loss = ad::mean_all(ad::mul(d, d));
            std::vector<ad::Var> gs = ad::grad(loss, vars.ordered);
            std::vector<std::pair<std::string, Tensor>> grads;
            for (std::size_t i = 0; i < gs.size(); ++i)
                grads.emplace_back(np.net.params[i].first, gs[i]->value);
            optimizer_step(opt, np.net, grads);
            accum += loss->value.item();
            ++batches;
        }
        if (report) report->epoch_loss.push_back(batches ? accum / batches : 0.0);
    }
    np.trained = true;
    np.domains_seen = init.domains_seen + 1;
    return np;
}

/// Truncated DDIM sampling: S evenly spaced steps over [1, T], descending.
/// Per-prior noise streams are derived from (seed, index), so prior i does
/// not depend on n. Returns de-normalized root-centered 2D poses.
inline std::vector<Pose2D> ddim_sample(std::size_t n, int steps, double eta,
                                       const NoisePredictor& np, const DiffusionSchedule& sched,
                                       std::uint64_t seed, bool allow_untrained = false) {
    if (steps < 1 || steps > sched.T)
        throw StepOutOfRange("ddim_sample steps " + std::to_string(steps));
    if (!np.trained && !allow_untrained)
        throw UntrainedPredictor("ddim_sample: predictor has not been trained");

    std::vector<int> ks(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
        ks[i] = std::max(1, static_cast<int>(std::llround(double(i + 1) * sched.T / steps)));

    const std::size_t dims = static_cast<std::size_t>(np.joints) * 2;
    std::vector<Rng> streams;
    streams.reserve(n);
    for (std::size_t i = 0; i < n; ++i) streams.emplace_back(derive_seed(seed, i));

    Tensor x(n, dims);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < dims; ++c) x.at(i, c) = streams[i].gaussian();

    for (int s = steps - 1; s >= 0; --s) {
        const int k = ks[s];
        const int k_prev = s > 0 ? ks[s - 1] : 0;
        const double ab_k = sched.abar(k);
        const double ab_prev = sched.abar(k_prev);
        const double sg = ddim_sigma(eta, ab_prev, ab_k);
        const double dir = std::sqrt(std::max(0.0, 1.0 - ab_prev - sg * sg));
        const Tensor eps_pred = predict_noise(np, x, std::vector<int>(n, k));
        Tensor next(n, dims);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < dims; ++c) {
                const double e = eps_pred.at(i, c);
                const double x0_hat = (x.at(i, c) - std::sqrt(1.0 - ab_k) * e) / std::sqrt(ab_k);
                const double z = (eta > 0.0 && k_prev > 0) ? streams[i].gaussian() : 0.0;
                next.at(i, c) = std::sqrt(ab_prev) * x0_hat + dir * e + sg * z;
            }
        x = std::move(next);
    }

    std::vector<Pose2D> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Pose2D p(np.joints);
        for (std::size_t c = 0; c < dims; ++c) p.uv[c] = x.at(i, c) * np.norm_rms;
        out.push_back(std::move(p));
    }
    return out;
}

/// Pre-generated priors for one adaptation phase.
struct PriorPool {
    std::vector<Pose2D> priors;

    const Pose2D& draw(Rng& rng) const {
        if (priors.empty()) throw ConfigError("prior pool is empty");
        return priors[rng.below(priors.size())];
    }
};

/// steps == 0 yields raw gaussian noise priors (the no-sampling baseline).
inline PriorPool sampler_pool(const NoisePredictor& np, const DiffusionSchedule& sched,
                              std::size_t pool_size, int steps, double eta,
                              std::uint64_t seed) {
    if (pool_size == 0)
        throw ConfigError("sampler_pool: pool_size must be positive when priors are enabled");
    PriorPool pool;
    if (steps == 0) {
        const std::size_t dims = static_cast<std::size_t>(np.joints) * 2;
        for (std::size_t i = 0; i < pool_size; ++i) {
            Rng r(derive_seed(seed, i));
            Pose2D p(np.joints);
            for (std::size_t c = 0; c < dims; ++c) p.uv[c] = r.gaussian() * np.norm_rms;
            pool.priors.push_back(std::move(p));
        }
        return pool;
    }
    pool.priors = ddim_sample(pool_size, steps, eta, np, sched, seed);
    return pool;
}

}  // namespace poselift

#include "test_support.hpp"

#include "poselift/adversarial.hpp"
#include "poselift/losses.hpp"

using namespace poselift;
using test_support::random_pose;
using test_support::random_pose2d;

TEST_CASE("3D alignment loss", "[losses]") {
    Rng rng(51);

    SECTION("identity gives exactly zero") {
        Pose3D p = random_pose(rng);
        REQUIRE(loss_3d(p, p) == 0.0);
    }
    SECTION("feedback term closed form at mean abs diff ln 2") {
        // build poses whose per-coordinate |diff| is ln 2 everywhere, and
        // kill the MSE contribution by checking the feedback term alone
        Pose3D a(16), b(16);
        const double d = std::log(2.0);
        for (int i = 0; i < 48; ++i) b.xyz[i] = a.xyz[i] + d;
        const double total = loss_3d(a, b);
        const double mse = d * d;  // every coordinate differs by d
        REQUIRE(total - mse == Catch::Approx(1.0).epsilon(1e-12));  // |1 - exp(ln 2)| = 1
    }
    SECTION("symmetric in its arguments") {
        for (int it = 0; it < 20; ++it) {
            Pose3D a = random_pose(rng), b = random_pose(rng);
            // meters-scale copies keep exp() in range
            for (double& v : a.xyz) v *= 1e-3;
            for (double& v : b.xyz) v *= 1e-3;
            REQUIRE(loss_3d(a, b) == Catch::Approx(loss_3d(b, a)).margin(1e-12));
        }
    }
    SECTION("nonnegative everywhere") {
        for (int it = 0; it < 50; ++it) {
            Pose3D a = random_pose(rng), b = random_pose(rng);
            for (double& v : a.xyz) v *= 1e-3;
            for (double& v : b.xyz) v *= 1e-3;
            REQUIRE(loss_3d(a, b) >= 0.0);
        }
    }
    SECTION("skeleton mismatch throws") {
        Pose3D a = random_pose(rng);
        Pose3D b(8);
        REQUIRE_THROWS_AS(loss_3d(a, b), SkeletonMismatch);
    }
}

TEST_CASE("2D alignment loss", "[losses]") {
    Rng rng(52);

    SECTION("identity gives exactly zero") {
        Pose2D x = random_pose2d(rng);
        REQUIRE(loss_2d(x, x) == 0.0);
    }
    SECTION("positive rescaling zeroes the normalized term") {
        Pose2D x = random_pose2d(rng);
        Pose2D x2 = x;
        for (double& v : x2.uv) v *= 2.0;
        // total = MSE(x, 2x) exactly: the scale-free term vanishes
        double mse = 0.0;
        for (std::size_t i = 0; i < x.uv.size(); ++i) {
            const double d = x.uv[i] - x2.uv[i];
            mse += d * d;
        }
        mse /= x.uv.size();
        REQUIRE(loss_2d(x, x2) == Catch::Approx(mse).epsilon(1e-12));
    }
    SECTION("matches an independent recomputation of both terms") {
        for (int it = 0; it < 30; ++it) {
            Pose2D x = random_pose2d(rng), y = random_pose2d(rng);
            double mse = 0.0, nx = 0.0, ny = 0.0;
            for (std::size_t i = 0; i < x.uv.size(); ++i) {
                const double d = x.uv[i] - y.uv[i];
                mse += d * d;
                nx += x.uv[i] * x.uv[i];
                ny += y.uv[i] * y.uv[i];
            }
            mse /= x.uv.size();
            nx = std::sqrt(nx);
            ny = std::sqrt(ny);
            double l1 = 0.0;
            for (std::size_t i = 0; i < x.uv.size(); ++i)
                l1 += std::abs(x.uv[i] / nx - y.uv[i] / ny);
            l1 /= x.uv.size();
            REQUIRE(loss_2d(x, y) ==
                    Catch::Approx(mse + l1).epsilon(1e-12).margin(1e-12));
        }
    }
    SECTION("zero-norm pose throws") {
        Pose2D x = random_pose2d(rng);
        Pose2D z(16);  // all-zero
        REQUIRE_THROWS_AS(loss_2d(z, x), ZeroNormPose);
        REQUIRE_THROWS_AS(loss_2d(x, z), ZeroNormPose);
    }
}

TEST_CASE("critic loss", "[losses]") {
    Rng rng(53);

    SECTION("constant critic: as-written penalty equals alpha exactly") {
        ParamModel disc = make_discriminator(16, 12, rng);
        for (auto& [n, t] : disc.params)
            for (double& v : t.data) v = 0.0;
        disc.params.back().second.data[0] = 2.5;  // output bias: D == 2.5
        std::vector<Pose2D> x, xt;
        for (int i = 0; i < 8; ++i) {
            x.push_back(random_pose2d(rng));
            xt.push_back(random_pose2d(rng));
        }
        const double v = loss_dis(x, xt, disc, 0.35, 7, PenaltyMode::as_written);
        REQUIRE(v == 0.35);
        // standard two-sided penalty of a zero gradient is also 1
        const double vs = loss_dis(x, xt, disc, 0.35, 7, PenaltyMode::standard_gp);
        REQUIRE(vs == 0.35);
    }

    SECTION("unit-norm linear critic: penalty vanishes in both modes") {
        // D(x) = w.x with ||w|| = 1
        ParamModel disc = make_mlp({32, 1}, "tanh", rng);
        Tensor& w = disc.params[0].second;
        double n = 0.0;
        for (double& v : w.data) {
            v = rng.gaussian();
            n += v * v;
        }
        n = std::sqrt(n);
        for (double& v : w.data) v /= n;
        disc.params[1].second.data[0] = 0.0;

        std::vector<Pose2D> x, xt;
        for (int i = 0; i < 16; ++i) {
            x.push_back(random_pose2d(rng, 16, 1.0));
            xt.push_back(random_pose2d(rng, 16, 1.0));
        }
        // expected critic gap: w.(mean x - mean xt)
        std::vector<double> mx(32, 0.0), mt(32, 0.0);
        for (int i = 0; i < 16; ++i)
            for (int c = 0; c < 32; ++c) {
                mx[c] += x[i].uv[c] / 16.0;
                mt[c] += xt[i].uv[c] / 16.0;
            }
        double gap = 0.0;
        for (int c = 0; c < 32; ++c) gap += w.data[c] * (mx[c] - mt[c]);
        for (PenaltyMode mode : {PenaltyMode::as_written, PenaltyMode::standard_gp}) {
            const double v = loss_dis(x, xt, disc, 0.35, 11, mode);
            REQUIRE(v == Catch::Approx(gap).margin(1e-9));
        }
    }

    SECTION("epsilon = 1 makes the interpolation the real sample") {
        Rng erng(3);
        Tensor eps(4, 1, 1.0);
        ParamModel disc = make_discriminator(16, 8, rng);
        std::vector<Pose2D> xs, xts;
        for (int i = 0; i < 4; ++i) {
            xs.push_back(random_pose2d(rng, 16, 1.0));
            xts.push_back(random_pose2d(rng, 16, 1.0));
        }
        Tensor xt_t(4, 32), x_t(4, 32);
        for (int i = 0; i < 4; ++i)
            for (int c = 0; c < 32; ++c) {
                x_t.at(i, c) = xs[i].uv[c];
                xt_t.at(i, c) = xts[i].uv[c];
            }
        ModelVars dv = lift(disc, false);
        // interpolation with eps=1 must equal the penalty computed at x
        ad::Var k_direct = ad::constant(x_t);
        k_direct->requires_grad = true;
        ad::Var s1 = ad::sum_all(mlp_forward(disc, dv, k_direct));
        ad::Var g1 = ad::grad(s1, {k_direct})[0];
        const double lhs =
            loss_dis_graph(ad::constant(x_t), ad::constant(xt_t), disc, dv, 1.0,
                           PenaltyMode::as_written, ad::constant(eps))
                ->value.item();
        // recompute: gap + 1 - mean row norm of g1
        ad::Var gap = ad::sub(ad::mean_all(mlp_forward(disc, dv, ad::constant(x_t))),
                              ad::mean_all(mlp_forward(disc, dv, ad::constant(xt_t))));
        ad::Var gn = ad::sqrt(ad::row_sum(ad::mul(g1, g1)));
        const double rhs = gap->value.item() + 1.0 - ad::mean_all(gn)->value.item();
        REQUIRE(lhs == Catch::Approx(rhs).margin(1e-12));
    }

    SECTION("penalty gradients match finite differences (double backward)") {
        Rng prng(8);
        ParamModel disc = make_mlp({6, 10, 1}, "tanh", prng);
        Tensor x_t(5, 6), xt_t(5, 6), eps(5, 1);
        for (double& v : x_t.data) v = prng.gaussian();
        for (double& v : xt_t.data) v = prng.gaussian();
        for (double& v : eps.data) v = prng.uniform();
        for (PenaltyMode mode : {PenaltyMode::standard_gp, PenaltyMode::as_written}) {
            auto build = [&](const ModelVars& vars) {
                return loss_dis_graph(ad::constant(x_t), ad::constant(xt_t), disc, vars, 0.35,
                                      mode, ad::constant(eps));
            };
            auto analytic = gradient(disc, build);
            auto numeric = fd_gradient(disc, build);
            REQUIRE(gradient_rel_error(analytic, numeric) < 1e-4);
        }
    }

    SECTION("swap-critic-sign flips only the gap term") {
        Rng prng(9);
        ParamModel disc = make_mlp({32, 8, 1}, "tanh", prng);
        std::vector<Pose2D> x, xt;
        for (int i = 0; i < 6; ++i) {
            x.push_back(random_pose2d(prng, 16, 1.0));
            xt.push_back(random_pose2d(prng, 16, 1.0));
        }
        Tensor eps(6, 1);
        Rng erng(13);
        for (double& v : eps.data) v = erng.uniform();
        ModelVars dv = lift(disc, false);
        auto make = [&](bool swap) {
            Tensor x_t(6, 32), xt_t(6, 32);
            for (int i = 0; i < 6; ++i)
                for (int c = 0; c < 32; ++c) {
                    x_t.at(i, c) = x[i].uv[c];
                    xt_t.at(i, c) = xt[i].uv[c];
                }
            return loss_dis_graph(ad::constant(x_t), ad::constant(xt_t), disc, dv, 0.0,
                                  PenaltyMode::standard_gp, ad::constant(eps), swap)
                ->value.item();
        };
        REQUIRE(make(false) == Catch::Approx(-make(true)).margin(1e-12));
    }
}

TEST_CASE("composite objectives", "[losses]") {
    Rng rng(54);
    const Skeleton& skel = canonical_skeleton();

    // a tiny but complete adversarial stack
    auto make_models = [&](Rng& r) {
        AdversarialModels m;
        NormalizeSpec norm;
        m.estimator = make_lifting(9, 16, 12, norm, r);
        GeneratorConfig gc;
        gc.hidden = 12;
        m.generators = make_generators(gc, skel, r);
        m.discriminator = make_discriminator(16, 12, r);
        return m;
    };
    auto make_batch = [&](Rng& r, int n) {
        std::vector<Clip2D> clips;
        for (int i = 0; i < n; ++i) {
            Clip2D c;
            for (int t = 0; t < 9; ++t) {
                Pose2D p(16);
                for (int j = 0; j < 16; ++j) {
                    p.u(j) = 500.0 + 60.0 * r.gaussian();
                    p.v(j) = 500.0 + 60.0 * r.gaussian();
                }
                c.frames.push_back(p);
            }
            clips.push_back(c);
        }
        return clips;
    };
    auto make_priors = [&](Rng& r, int n) {
        std::vector<Pose2D> ps;
        for (int i = 0; i < n; ++i) ps.push_back(random_pose2d(r, 16, 40.0));
        return ps;
    };

    SECTION("beta = 0 reduces L_G to L_3D; gamma = 0 reduces L_DP to L_2D") {
        AdversarialModels m = make_models(rng);
        auto clips = make_batch(rng, 4);
        auto priors = make_priors(rng, 4);
        ChainSettings s;
        s.frames = 9;
        s.weights = LossWeights{0.35, 0.0, 0.0};

        const SkeletonGraph sg(skel);
        Rng brng(5);
        ChainBatch batch = make_chain_batch(clips, priors, m.estimator.norm, brng);
        ChainGraph g = build_chain(m, batch, s, sg, ChainSide::none);
        REQUIRE(g.loss_g->value.item() == g.l3d->value.item());
        REQUIRE(g.loss_dp->value.item() == g.l2d->value.item());
    }

    SECTION("identity generators: L_3D = 0 and L_G = -beta L_dis") {
        AdversarialModels m = make_models(rng);  // heads are zero-initialised
        auto clips = make_batch(rng, 4);
        auto priors = make_priors(rng, 4);
        ChainSettings s;
        s.frames = 9;
        const SkeletonGraph sg(skel);
        Rng brng(6);
        ChainBatch batch = make_chain_batch(clips, priors, m.estimator.norm, brng);
        ChainGraph g = build_chain(m, batch, s, sg, ChainSide::none);
        REQUIRE(g.l3d->value.item() == 0.0);
        REQUIRE(g.loss_g->value.item() ==
                Catch::Approx(-s.weights.beta * g.ldis->value.item()).margin(1e-12));
    }

    SECTION("generator-step gradients match finite differences on a tiny probe") {
        Rng prng(60);
        GeneratorConfig gc;
        gc.embed_jc = 4;
        gc.embed_bv = 4;
        gc.embed_ps_per_segment = 2;
        gc.embed_te = 3;
        gc.embed_de = 3;
        gc.hidden = 5;
        AdversarialModels m;
        NormalizeSpec norm;
        m.estimator = make_lifting(9, 16, 6, norm, prng);
        m.generators = make_generators(gc, skel, prng);
        m.discriminator = make_discriminator(16, 6, prng);
        // move generator heads off the identity so L_3D has curvature
        for (ParamModel* pm : m.generators.models())
            for (auto& [n, t] : pm->params)
                for (double& v : t.data) v += 0.05 * prng.gaussian();

        auto clips = make_batch(prng, 2);
        auto priors = make_priors(prng, 2);
        const SkeletonGraph sg(skel);
        Rng brng(7);
        ChainBatch batch = make_chain_batch(clips, priors, m.estimator.norm, brng);
        ChainSettings s;
        s.frames = 9;

        ParamModel flat;
        flat.desc = {{"kind", "bundle-probe"}};
        for (ParamModel* pm : m.generators.models())
            for (auto& [n, t] : pm->params) flat.params.emplace_back(n, t);
        auto build = [&](const ModelVars& vars) {
            AdversarialModels mm = m;
            GeneratorVars gv;
            std::size_t cursor = 0;
            for (ParamModel* pm : mm.generators.models()) {
                ModelVars mv;
                for (auto& [n, t] : pm->params) {
                    mv.ordered.push_back(vars.ordered[cursor]);
                    mv.by_name.emplace(n, vars.ordered[cursor]);
                    ++cursor;
                }
                gv.per_model.push_back(std::move(mv));
            }
            ModelVars ev = lift(mm.estimator.net, false);
            ModelVars dv = lift(mm.discriminator, false);
            ad::Var yhat_seq_mm = ad::scale(
                lifting_seq_graph(mm.estimator, ev, batch.clips_norm), 1000.0);
            ad::Var ytilde = augment_graph(mm.generators, gv, yhat_seq_mm,
                                           ad::constant(batch.priors_px), sg, 9, kMetersPerMm,
                                           1.0 / s.pixel_scale);
            ad::Var yhat = ad::slice_cols(yhat_seq_mm, 4 * 48, 48);
            ad::Var l3d = loss_3d_graph(ad::scale(yhat, 1e-3), ad::scale(ytilde, 1e-3));
            ad::Var xt = project_graph(ytilde, s.camera, sg);
            ad::Var xn = chain_detail::normalize_px(ad::constant(batch.x_px), s.camera,
                                                    s.pixel_scale, 16);
            ad::Var xtn = chain_detail::normalize_px(xt, s.camera, s.pixel_scale, 16);
            ad::Var ldis = loss_dis_graph(xn, xtn, mm.discriminator, dv, s.weights.alpha,
                                          s.penalty, ad::constant(batch.epsilons));
            return ad::sub(l3d, ad::scale(ldis, s.weights.beta));
        };
        auto analytic = gradient(flat, build);
        auto numeric = fd_gradient(flat, build, 1e-5);
        REQUIRE(gradient_rel_error(analytic, numeric) < 1e-4);
    }

    SECTION("one L_DP step decreases L_DP on a frozen batch") {
        Rng prng(61);
        AdversarialModels m = make_models(prng);
        // perturb heads: a non-identity operating point
        for (ParamModel* pm : m.generators.models())
            for (auto& [n, t] : pm->params)
                for (double& v : t.data) v += 0.03 * prng.gaussian();
        auto clips = make_batch(prng, 6);
        auto priors = make_priors(prng, 6);
        ChainSettings s;
        s.frames = 9;
        const SkeletonGraph sg(skel);
        Rng brng(8);
        ChainBatch batch = make_chain_batch(clips, priors, m.estimator.norm, brng);

        const double before =
            build_chain(m, batch, s, sg, ChainSide::none).loss_dp->value.item();
        OptimizerState est_opt = OptimizerState::adamw(5e-5);
        OptimizerState disc_opt = OptimizerState::adam(1e-4);
        estimator_discriminator_step(m, batch, s, sg, est_opt, disc_opt);
        const double after =
            build_chain(m, batch, s, sg, ChainSide::none).loss_dp->value.item();
        REQUIRE(after < before);
    }

    SECTION("alternating-step isolation: each step touches only its own side") {
        Rng prng(62);
        AdversarialModels m = make_models(prng);
        auto clips = make_batch(prng, 4);
        auto priors = make_priors(prng, 4);
        ChainSettings s;
        s.frames = 9;
        const SkeletonGraph sg(skel);
        Rng brng(9);
        ChainBatch batch = make_chain_batch(clips, priors, m.estimator.norm, brng);

        const std::uint64_t est0 = m.estimator.net.param_hash();
        const std::uint64_t disc0 = m.discriminator.param_hash();
        const std::uint64_t gen0 = m.generators.param_hash();

        std::vector<OptimizerState> gen_opts;
        generator_step(m, batch, s, sg, gen_opts);
        REQUIRE(m.estimator.net.param_hash() == est0);
        REQUIRE(m.discriminator.param_hash() == disc0);
        REQUIRE(m.generators.param_hash() != gen0);

        const std::uint64_t gen1 = m.generators.param_hash();
        OptimizerState est_opt = OptimizerState::adamw(5e-5);
        OptimizerState disc_opt = OptimizerState::adam(1e-4);
        estimator_discriminator_step(m, batch, s, sg, est_opt, disc_opt);
        REQUIRE(m.generators.param_hash() == gen1);
        REQUIRE(m.estimator.net.param_hash() != est0);
        REQUIRE(m.discriminator.param_hash() != disc0);
    }
}

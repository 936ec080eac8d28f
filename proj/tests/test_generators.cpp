#include "test_support.hpp"

#include "poselift/generator.hpp"
#include "poselift/metrics.hpp"

using namespace poselift;
using test_support::random_pose;
using test_support::static_clip;

namespace {

GeneratorBundle small_bundle(Rng& rng, GeneratorConfig cfg = {}) {
    cfg.hidden = 24;
    return make_generators(cfg, canonical_skeleton(), rng);
}

void fill_random(ParamModel& m, Rng& rng, double scale = 0.5) {
    for (auto& [n, t] : m.params)
        for (double& v : t.data) v = scale * rng.gaussian();
}

Clip3D wiggle_clip(Rng& rng, int frames) {
    Clip3D c;
    for (int t = 0; t < frames; ++t) c.frames.push_back(random_pose(rng));
    return c;
}

}  // namespace

TEST_CASE("encode_input", "[generators]") {
    const Skeleton& skel = canonical_skeleton();
    Rng rng(41);

    SECTION("zero-weight encoders produce an all-zero embedding of fixed length") {
        GeneratorBundle b = small_bundle(rng);
        for (ParamModel* m : b.models())
            for (auto& [n, t] : m->params)
                for (double& v : t.data) v = 0.0;
        Clip3D clip = static_clip(random_pose(rng), 9);
        Pose2D prior = test_support::random_pose2d(rng);
        GeneratorInput in = encode_input(clip, prior, b, skel);
        REQUIRE(in.concatenated.size() == static_cast<std::size_t>(b.cfg.embed_total()));
        for (double v : in.concatenated) REQUIRE(v == 0.0);
    }

    SECTION("disabling DE zeroes exactly that slice") {
        GeneratorConfig cfg;
        cfg.enable_de = false;
        GeneratorBundle b = small_bundle(rng, cfg);
        GeneratorConfig cfg_on;
        Rng rng2(41);  // same construction stream: identical encoder weights
        GeneratorBundle b_on = small_bundle(rng2, cfg_on);

        Clip3D clip = wiggle_clip(rng, 9);
        Pose2D prior = test_support::random_pose2d(rng);
        GeneratorInput off = encode_input(clip, prior, b, skel);
        GeneratorInput on = encode_input(clip, prior, b_on, skel);
        for (double v : off.de) REQUIRE(v == 0.0);
        // every other component identical (slice isolation)
        REQUIRE(off.jc == on.jc);
        REQUIRE(off.bv == on.bv);
        REQUIRE(off.ps == on.ps);
        REQUIRE(off.te == on.te);
    }

    SECTION("disabling PS and TE zeroes exactly those slices") {
        GeneratorConfig cfg;
        cfg.enable_ps = false;
        cfg.enable_te = false;
        GeneratorBundle b = small_bundle(rng, cfg);
        Clip3D clip = wiggle_clip(rng, 9);
        Pose2D prior = test_support::random_pose2d(rng);
        GeneratorInput in = encode_input(clip, prior, b, skel);
        for (double v : in.ps) REQUIRE(v == 0.0);
        for (double v : in.te) REQUIRE(v == 0.0);
        bool any = false;
        for (double v : in.jc) any = any || v != 0.0;
        REQUIRE(any);
    }

    SECTION("permuting non-center frames changes only the TE slice") {
        GeneratorBundle b = small_bundle(rng);
        Rng mrng(77);
        Clip3D clip = wiggle_clip(mrng, 9);
        Clip3D permuted = clip;
        std::swap(permuted.frames[0], permuted.frames[1]);
        std::swap(permuted.frames[7], permuted.frames[8]);  // center (4) untouched
        Pose2D prior = test_support::random_pose2d(mrng);
        GeneratorInput a = encode_input(clip, prior, b, skel);
        GeneratorInput c = encode_input(permuted, prior, b, skel);
        REQUIRE(a.jc == c.jc);
        REQUIRE(a.bv == c.bv);
        REQUIRE(a.ps == c.ps);
        REQUIRE(a.de == c.de);
        REQUIRE(a.te != c.te);
    }
}

TEST_CASE("temporal_pool", "[generators]") {
    Rng rng(42);

    SECTION("identical frames pool to that frame exactly") {
        GeneratorBundle b = small_bundle(rng);
        fill_random(b.temporal, rng);
        Pose3D p = random_pose(rng);
        Clip3D clip = static_clip(p, 27);
        Pose3D pooled = temporal_pool(clip, b);
        REQUIRE(pooled.xyz == p.xyz);
    }
    SECTION("zero-weight conv gives the arithmetic mean") {
        GeneratorBundle b = small_bundle(rng);
        for (auto& [n, t] : b.temporal.params)
            for (double& v : t.data) v = 0.0;
        Clip3D clip = wiggle_clip(rng, 9);
        Pose3D pooled = temporal_pool(clip, b);
        for (int i = 0; i < 48; ++i) {
            double mean = 0.0;
            for (const auto& f : clip.frames) mean += f.xyz[i];
            mean /= clip.frames.size();
            REQUIRE(pooled.xyz[i] == Catch::Approx(mean).margin(1e-9));
        }
    }
    SECTION("output lies in the per-coordinate convex hull of the frames") {
        for (int it = 0; it < 20; ++it) {
            GeneratorBundle b = small_bundle(rng);
            fill_random(b.temporal, rng, 1.0);
            Clip3D clip = wiggle_clip(rng, 9);
            Pose3D pooled = temporal_pool(clip, b);
            for (int i = 0; i < 48; ++i) {
                double lo = clip.frames[0].xyz[i], hi = lo;
                for (const auto& f : clip.frames) {
                    lo = std::min(lo, f.xyz[i]);
                    hi = std::max(hi, f.xyz[i]);
                }
                REQUIRE(pooled.xyz[i] >= lo - 1e-9);
                REQUIRE(pooled.xyz[i] <= hi + 1e-9);
            }
        }
    }
}

TEST_CASE("g_ba bone-direction generator", "[generators]") {
    const Skeleton& skel = canonical_skeleton();
    Rng rng(43);
    Pose3D p = random_pose(rng);
    BoneSet base = bones_from_joints(p, skel);

    SECTION("zero raw output keeps directions bitwise") {
        std::vector<double> raw(45, 0.0);
        BoneSet out = g_ba(raw, base, 0.3);
        REQUIRE(out.unit == base.unit);
        REQUIRE(out.length == base.length);
    }
    SECTION("zero-weight model form is the identity too") {
        GeneratorBundle b = small_bundle(rng);
        for (auto& [n, t] : b.g_ba.params)
            for (double& v : t.data) v = 0.0;
        Clip3D clip = static_clip(p, 9);
        GeneratorInput in = encode_input(clip, test_support::random_pose2d(rng), b, skel);
        BoneSet out = g_ba(in, base, b.g_ba, 0.3);
        REQUIRE(out.unit == base.unit);
    }
    SECTION("any raw output keeps unit norms within 1e-6 and lengths bitwise") {
        for (int it = 0; it < 200; ++it) {
            std::vector<double> raw(45);
            for (double& v : raw) v = 2.0 * rng.gaussian();
            BoneSet out = g_ba(raw, base, 0.3);
            REQUIRE(out.length == base.length);
            for (const auto& u : out.unit) {
                const double n = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
                REQUIRE(std::abs(n - 1.0) <= 1e-6);
            }
        }
    }
    SECTION("opposed perturbation below the gain cannot vanish; a crafted one throws") {
        // raw = -unit/gain makes the perturbed vector exactly zero
        std::vector<double> raw(45);
        for (int b = 0; b < 15; ++b)
            for (int d = 0; d < 3; ++d) raw[3 * b + d] = -base.unit[b][d] / 0.3;
        REQUIRE_THROWS_AS(g_ba(raw, base, 0.3), DegenerateDirection);
    }
}

TEST_CASE("g_bl bone-length generator", "[generators]") {
    const Skeleton& skel = canonical_skeleton();
    Rng rng(44);
    Pose3D p = random_pose(rng);
    BoneSet base = bones_from_joints(p, skel);

    SECTION("zero raw output keeps lengths bitwise") {
        std::vector<double> raw(15, 0.0);
        BoneSet out = g_bl(raw, base, 0.3);
        REQUIRE(out.length == base.length);
        REQUIRE(out.unit == base.unit);
    }
    SECTION("ratios always stay in (0.7, 1.3)") {
        for (int it = 0; it < 500; ++it) {
            std::vector<double> raw(15);
            for (double& v : raw) v = 20.0 * rng.gaussian();  // deep into tanh saturation
            BoneSet out = g_bl(raw, base, 0.3);
            for (int b = 0; b < 15; ++b) {
                const double ratio = out.length[b] / base.length[b];
                REQUIRE(ratio > 0.7 - 1e-12);
                REQUIRE(ratio < 1.3 + 1e-12);
            }
        }
    }
    SECTION("mirrored raw outputs give mirrored ratios") {
        std::vector<double> raw(15);
        for (double& v : raw) v = rng.gaussian();
        // left/right arm bones mirror: bones 3-5 vs 6-8, legs 9-11 vs 12-14
        for (int k = 0; k < 3; ++k) {
            raw[6 + k] = raw[3 + k];
            raw[12 + k] = raw[9 + k];
        }
        BoneSet sym = base;
        for (int k = 0; k < 3; ++k) {
            sym.length[6 + k] = sym.length[3 + k];
            sym.length[12 + k] = sym.length[9 + k];
        }
        BoneSet out = g_bl(raw, sym, 0.3);
        for (int k = 0; k < 3; ++k) {
            REQUIRE(out.length[6 + k] == Catch::Approx(out.length[3 + k]));
            REQUIRE(out.length[12 + k] == Catch::Approx(out.length[9 + k]));
        }
    }
}

TEST_CASE("g_rt rigid generator", "[generators]") {
    const Skeleton& skel = canonical_skeleton();
    Rng rng(45);
    Pose3D p = random_pose(rng);

    SECTION("zero raw output is the exact identity") {
        std::vector<double> raw(7, 0.0);
        Pose3D out = g_rt(raw, p, 200.0, skel);
        REQUIRE(out.xyz == p.xyz);
    }
    SECTION("pairwise distances preserved within 1e-6 under any quaternion") {
        for (int it = 0; it < 50; ++it) {
            std::vector<double> raw(7);
            for (double& v : raw) v = rng.gaussian();
            Pose3D out = g_rt(raw, p, 200.0, skel);
            for (int a = 0; a < 16; a += 3)
                for (int b = a + 1; b < 16; b += 2) {
                    const double da = std::hypot(std::hypot(p.x(a) - p.x(b), p.y(a) - p.y(b)),
                                                 p.z(a) - p.z(b));
                    const double db = std::hypot(
                        std::hypot(out.x(a) - out.x(b), out.y(a) - out.y(b)),
                        out.z(a) - out.z(b));
                    REQUIRE(std::abs(da - db) <= 1e-6);
                }
        }
    }
    SECTION("identity rotation with translation shifts every joint equally") {
        std::vector<double> raw(7, 0.0);
        raw[6] = 0.5;  // z translation: 200*tanh(0.5)
        Pose3D out = g_rt(raw, p, 200.0, skel);
        const double tz = 200.0 * std::tanh(0.5);
        for (int j = 0; j < 16; ++j) {
            REQUIRE(out.x(j) == p.x(j));
            REQUIRE(out.y(j) == p.y(j));
            REQUIRE(out.z(j) == Catch::Approx(p.z(j) + tz).margin(1e-12));
        }
    }
}

TEST_CASE("augment chain", "[generators]") {
    const Skeleton& skel = canonical_skeleton();
    Rng rng(46);

    SECTION("identity at initialization is exact") {
        GeneratorBundle b = small_bundle(rng);
        for (int it = 0; it < 10; ++it) {
            Pose3D p = random_pose(rng);
            Clip3D clip = static_clip(p, 9);
            Pose2D prior = test_support::random_pose2d(rng);
            Pose3D out = augment(clip, prior, b, skel);
            REQUIRE(out.xyz == p.xyz);
        }
    }

    SECTION("random generator weights keep a valid skeleton") {
        for (int it = 0; it < 100; ++it) {
            GeneratorBundle b = small_bundle(rng);
            for (ParamModel* m : b.models()) fill_random(*m, rng, 0.3);
            Clip3D clip = static_clip(random_pose(rng), 9);
            Pose2D prior = test_support::random_pose2d(rng);
            Pose3D out = augment(clip, prior, b, skel);
            REQUIRE(out.finite());
            REQUIRE_NOTHROW(bones_from_joints(out, skel));
        }
    }

    SECTION("bone lengths respect the (0.7, 1.3) band around the prediction") {
        GeneratorBundle b = small_bundle(rng);
        for (ParamModel* m : b.models()) fill_random(*m, rng, 0.5);
        Pose3D p = random_pose(rng);
        Clip3D clip = static_clip(p, 9);
        Pose2D prior = test_support::random_pose2d(rng);
        Pose3D out = augment(clip, prior, b, skel);
        BoneSet in_bones = bones_from_joints(p, skel);
        BoneSet out_bones = bones_from_joints(out, skel);
        for (int bn = 0; bn < 15; ++bn) {
            const double ratio = out_bones.length[bn] / in_bones.length[bn];
            REQUIRE(ratio > 0.7 - 1e-6);
            REQUIRE(ratio < 1.3 + 1e-6);
        }
    }

    SECTION("rigid-first chain order is also a valid composition") {
        GeneratorConfig cfg;
        cfg.chain_order = "rigid_first";
        GeneratorBundle b = small_bundle(rng, cfg);
        Pose3D p = random_pose(rng);
        Clip3D clip = static_clip(p, 9);
        Pose2D prior = test_support::random_pose2d(rng);
        REQUIRE(augment(clip, prior, b, skel).xyz == p.xyz);  // still identity at init
        for (ParamModel* m : b.models()) fill_random(*m, rng, 0.3);
        REQUIRE_NOTHROW(bones_from_joints(augment(clip, prior, b, skel), skel));
    }

    SECTION("gradients through the full augmentation match finite differences") {
        GeneratorConfig cfg;
        cfg.embed_jc = 6;
        cfg.embed_bv = 6;
        cfg.embed_ps_per_segment = 2;
        cfg.embed_te = 4;
        cfg.embed_de = 4;
        cfg.hidden = 6;
        Rng prng(99);
        GeneratorBundle b = make_generators(cfg, skel, prng);
        for (ParamModel* m : b.models()) fill_random(*m, prng, 0.2);

        const SkeletonGraph sg(skel);
        Clip3D clip = static_clip(random_pose(prng), 3);
        // 3-frame clip needs no ladder; use the graph path directly
        Tensor ct(1, 3 * 48);
        for (int f = 0; f < 3; ++f)
            for (int i = 0; i < 48; ++i) ct.at(0, f * 48 + i) = clip.frames[f].xyz[i];
        Pose2D prior = test_support::random_pose2d(prng);
        Tensor pt = Tensor::row(prior.uv);

        // flatten bundle params into one probe model for fd_gradient
        ParamModel flat;
        flat.desc = {{"kind", "bundle-probe"}};
        for (ParamModel* m : b.models())
            for (auto& [n, t] : m->params) flat.params.emplace_back(n, t);

        auto build = [&](const ModelVars& vars) {
            GeneratorBundle bb = b;
            std::size_t cursor = 0;
            GeneratorVars gv;
            for (ParamModel* m : bb.models()) {
                ModelVars mv;
                for (auto& [n, t] : m->params) {
                    mv.ordered.push_back(vars.ordered[cursor]);
                    mv.by_name.emplace(n, vars.ordered[cursor]);
                    ++cursor;
                }
                gv.per_model.push_back(std::move(mv));
            }
            ad::Var out = augment_graph(bb, gv, ad::constant(ct), ad::constant(pt), sg, 3,
                                        kMetersPerMm, 1.0 / kPixelScale);
            return ad::mean_all(ad::mul(ad::scale(out, 1e-3), ad::scale(out, 1e-3)));
        };
        auto analytic = gradient(flat, build);
        auto numeric = fd_gradient(flat, build, 1e-5);
        REQUIRE(gradient_rel_error(analytic, numeric) < 1e-4);
    }
}

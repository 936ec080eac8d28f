#include "test_support.hpp"

#include "poselift/generator.hpp"
#include "poselift/metrics.hpp"

using namespace poselift;
using test_support::random_pose;

TEST_CASE("mpjpe", "[metrics]") {
    const Skeleton& skel = canonical_skeleton();
    Rng rng(11);

    SECTION("identity is zero") {
        Pose3D p = random_pose(rng);
        REQUIRE(mpjpe(p, p) == 0.0);
    }
    SECTION("3-4-5 triangle") {
        Pose3D gt(skel.joint_count());
        Pose3D pred(skel.joint_count());
        for (int j = 0; j < 16; ++j) {
            pred.x(j) = 3.0;
            pred.y(j) = 4.0;
        }
        REQUIRE(mpjpe(pred, gt) == Catch::Approx(5.0));
    }
    SECTION("matches an independent per-joint re-summation") {
        for (int it = 0; it < 50; ++it) {
            Pose3D a = random_pose(rng), b = random_pose(rng);
            double acc = 0.0;
            for (int j = 0; j < 16; ++j) {
                const double d[3] = {a.x(j) - b.x(j), a.y(j) - b.y(j), a.z(j) - b.z(j)};
                acc += std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
            }
            REQUIRE(std::abs(mpjpe(a, b) - acc / 16.0) <= 1e-12 * std::max(1.0, acc));
        }
    }
    SECTION("symmetric in its arguments") {
        Pose3D a = random_pose(rng), b = random_pose(rng);
        REQUIRE(mpjpe(a, b) == mpjpe(b, a));
    }
    SECTION("joint-count mismatch throws") {
        Pose3D a = random_pose(rng);
        Pose3D b(8);
        REQUIRE_THROWS_AS(mpjpe(a, b), SkeletonMismatch);
    }
    SECTION("batch mean is permutation-equivariant") {
        std::vector<Pose3D> preds, gts;
        for (int i = 0; i < 16; ++i) {
            preds.push_back(random_pose(rng));
            gts.push_back(random_pose(rng));
        }
        double fwd = 0.0, rev = 0.0;
        for (std::size_t i = 0; i < preds.size(); ++i) fwd += mpjpe(preds[i], gts[i]);
        for (std::size_t i = preds.size(); i > 0; --i) rev += mpjpe(preds[i - 1], gts[i - 1]);
        REQUIRE(fwd / preds.size() == Catch::Approx(rev / preds.size()).epsilon(1e-12));
    }
}

TEST_CASE("pa_mpjpe", "[metrics]") {
    const Skeleton& skel = canonical_skeleton();
    Rng rng(12);

    SECTION("identity is zero") {
        Pose3D p = random_pose(rng);
        REQUIRE(pa_mpjpe(p, p) <= 1e-9);
    }
    SECTION("similarity transform is fully removed") {
        for (int it = 0; it < 25; ++it) {
            Pose3D gt = random_pose(rng);
            // random rotation via g_rt, then scale and translate
            std::vector<double> raw = {0.5 * rng.gaussian(), 0.5 * rng.gaussian(),
                                       0.5 * rng.gaussian(), 0.5 * rng.gaussian(),
                                       rng.gaussian(),       rng.gaussian(),
                                       rng.gaussian()};
            Pose3D pred = g_rt(raw, gt, 400.0, skel);
            for (double& v : pred.xyz) v = 1.3 * v + 17.0;
            REQUIRE(pa_mpjpe(pred, gt) <= 1e-6);
        }
    }
    SECTION("never exceeds centered mpjpe on 1000 random pairs") {
        int violations = 0;
        for (int it = 0; it < 1000; ++it) {
            Pose3D a = random_pose(rng), b = random_pose(rng);
            if (pa_mpjpe(a, b) > mpjpe(root_center(a), root_center(b)) + 1e-9) ++violations;
        }
        REQUIRE(violations == 0);
    }
    SECTION("invariant to similarity transforms of the prediction") {
        Pose3D gt = random_pose(rng);
        Pose3D pred = random_pose(rng);
        const double base = pa_mpjpe(pred, gt);
        std::vector<double> raw = {0.3, -0.2, 0.4, 0.1, 0.5, -0.5, 0.25};
        Pose3D moved = g_rt(raw, pred, 300.0, skel);
        for (double& v : moved.xyz) v *= 0.7;
        REQUIRE(pa_mpjpe(moved, gt) == Catch::Approx(base).margin(1e-6));
    }
    SECTION("degenerate ground truth throws") {
        Pose3D gt(skel.joint_count());  // all joints coincide: zero variance
        Pose3D pred = random_pose(rng);
        REQUIRE_THROWS_AS(pa_mpjpe(pred, gt), DegeneratePose);
    }
}

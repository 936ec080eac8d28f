#pragma once

#include <array>
#include <cmath>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "poselift/camera.hpp"
#include "poselift/pose.hpp"
#include "poselift/rng.hpp"
#include "poselift/skeleton.hpp"

namespace poselift {

/// A synthetic motion domain: analytic joint-angle trajectories over the
/// canonical skeleton, scaled, view-rotated, projected, optionally noised.
/// Ground-truth 3D is exact and stored root-relative in camera coords.
struct SynthDomainSpec {
    std::string name = "synth";
    std::uint64_t motion_seed = 1;
    double scale = 1.0;                 // global bone-length multiplier
    Camera camera;                      // emission camera
    double view_rotation_deg = 0.0;     // about the vertical axis
    double noise_sigma_px = 0.0;        // additive 2D noise
    std::array<double, 4> mixture{0.25, 0.25, 0.25, 0.25};  // walk reach squat wave

    void validate() const {
        if (scale <= 0.0) throw InvalidSpec("synth scale must be positive");
        if (noise_sigma_px < 0.0) throw InvalidSpec("synth noise sigma must be >= 0");
        double sum = 0.0;
        for (double w : mixture) {
            if (w < 0.0) throw InvalidSpec("mixture weights must be >= 0");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw InvalidSpec("mixture weights must sum to 1");
        camera.validate();
    }

    nlohmann::json to_json() const {
        return {{"name", name},
                {"motion_seed", motion_seed},
                {"scale", scale},
                {"camera", camera.to_json()},
                {"view_rotation_deg", view_rotation_deg},
                {"noise_sigma_px", noise_sigma_px},
                {"mixture", mixture}};
    }
    static SynthDomainSpec from_json(const nlohmann::json& j) {
        SynthDomainSpec s;
        s.name = j.at("name").get<std::string>();
        s.motion_seed = j.at("motion_seed").get<std::uint64_t>();
        s.scale = j.at("scale").get<double>();
        s.camera = Camera::from_json(j.at("camera"));
        s.view_rotation_deg = j.at("view_rotation_deg").get<double>();
        s.noise_sigma_px = j.at("noise_sigma_px").get<double>();
        const auto m = j.at("mixture").get<std::vector<double>>();
        if (m.size() != 4) throw InvalidSpec("mixture needs 4 weights");
        for (int i = 0; i < 4; ++i) s.mixture[i] = m[i];
        s.validate();
        return s;
    }
};

struct SynthSet {
    std::string domain_name;
    std::vector<Clip2D> clips2d;
    std::vector<Clip3D> clips3d;  // exact labels, same order
};

namespace synth_detail {

// Neutral standing template: camera coords, x right, y down, z depth.
// Directions per bone in skeleton bone order; lengths in mm.
struct Template {
    std::vector<std::array<double, 3>> dir;
    std::vector<double> len;
};

inline const Template& body_template() {
    static const Template t = [] {
        auto unit = [](double x, double y, double z) {
            const double n = std::sqrt(x * x + y * y + z * z);
            return std::array<double, 3>{x / n, y / n, z / n};
        };
        Template tp;
        // bone order: parents precede children (see canonical_skeleton)
        tp.dir = {
            unit(0, -1, 0),        // pelvis->spine
            unit(0, -1, 0),        // spine->neck
            unit(0, -1, 0.1),      // neck->head
            unit(-1, 0.12, 0),     // neck->lshoulder
            unit(-0.25, 1, 0),     // lshoulder->lelbow
            unit(-0.05, 1, 0),     // lelbow->lwrist
            unit(1, 0.12, 0),      // neck->rshoulder
            unit(0.25, 1, 0),      // rshoulder->relbow
            unit(0.05, 1, 0),      // relbow->rwrist
            unit(-1, 0.25, 0),     // pelvis->lhip
            unit(-0.03, 1, 0),     // lhip->lknee
            unit(0, 1, -0.05),     // lknee->lankle
            unit(1, 0.25, 0),      // pelvis->rhip
            unit(0.03, 1, 0),      // rhip->rknee
            unit(0, 1, -0.05),     // rknee->rankle
        };
        tp.len = {220, 230, 140, 170, 280, 250, 170, 280, 250, 110, 450, 440, 110, 450, 440};
        return tp;
    }();
    return t;
}

inline std::array<double, 3> rot_x(const std::array<double, 3>& v, double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {v[0], c * v[1] - s * v[2], s * v[1] + c * v[2]};
}
inline std::array<double, 3> rot_y(const std::array<double, 3>& v, double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {c * v[0] + s * v[2], v[1], -s * v[0] + c * v[2]};
}
inline std::array<double, 3> rot_z(const std::array<double, 3>& v, double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]};
}

// Bone indices in the canonical order above.
enum Bone : int {
    bSpine = 0, bNeck = 1, bHead = 2, bLSho = 3, bLUArm = 4, bLFArm = 5,
    bRSho = 6, bRUArm = 7, bRFArm = 8, bLHip = 9, bLThigh = 10, bLShin = 11,
    bRHip = 12, bRThigh = 13, bRShin = 14,
};

struct MotionParams {
    int primitive = 0;  // 0 walk, 1 reach, 2 squat, 3 wave
    double omega = 1.0;
    double phase = 0.0;
    double amp = 1.0;
    double sway_phase = 0.0;
};

/// Per-frame bone directions for one motion primitive at time t (seconds).
inline std::vector<std::array<double, 3>> directions_at(const MotionParams& mp, double t) {
    const Template& tp = body_template();
    std::vector<std::array<double, 3>> d = tp.dir;
    const double w = 2.0 * M_PI * mp.omega;
    const double s = std::sin(w * t + mp.phase);
    const double sway = 0.06 * std::sin(0.5 * w * t + mp.sway_phase);
    d[bSpine] = rot_x(d[bSpine], sway);
    d[bNeck] = rot_x(d[bNeck], sway);
    switch (mp.primitive) {
        case 0: {  // walk: antiphase leg and arm swings
            const double a = 0.55 * mp.amp;
            d[bLThigh] = rot_x(d[bLThigh], a * s);
            d[bRThigh] = rot_x(d[bRThigh], -a * s);
            d[bLShin] = rot_x(d[bLShin], a * s - 0.35 * mp.amp * std::abs(s));
            d[bRShin] = rot_x(d[bRShin], -a * s - 0.35 * mp.amp * std::abs(s));
            d[bLUArm] = rot_x(d[bLUArm], -0.4 * mp.amp * s);
            d[bRUArm] = rot_x(d[bRUArm], 0.4 * mp.amp * s);
            d[bLFArm] = rot_x(d[bLFArm], -0.3 * mp.amp * s);
            d[bRFArm] = rot_x(d[bRFArm], 0.3 * mp.amp * s);
            break;
        }
        case 1: {  // reach: both arms sweep from rest toward forward-up
            const double lift = mp.amp * (1.2 + 0.8 * s);
            d[bLUArm] = rot_x(d[bLUArm], -lift);
            d[bRUArm] = rot_x(d[bRUArm], -lift);
            d[bLFArm] = rot_x(d[bLFArm], -lift * 0.9);
            d[bRFArm] = rot_x(d[bRFArm], -lift * 0.9);
            d[bSpine] = rot_x(d[bSpine], 0.1 * mp.amp * s);
            break;
        }
        case 2: {  // squat: knees fold, arms balance forward
            const double bend = mp.amp * (0.5 + 0.45 * s);
            d[bLThigh] = rot_x(d[bLThigh], -bend);
            d[bRThigh] = rot_x(d[bRThigh], -bend);
            d[bLShin] = rot_x(d[bLShin], 1.6 * bend);
            d[bRShin] = rot_x(d[bRShin], 1.6 * bend);
            d[bLUArm] = rot_x(d[bLUArm], -0.6 * bend);
            d[bRUArm] = rot_x(d[bRUArm], -0.6 * bend);
            break;
        }
        default: {  // wave: right forearm oscillates overhead
            d[bRUArm] = rot_z(d[bRUArm], -2.4 * mp.amp);
            d[bRFArm] = rot_z(d[bRFArm], -2.4 * mp.amp + 0.6 * mp.amp * s);
            d[bLUArm] = rot_x(d[bLUArm], 0.1 * mp.amp * s);
            break;
        }
    }
    return d;
}

}  // namespace synth_detail

/// Generate n_clips labeled clips of T frames. Deterministic given the
/// spec: clip i depends only on (motion_seed, i).
inline SynthSet synth_domain(const SynthDomainSpec& spec, int n_clips, int T,
                             double frame_rate = 50.0) {
    spec.validate();
    if (n_clips < 1 || T < 1 || T % 2 == 0) throw InvalidSpec("need n_clips>=1 and odd T");
    const Skeleton& skel = canonical_skeleton();
    const auto& tp = synth_detail::body_template();
    const double view = spec.view_rotation_deg * M_PI / 180.0;

    SynthSet out;
    out.domain_name = spec.name;
    for (int ci = 0; ci < n_clips; ++ci) {
        Rng rng(derive_seed(spec.motion_seed, static_cast<std::uint64_t>(ci)));
        synth_detail::MotionParams mp;
        const double pick = rng.uniform();
        double acc = 0.0;
        for (int p = 0; p < 4; ++p) {
            acc += spec.mixture[p];
            if (pick < acc) {
                mp.primitive = p;
                break;
            }
            mp.primitive = p;  // numeric slack lands on the last weighted primitive
        }
        mp.omega = 0.6 + 0.9 * rng.uniform();
        mp.phase = 2.0 * M_PI * rng.uniform();
        mp.amp = 0.8 + 0.4 * rng.uniform();
        mp.sway_phase = 2.0 * M_PI * rng.uniform();

        Clip2D c2;
        Clip3D c3;
        c2.frame_rate = frame_rate;
        c3.frame_rate = frame_rate;
        for (int f = 0; f < T; ++f) {
            const double t = f / frame_rate;
            auto dirs = synth_detail::directions_at(mp, t);
            BoneSet bones;
            for (int b = 0; b < skel.bone_count(); ++b) {
                bones.unit.push_back(synth_detail::rot_y(dirs[b], view));
                bones.length.push_back(tp.len[b] * spec.scale);
            }
            Pose3D gt = joints_from_bones(bones, {0.0, 0.0, 0.0}, skel);
            Pose2D px = project(gt, spec.camera);
            if (spec.noise_sigma_px > 0.0)
                for (double& v : px.uv) v += spec.noise_sigma_px * rng.gaussian();
            c3.frames.push_back(std::move(gt));
            c2.frames.push_back(std::move(px));
        }
        out.clips2d.push_back(std::move(c2));
        out.clips3d.push_back(std::move(c3));
    }
    return out;
}

}  // namespace poselift

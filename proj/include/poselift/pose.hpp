#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "poselift/errors.hpp"
#include "poselift/skeleton.hpp"

namespace poselift {

/// Single-frame 3D pose, millimeters, camera coordinates. Root-relative
/// poses have joint 0 at the origin; storage does not enforce it.
struct Pose3D {
    std::vector<double> xyz;  // J*3, joint-major

    Pose3D() = default;
    explicit Pose3D(int joints) : xyz(static_cast<std::size_t>(joints) * 3, 0.0) {}

    int joints() const { return static_cast<int>(xyz.size() / 3); }
    double& x(int j) { return xyz[3 * j + 0]; }
    double& y(int j) { return xyz[3 * j + 1]; }
    double& z(int j) { return xyz[3 * j + 2]; }
    double x(int j) const { return xyz[3 * j + 0]; }
    double y(int j) const { return xyz[3 * j + 1]; }
    double z(int j) const { return xyz[3 * j + 2]; }

    bool finite() const {
        for (double v : xyz)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/// Single-frame 2D pose, pixels (units recorded in file metadata).
struct Pose2D {
    std::vector<double> uv;  // J*2

    Pose2D() = default;
    explicit Pose2D(int joints) : uv(static_cast<std::size_t>(joints) * 2, 0.0) {}

    int joints() const { return static_cast<int>(uv.size() / 2); }
    double& u(int j) { return uv[2 * j + 0]; }
    double& v(int j) { return uv[2 * j + 1]; }
    double u(int j) const { return uv[2 * j + 0]; }
    double v(int j) const { return uv[2 * j + 1]; }

    bool finite() const {
        for (double v : uv)
            if (!std::isfinite(v)) return false;
        return true;
    }
    bool all_zero() const {
        for (double v : uv)
            if (v != 0.0) return false;
        return true;
    }
};

/// T consecutive frames sharing one skeleton. T must be odd so the center
/// frame is defined.
template <typename P>
struct PoseClip {
    std::vector<P> frames;
    double frame_rate = 50.0;

    int length() const { return static_cast<int>(frames.size()); }
    const P& center() const { return frames[frames.size() / 2]; }

    void validate() const {
        if (frames.empty() || frames.size() % 2 == 0)
            throw ShapeMismatch("clip length must be odd and nonzero");
        for (const auto& f : frames)
            if (f.joints() != frames[0].joints())
                throw SkeletonMismatch("clip frames disagree on joint count");
    }
};

using Clip2D = PoseClip<Pose2D>;
using Clip3D = PoseClip<Pose3D>;

/// Bone decomposition of a 3D pose: unit direction and length (mm) per
/// bone, in skeleton bone order.
struct BoneSet {
    std::vector<std::array<double, 3>> unit;
    std::vector<double> length;

    int bones() const { return static_cast<int>(length.size()); }
};

constexpr double kMinBoneNormMm = 1e-9;

inline BoneSet bones_from_joints(const Pose3D& pose, const Skeleton& skel) {
    if (pose.joints() != skel.joint_count())
        throw SkeletonMismatch("bones_from_joints: joint count");
    if (!pose.finite()) throw DegeneratePose("bones_from_joints: non-finite pose");
    BoneSet out;
    for (auto [p, c] : skel.bone_list()) {
        const double dx = pose.x(c) - pose.x(p);
        const double dy = pose.y(c) - pose.y(p);
        const double dz = pose.z(c) - pose.z(p);
        const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
        if (len < kMinBoneNormMm)
            throw ZeroLengthBone("bone " + skel.joint_names[p] + "->" + skel.joint_names[c]);
        out.unit.push_back({dx / len, dy / len, dz / len});
        out.length.push_back(len);
    }
    return out;
}

/// Forward kinematics: reassemble joints from bones, walking the tree in
/// bone order (parents precede children by construction).
inline Pose3D joints_from_bones(const BoneSet& bones, const std::array<double, 3>& root_position,
                                const Skeleton& skel) {
    if (bones.bones() != skel.bone_count())
        throw SkeletonMismatch("joints_from_bones: bone count");
    Pose3D pose(skel.joint_count());
    pose.x(0) = root_position[0];
    pose.y(0) = root_position[1];
    pose.z(0) = root_position[2];
    int b = 0;
    for (auto [p, c] : skel.bone_list()) {
        pose.x(c) = pose.x(p) + bones.length[b] * bones.unit[b][0];
        pose.y(c) = pose.y(p) + bones.length[b] * bones.unit[b][1];
        pose.z(c) = pose.z(p) + bones.length[b] * bones.unit[b][2];
        ++b;
    }
    return pose;
}

/// Subtract the root joint from every joint.
inline Pose3D root_center(const Pose3D& pose) {
    Pose3D out = pose;
    const double rx = pose.x(0), ry = pose.y(0), rz = pose.z(0);
    for (int j = 0; j < pose.joints(); ++j) {
        out.x(j) -= rx;
        out.y(j) -= ry;
        out.z(j) -= rz;
    }
    return out;
}

inline Pose2D root_center(const Pose2D& pose) {
    Pose2D out = pose;
    const double ru = pose.u(0), rv = pose.v(0);
    for (int j = 0; j < pose.joints(); ++j) {
        out.u(j) -= ru;
        out.v(j) -= rv;
    }
    return out;
}

/// Per-segment joint sub-arrays in the fixed segment order.
template <typename P>
std::vector<std::vector<double>> segment_slices(const P& pose, const Skeleton& skel) {
    constexpr int dims = std::is_same_v<P, Pose3D> ? 3 : 2;
    std::vector<std::vector<double>> out;
    out.reserve(skel.part_segments.size());
    for (const auto& [name, joints] : skel.part_segments) {
        std::vector<double> seg;
        seg.reserve(joints.size() * dims);
        for (int j : joints)
            for (int d = 0; d < dims; ++d) {
                if constexpr (std::is_same_v<P, Pose3D>)
                    seg.push_back(pose.xyz[3 * j + d]);
                else
                    seg.push_back(pose.uv[2 * j + d]);
            }
        out.push_back(std::move(seg));
    }
    return out;
}

}  // namespace poselift

#pragma once

#include <vector>

#include "poselift/autodiff.hpp"
#include "poselift/camera.hpp"
#include "poselift/skeleton.hpp"

// Differentiable batched pose kinematics. Poses are rows: 3D (B, J*3),
// 2D (B, J*2), bone vectors (B, (J-1)*3), bone lengths (B, J-1).
namespace poselift {

/// Constant index/matrix structure derived from a skeleton, shared by the
/// graph-space kinematics ops.
struct SkeletonGraph {
    int joints = 0;
    int bones = 0;
    std::vector<std::size_t> child_cols;    // (J-1)*3
    std::vector<std::size_t> parent_cols;   // (J-1)*3
    std::vector<std::size_t> bone_of_col;   // (J-1)*3 -> bone index
    Tensor seg_sum;    // ((J-1)*3, J-1): sums squared coords per bone
    Tensor path;       // ((J-1)*3, J*3): bone vectors -> joint offsets
    std::vector<std::size_t> x_cols, y_cols, z_cols;  // coordinate planes
    std::vector<std::size_t> root_cols;               // [0,1,2,0,1,2,...]
    std::vector<std::vector<std::size_t>> segment_cols;  // per part segment, 3D coords

    explicit SkeletonGraph(const Skeleton& skel) {
        joints = skel.joint_count();
        bones = skel.bone_count();
        const auto bl = skel.bone_list();
        seg_sum = Tensor(static_cast<std::size_t>(bones) * 3, bones, 0.0);
        path = Tensor(static_cast<std::size_t>(bones) * 3,
                      static_cast<std::size_t>(joints) * 3, 0.0);
        for (int b = 0; b < bones; ++b) {
            const auto [p, c] = bl[b];
            for (int d = 0; d < 3; ++d) {
                child_cols.push_back(static_cast<std::size_t>(3 * c + d));
                parent_cols.push_back(static_cast<std::size_t>(3 * p + d));
                bone_of_col.push_back(static_cast<std::size_t>(b));
                seg_sum.at(static_cast<std::size_t>(3 * b + d), b) = 1.0;
            }
        }
        // path[b, j] = 1 iff bone b lies on the chain root -> joint j
        for (int j = 0; j < joints; ++j) {
            int cur = j;
            while (skel.parent[cur] >= 0) {
                int b = 0;
                for (; b < bones; ++b)
                    if (bl[b].second == cur) break;
                for (int d = 0; d < 3; ++d)
                    path.at(static_cast<std::size_t>(3 * b + d),
                            static_cast<std::size_t>(3 * j + d)) = 1.0;
                cur = skel.parent[cur];
            }
        }
        for (int j = 0; j < joints; ++j) {
            x_cols.push_back(static_cast<std::size_t>(3 * j + 0));
            y_cols.push_back(static_cast<std::size_t>(3 * j + 1));
            z_cols.push_back(static_cast<std::size_t>(3 * j + 2));
            for (int d = 0; d < 3; ++d) root_cols.push_back(static_cast<std::size_t>(d));
        }
        for (const auto& [name, seg_joints] : skel.part_segments) {
            std::vector<std::size_t> cols;
            for (int j : seg_joints)
                for (int d = 0; d < 3; ++d) cols.push_back(static_cast<std::size_t>(3 * j + d));
            segment_cols.push_back(std::move(cols));
        }
    }
};

/// Raw bone vectors child - parent, (B, bones*3).
inline ad::Var bone_vectors(const ad::Var& joints, const SkeletonGraph& sg) {
    return ad::sub(ad::gather_cols(joints, sg.child_cols),
                   ad::gather_cols(joints, sg.parent_cols));
}

/// Per-bone Euclidean lengths, (B, bones).
inline ad::Var bone_lengths(const ad::Var& bone_vecs, const SkeletonGraph& sg) {
    return ad::sqrt(ad::matmul(ad::mul(bone_vecs, bone_vecs), ad::constant(sg.seg_sum)));
}

/// Tile per-bone scalars out to per-coordinate width, (B, bones*3).
inline ad::Var per_bone_expand(const ad::Var& per_bone, const SkeletonGraph& sg) {
    return ad::gather_cols(per_bone, sg.bone_of_col);
}

/// Forward kinematics as an offset: pose + (new_bone_vecs - old_bone_vecs)
/// routed through the path matrix. Linear in the bone vectors, so this is
/// exact FK, and it is the bitwise identity when new == old.
inline ad::Var apply_bone_delta(const ad::Var& pose, const ad::Var& new_vecs,
                                const ad::Var& old_vecs, const SkeletonGraph& sg) {
    return ad::add(pose, ad::matmul(ad::sub(new_vecs, old_vecs), ad::constant(sg.path)));
}

/// Subtract the root joint from every joint, per frame block of J*3 cols.
inline ad::Var root_center_graph(const ad::Var& pose, const SkeletonGraph& sg) {
    return ad::sub(pose, ad::gather_cols(pose, sg.root_cols));
}

/// Rotate every joint by the per-sample unit quaternion q = (w,x,y,z),
/// then translate by t = (tx,ty,tz). q: (B,4), t: (B,3).
inline ad::Var rotate_translate(const ad::Var& pose, const ad::Var& q, const ad::Var& t,
                                const SkeletonGraph& sg) {
    using namespace ad;
    Var w = slice_cols(q, 0, 1), x = slice_cols(q, 1, 1);
    Var y = slice_cols(q, 2, 1), z = slice_cols(q, 3, 1);
    Var xx = mul(x, x), yy = mul(y, y), zz = mul(z, z);
    Var xy = mul(x, y), xz = mul(x, z), yz = mul(y, z);
    Var wx = mul(w, x), wy = mul(w, y), wz = mul(w, z);
    Var two = constant(2.0);
    Var r00 = sub(constant(1.0), mul(two, add(yy, zz)));
    Var r01 = mul(two, sub(xy, wz));
    Var r02 = mul(two, add(xz, wy));
    Var r10 = mul(two, add(xy, wz));
    Var r11 = sub(constant(1.0), mul(two, add(xx, zz)));
    Var r12 = mul(two, sub(yz, wx));
    Var r20 = mul(two, sub(xz, wy));
    Var r21 = mul(two, add(yz, wx));
    Var r22 = sub(constant(1.0), mul(two, add(xx, yy)));

    Var X = gather_cols(pose, sg.x_cols);
    Var Y = gather_cols(pose, sg.y_cols);
    Var Z = gather_cols(pose, sg.z_cols);
    Var tx = slice_cols(t, 0, 1), ty = slice_cols(t, 1, 1), tz = slice_cols(t, 2, 1);
    Var Xr = add(add(add(mul(r00, X), mul(r01, Y)), mul(r02, Z)), tx);
    Var Yr = add(add(add(mul(r10, X), mul(r11, Y)), mul(r12, Z)), ty);
    Var Zr = add(add(add(mul(r20, X), mul(r21, Y)), mul(r22, Z)), tz);

    const std::size_t width = static_cast<std::size_t>(sg.joints) * 3;
    return add(add(scatter_add_cols(Xr, sg.x_cols, width),
                   scatter_add_cols(Yr, sg.y_cols, width)),
               scatter_add_cols(Zr, sg.z_cols, width));
}

/// Pinhole projection of (B, J*3) mm poses to (B, J*2) pixel poses.
/// Throws BehindCamera when any depth comes within kMinDepthMm.
inline ad::Var project_graph(const ad::Var& pose_mm, const Camera& cam,
                             const SkeletonGraph& sg) {
    using namespace ad;
    Var X = gather_cols(pose_mm, sg.x_cols);
    Var Y = gather_cols(pose_mm, sg.y_cols);
    Var Z = gather_cols(pose_mm, sg.z_cols);
    Var zd = add_scalar(Z, cam.subject_depth_offset);
    for (double v : zd->value.data)
        if (v <= kMinDepthMm) throw BehindCamera("projection depth " + std::to_string(v));
    Var U = add_scalar(scale(div(X, zd), cam.fx), cam.cx);
    Var V = add_scalar(scale(div(Y, zd), cam.fy), cam.cy);
    std::vector<std::size_t> u_cols, v_cols;
    for (int j = 0; j < sg.joints; ++j) {
        u_cols.push_back(static_cast<std::size_t>(2 * j + 0));
        v_cols.push_back(static_cast<std::size_t>(2 * j + 1));
    }
    const std::size_t width = static_cast<std::size_t>(sg.joints) * 2;
    return add(scatter_add_cols(U, u_cols, width), scatter_add_cols(V, v_cols, width));
}

}  // namespace poselift

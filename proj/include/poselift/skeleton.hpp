#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poselift/errors.hpp"
#include "poselift/rng.hpp"

namespace poselift {

/// Kinematic tree for the 16-joint body model plus the six body part
/// segments used by the structured pose encoders.
struct Skeleton {
    std::string name;
    std::vector<std::string> joint_names;  // canonical order
    std::vector<int> parent;               // parent[j], root has -1
    // Segment order is fixed: left_arm, right_arm, left_leg, right_leg,
    // torso, ex_torso.
    std::vector<std::pair<std::string, std::vector<int>>> part_segments;
    int version = 1;

    int joint_count() const { return static_cast<int>(parent.size()); }
    int bone_count() const { return joint_count() - 1; }

    /// Bones as (parent, child), children in topological (index) order.
    std::vector<std::pair<int, int>> bone_list() const {
        std::vector<std::pair<int, int>> bones;
        for (int j = 0; j < joint_count(); ++j)
            if (parent[j] >= 0) bones.emplace_back(parent[j], j);
        return bones;
    }

    void validate() const {
        const int n = joint_count();
        if (n < 2) throw InvalidSpec("skeleton needs at least 2 joints");
        if (static_cast<int>(joint_names.size()) != n)
            throw InvalidSpec("joint_names / parent length mismatch");
        int roots = 0;
        for (int j = 0; j < n; ++j) {
            if (parent[j] < 0) {
                ++roots;
                if (j != 0) throw InvalidSpec("root must be joint 0");
            } else if (parent[j] >= j) {
                // parents precede children, so bone_list is topological
                throw InvalidSpec("parent index must be smaller than child");
            }
        }
        if (roots != 1) throw InvalidSpec("skeleton must have exactly one root");
        static const char* kSegments[6] = {"left_arm",  "right_arm", "left_leg",
                                           "right_leg", "torso",     "ex_torso"};
        if (part_segments.size() != 6) throw InvalidSpec("expected 6 part segments");
        std::set<int> covered;
        for (std::size_t s = 0; s < 6; ++s) {
            if (part_segments[s].first != kSegments[s])
                throw InvalidSpec("segment name/order mismatch: " + part_segments[s].first);
            for (int j : part_segments[s].second) {
                if (j < 0 || j >= n) throw InvalidSpec("segment joint out of range");
                covered.insert(j);
            }
        }
        if (static_cast<int>(covered.size()) != n)
            throw InvalidSpec("part segments must cover all joints");
    }

    nlohmann::json to_json() const {
        nlohmann::json seg = nlohmann::json::array();
        for (const auto& [nm, joints] : part_segments)
            seg.push_back({{"name", nm}, {"joints", joints}});
        return {{"version", version},
                {"name", name},
                {"joint_names", joint_names},
                {"parents", parent},
                {"segments", seg}};
    }

    static Skeleton from_json(const nlohmann::json& j) {
        Skeleton s;
        try {
            s.version = j.at("version").get<int>();
            s.name = j.at("name").get<std::string>();
            s.joint_names = j.at("joint_names").get<std::vector<std::string>>();
            s.parent = j.at("parents").get<std::vector<int>>();
            for (const auto& seg : j.at("segments"))
                s.part_segments.emplace_back(seg.at("name").get<std::string>(),
                                             seg.at("joints").get<std::vector<int>>());
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("skeleton document: ") + e.what());
        }
        s.validate();
        return s;
    }

    /// Stable content hash; embedded in pose-file headers for consistency
    /// checks between data files and the run's skeleton.
    std::uint64_t hash() const { return fnv1a(to_json().dump()); }
};

/// The built-in 16-joint body model.
/// 0 pelvis(root) 1 spine 2 neck 3 head | 4-6 L shoulder/elbow/wrist
/// 7-9 R shoulder/elbow/wrist | 10-12 L hip/knee/ankle | 13-15 R hip/knee/ankle
inline const Skeleton& canonical_skeleton() {
    static const Skeleton s = [] {
        Skeleton k;
        k.name = "body16";
        k.joint_names = {"pelvis", "spine",  "neck",   "head",   "lshoulder", "lelbow",
                         "lwrist", "rshoulder", "relbow", "rwrist", "lhip",   "lknee",
                         "lankle", "rhip",   "rknee",  "rankle"};
        k.parent = {-1, 0, 1, 2, 2, 4, 5, 2, 7, 8, 0, 10, 11, 0, 13, 14};
        k.part_segments = {
            {"left_arm", {4, 5, 6}},
            {"right_arm", {7, 8, 9}},
            {"left_leg", {10, 11, 12}},
            {"right_leg", {13, 14, 15}},
            {"torso", {0, 1, 2, 3, 4, 7, 10, 13}},
            // head, shoulders, hips and the four end effectors: joints that
            // share structure without a physical link
            {"ex_torso", {3, 4, 7, 10, 13, 6, 9, 12, 15}},
        };
        k.validate();
        return k;
    }();
    return s;
}

}  // namespace poselift

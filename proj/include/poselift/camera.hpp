#pragma once

#include <nlohmann/json.hpp>

#include "poselift/errors.hpp"
#include "poselift/pose.hpp"

namespace poselift {

constexpr double kMinDepthMm = 1.0;

/// Pinhole intrinsics. subject_depth_offset is added to z before the
/// divide so root-relative poses (z around 0) project sensibly.
struct Camera {
    double fx = 1000.0;
    double fy = 1000.0;
    double cx = 500.0;
    double cy = 500.0;
    double subject_depth_offset = 5000.0;  // mm

    void validate() const {
        if (fx <= 0 || fy <= 0) throw InvalidSpec("camera focal lengths must be positive");
    }

    nlohmann::json to_json() const {
        return {{"fx", fx}, {"fy", fy}, {"cx", cx}, {"cy", cy},
                {"subject_depth_offset", subject_depth_offset}};
    }
    static Camera from_json(const nlohmann::json& j) {
        Camera c;
        c.fx = j.at("fx").get<double>();
        c.fy = j.at("fy").get<double>();
        c.cx = j.at("cx").get<double>();
        c.cy = j.at("cy").get<double>();
        c.subject_depth_offset = j.at("subject_depth_offset").get<double>();
        c.validate();
        return c;
    }
};

inline Pose2D project(const Pose3D& pose, const Camera& cam) {
    Pose2D out(pose.joints());
    for (int j = 0; j < pose.joints(); ++j) {
        const double zd = pose.z(j) + cam.subject_depth_offset;
        if (zd <= kMinDepthMm)
            throw BehindCamera("joint " + std::to_string(j) + " depth " + std::to_string(zd));
        out.u(j) = cam.fx * pose.x(j) / zd + cam.cx;
        out.v(j) = cam.fy * pose.y(j) / zd + cam.cy;
    }
    return out;
}

}  // namespace poselift

#pragma once

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "poselift/errors.hpp"
#include "poselift/pose.hpp"
#include "poselift/skeleton.hpp"

namespace poselift {

/// Line-delimited pose file: '#'-prefixed key/value header, then one
/// frame record of J*dims reals per line. Values print with 17
/// significant digits, so write -> read round-trips doubles bit-exactly.
struct PoseFileHeader {
    int version = 1;
    std::uint64_t skeleton_hash = 0;
    std::string units;  // "mm" or "px"
    int dims = 2;
    int joints = 16;
    int frames_per_clip = 27;
    double frame_rate = 50.0;
    std::string domain;
    std::map<std::string, std::string> extra;  // provenance: config_hash, seed, ...
};

struct PoseFileData {
    PoseFileHeader header;
    std::vector<std::vector<double>> frames;

    std::size_t clip_count() const {
        return header.frames_per_clip > 0 ? frames.size() / header.frames_per_clip : 0;
    }
};

inline void write_pose_file(const std::string& path, const PoseFileData& data) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot open for write: " + path);
    const auto& h = data.header;
    char hexbuf[32];
    std::snprintf(hexbuf, sizeof(hexbuf), "%016" PRIx64, h.skeleton_hash);
    os << "#!poselift-pose v" << h.version << "\n";
    os << "# skeleton_hash: " << hexbuf << "\n";
    os << "# units: " << h.units << "\n";
    os << "# dims: " << h.dims << "\n";
    os << "# joints: " << h.joints << "\n";
    os << "# frames_per_clip: " << h.frames_per_clip << "\n";
    os << "# frame_rate: " << h.frame_rate << "\n";
    os << "# domain: " << h.domain << "\n";
    for (const auto& [k, v] : h.extra) os << "# " << k << ": " << v << "\n";
    os << "# count: " << data.frames.size() << "\n";
    char buf[32];
    for (const auto& frame : data.frames) {
        if (frame.size() != static_cast<std::size_t>(h.joints) * h.dims)
            throw FormatError("frame record size mismatch on write");
        for (std::size_t i = 0; i < frame.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", frame[i]);
            os << (i ? " " : "") << buf;
        }
        os << "\n";
    }
    if (!os) throw FormatError("short write: " + path);
}

inline PoseFileData read_pose_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open: " + path);
    PoseFileData data;
    std::string line;
    int lineno = 0;
    std::size_t declared_count = 0;
    bool have_magic = false;

    auto fail = [&](const std::string& what) {
        throw FormatError(path + ":" + std::to_string(lineno) + ": " + what);
    };

    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("#!poselift-pose", 0) == 0) {
                have_magic = true;
                continue;
            }
            const auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            std::string key = line.substr(1, colon - 1);
            std::string val = line.substr(colon + 1);
            auto trim = [](std::string& s) {
                s.erase(0, s.find_first_not_of(" \t"));
                s.erase(s.find_last_not_of(" \t") + 1);
            };
            trim(key);
            trim(val);
            try {
                if (key == "skeleton_hash")
                    data.header.skeleton_hash = std::stoull(val, nullptr, 16);
                else if (key == "units")
                    data.header.units = val;
                else if (key == "dims")
                    data.header.dims = std::stoi(val);
                else if (key == "joints")
                    data.header.joints = std::stoi(val);
                else if (key == "frames_per_clip")
                    data.header.frames_per_clip = std::stoi(val);
                else if (key == "frame_rate")
                    data.header.frame_rate = std::stod(val);
                else if (key == "domain")
                    data.header.domain = val;
                else if (key == "count")
                    declared_count = std::stoull(val);
                else
                    data.header.extra[key] = val;
            } catch (const std::exception&) {
                fail("bad header value for " + key);
            }
            continue;
        }
        if (!have_magic) fail("missing #!poselift-pose magic before data");
        const std::size_t expect = static_cast<std::size_t>(data.header.joints) *
                                   data.header.dims;
        std::vector<double> frame;
        frame.reserve(expect);
        std::istringstream ss(line);
        double v;
        while (ss >> v) frame.push_back(v);
        if (frame.size() != expect)
            fail("expected " + std::to_string(expect) + " values, got " +
                 std::to_string(frame.size()));
        for (double x : frame)
            if (!std::isfinite(x)) fail("non-finite value");
        data.frames.push_back(std::move(frame));
    }
    if (!have_magic) {
        lineno = 0;
        fail("not a poselift pose file");
    }
    if (declared_count != 0 && declared_count != data.frames.size()) {
        lineno = 0;
        fail("count says " + std::to_string(declared_count) + " frames but file has " +
             std::to_string(data.frames.size()));
    }
    if (data.header.frames_per_clip > 0 &&
        data.frames.size() % data.header.frames_per_clip != 0) {
        lineno = 0;
        fail("frame count not divisible by frames_per_clip");
    }
    return data;
}

inline void check_skeleton_hash(const PoseFileHeader& h, const Skeleton& skel,
                                const std::string& context) {
    if (h.skeleton_hash != skel.hash())
        throw SkeletonHashMismatch(context + ": file skeleton does not match the run's");
}

/// Clip assembly. Rejects degenerate all-zero 2D poses at ingestion.
inline std::vector<Clip2D> clips2d_from_file(const PoseFileData& d) {
    if (d.header.dims != 2) throw FormatError("expected dims=2 pose file");
    std::vector<Clip2D> out;
    const int T = d.header.frames_per_clip;
    for (std::size_t c = 0; c < d.clip_count(); ++c) {
        Clip2D clip;
        clip.frame_rate = d.header.frame_rate;
        for (int f = 0; f < T; ++f) {
            Pose2D p(d.header.joints);
            p.uv = d.frames[c * T + f];
            if (p.all_zero()) throw FormatError("degenerate all-zero 2D pose in clip");
            clip.frames.push_back(std::move(p));
        }
        clip.validate();
        out.push_back(std::move(clip));
    }
    return out;
}

inline std::vector<Clip3D> clips3d_from_file(const PoseFileData& d) {
    if (d.header.dims != 3) throw FormatError("expected dims=3 pose file");
    std::vector<Clip3D> out;
    const int T = d.header.frames_per_clip;
    for (std::size_t c = 0; c < d.clip_count(); ++c) {
        Clip3D clip;
        clip.frame_rate = d.header.frame_rate;
        for (int f = 0; f < T; ++f) {
            Pose3D p(d.header.joints);
            p.xyz = d.frames[c * T + f];
            clip.frames.push_back(std::move(p));
        }
        clip.validate();
        out.push_back(std::move(clip));
    }
    return out;
}

}  // namespace poselift

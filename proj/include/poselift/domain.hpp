#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "poselift/errors.hpp"
#include "poselift/pose_io.hpp"
#include "poselift/synth.hpp"

namespace poselift {

/// Labeled clip collection. Targets are trained on clips2d only; clips3d
/// carry evaluation labels.
struct ClipSet {
    std::string name;
    std::vector<Clip2D> clips2d;
    std::vector<Clip3D> clips3d;

    bool labeled() const { return clips3d.size() == clips2d.size() && !clips2d.empty(); }
};

/// One domain's data, loaded lazily. Sources are either pose files or an
/// inline synthetic spec; nothing is materialized until access is granted
/// by the stream's policy.
class DatasetHandle {
public:
    static DatasetHandle from_files(std::string name, std::string path2d, std::string path3d,
                                    const Skeleton& skel, int frames) {
        DatasetHandle h;
        h.name_ = std::move(name);
        h.path2d_ = std::move(path2d);
        h.path3d_ = std::move(path3d);
        h.skeleton_hash_ = skel.hash();
        h.frames_ = frames;
        return h;
    }
    static DatasetHandle from_synth(SynthDomainSpec spec, int n_clips, int frames) {
        DatasetHandle h;
        h.name_ = spec.name;
        h.synth_ = std::move(spec);
        h.n_clips_ = n_clips;
        h.frames_ = frames;
        return h;
    }
    static DatasetHandle from_memory(ClipSet set) {
        DatasetHandle h;
        h.name_ = set.name;
        h.cache_ = std::make_shared<ClipSet>(std::move(set));
        return h;
    }

    const std::string& name() const { return name_; }

    /// Materialize the data. Only called through DomainStream accessors.
    const ClipSet& load() const {
        if (!cache_) {
            auto set = std::make_shared<ClipSet>();
            set->name = name_;
            if (synth_) {
                SynthSet s = synth_domain(*synth_, n_clips_, frames_);
                set->clips2d = std::move(s.clips2d);
                set->clips3d = std::move(s.clips3d);
            } else {
                PoseFileData d2 = read_pose_file(path2d_);
                if (d2.header.skeleton_hash != skeleton_hash_)
                    throw SkeletonHashMismatch(path2d_);
                set->clips2d = clips2d_from_file(d2);
                if (!path3d_.empty()) {
                    PoseFileData d3 = read_pose_file(path3d_);
                    if (d3.header.skeleton_hash != skeleton_hash_)
                        throw SkeletonHashMismatch(path3d_);
                    set->clips3d = clips3d_from_file(d3);
                }
            }
            cache_ = std::move(set);
        }
        return *cache_;
    }

private:
    std::string name_;
    std::string path2d_, path3d_;
    std::uint64_t skeleton_hash_ = 0;
    std::optional<SynthDomainSpec> synth_;
    int n_clips_ = 0;
    int frames_ = 27;
    mutable std::shared_ptr<ClipSet> cache_;
};

struct AccessRecord {
    std::string dataset;
    int phase = 0;
    bool training = false;
};

/// Ordered source + target handles with the sequential access policy
/// enforced at the only data accessors. During phase j, training reads of
/// the source or any tg_{<j} (or future tg_{>j}) throw AccessViolation.
/// Evaluation reads are exempt (labels are used for metrics only).
class DomainStream {
public:
    DomainStream(DatasetHandle source, std::vector<DatasetHandle> targets)
        : source_(std::move(source)), targets_(std::move(targets)) {}

    int target_count() const { return static_cast<int>(targets_.size()); }
    const std::string& target_name(int j) const { return handle(j).name(); }

    /// Enter phase j (1-based). Phase 0 is source pretraining.
    void begin_phase(int j) {
        if (j < 0 || j > target_count()) throw ConfigError("begin_phase: bad phase index");
        current_phase_ = j;
    }
    int current_phase() const { return current_phase_; }

    /// Training accessor: source pairs, only during phase 0.
    const ClipSet& source_training() {
        if (current_phase_ != 0)
            throw AccessViolation("source training data requested during phase " +
                                  std::to_string(current_phase_));
        audit_.push_back({source_.name(), current_phase_, true});
        return source_.load();
    }

    /// Training accessor: target tg_j 2D clips, only during phase j.
    const ClipSet& target_training(int j) {
        if (j != current_phase_)
            throw AccessViolation("training data of " + handle(j).name() +
                                  " (tg_" + std::to_string(j) + ") requested during phase " +
                                  std::to_string(current_phase_));
        audit_.push_back({handle(j).name(), current_phase_, true});
        return handle(j).load();
    }

    /// Evaluation accessor: any seen domain, labels included. Exempt from
    /// the lifelong constraint.
    const ClipSet& evaluation(int j) {
        audit_.push_back({handle(j).name(), current_phase_, false});
        const ClipSet& s = handle(j).load();
        if (!s.labeled()) throw MissingLabels("evaluation set " + handle(j).name());
        return s;
    }

    const ClipSet& source_evaluation() {
        audit_.push_back({source_.name(), current_phase_, false});
        const ClipSet& s = source_.load();
        if (!s.labeled()) throw MissingLabels("source evaluation");
        return s;
    }

    const std::vector<AccessRecord>& audit() const { return audit_; }

private:
    const DatasetHandle& handle(int j) const {
        if (j < 1 || j > target_count()) throw ConfigError("bad target index");
        return targets_[static_cast<std::size_t>(j) - 1];
    }
    DatasetHandle& handle(int j) {
        if (j < 1 || j > target_count()) throw ConfigError("bad target index");
        return targets_[static_cast<std::size_t>(j) - 1];
    }

    DatasetHandle source_;
    std::vector<DatasetHandle> targets_;
    int current_phase_ = 0;
    std::vector<AccessRecord> audit_;
};

}  // namespace poselift

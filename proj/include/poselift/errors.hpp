#pragma once

#include <stdexcept>
#include <string>

namespace poselift {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ZeroLengthBone : Error {
    explicit ZeroLengthBone(const std::string& msg) : Error(msg) {}
};
struct BehindCamera : Error {
    explicit BehindCamera(const std::string& msg) : Error(msg) {}
};
struct SkeletonMismatch : Error {
    explicit SkeletonMismatch(const std::string& msg) : Error(msg) {}
};
struct DegeneratePose : Error {
    explicit DegeneratePose(const std::string& msg) : Error(msg) {}
};
struct ShapeMismatch : Error {
    explicit ShapeMismatch(const std::string& msg) : Error(msg) {}
};
struct NonFiniteLoss : Error {
    explicit NonFiniteLoss(const std::string& msg) : Error(msg) {}
};
struct NonFiniteGradient : Error {
    explicit NonFiniteGradient(const std::string& msg) : Error(msg) {}
};
struct DescriptorMismatch : Error {
    explicit DescriptorMismatch(const std::string& msg) : Error(msg) {}
};
struct DegenerateDirection : Error {
    explicit DegenerateDirection(const std::string& msg) : Error(msg) {}
};
struct DegenerateQuaternion : Error {
    explicit DegenerateQuaternion(const std::string& msg) : Error(msg) {}
};
struct StepOutOfRange : Error {
    explicit StepOutOfRange(const std::string& msg) : Error(msg) {}
};
struct EmptyDomain : Error {
    explicit EmptyDomain(const std::string& msg) : Error(msg) {}
};
struct EmptySource : Error {
    explicit EmptySource(const std::string& msg) : Error(msg) {}
};
struct UntrainedPredictor : Error {
    explicit UntrainedPredictor(const std::string& msg) : Error(msg) {}
};
struct ZeroNormPose : Error {
    explicit ZeroNormPose(const std::string& msg) : Error(msg) {}
};
struct AccessViolation : Error {
    explicit AccessViolation(const std::string& msg) : Error(msg) {}
};
struct MissingLabels : Error {
    explicit MissingLabels(const std::string& msg) : Error(msg) {}
};
struct FormatError : Error {
    explicit FormatError(const std::string& msg) : Error(msg) {}
};
struct SkeletonHashMismatch : Error {
    explicit SkeletonHashMismatch(const std::string& msg) : Error(msg) {}
};
struct InvalidSpec : Error {
    explicit InvalidSpec(const std::string& msg) : Error(msg) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace poselift

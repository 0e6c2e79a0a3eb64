#include "dpair/types.hpp"

#include <cmath>
#include <sstream>

namespace dpair {

void CameraIntrinsics::validate() const {
    std::ostringstream bad;
    if (!(fx > 0.0) || !(fy > 0.0)) bad << "focal lengths must be positive (fx=" << fx << ", fy=" << fy << ")";
    else if (width <= 0 || height <= 0) bad << "image size must be positive (" << width << "x" << height << ")";
    else if (!(cx >= 0.0 && cx < width)) bad << "cx=" << cx << " outside [0, " << width << ")";
    else if (!(cy >= 0.0 && cy < height)) bad << "cy=" << cy << " outside [0, " << height << ")";
    if (!bad.str().empty()) throw InvalidInputError("invalid intrinsics: " + bad.str());
}

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis, double angle_rad, const Vec3& translation) {
    RigidTransform t;
    t.rotation = Quat(Eigen::AngleAxisd(angle_rad, axis.normalized()));
    t.translation = translation;
    return t;
}

RigidTransform RigidTransform::normalized() const {
    RigidTransform t = *this;
    t.rotation.normalize();
    return t;
}

RigidTransform RigidTransform::inverse() const {
    RigidTransform t;
    t.rotation = rotation.conjugate();
    t.translation = -(t.rotation * translation);
    return t;
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
    RigidTransform t;
    t.rotation = (rotation * other.rotation).normalized();
    t.translation = rotation * other.translation + translation;
    return t;
}

double RigidTransform::rotation_angle_rad() const {
    double w = std::clamp(std::abs(rotation.normalized().w()), 0.0, 1.0);
    return 2.0 * std::acos(w);
}

double RigidTransform::rotation_angle_deg() const {
    return rotation_angle_rad() * 180.0 / M_PI;
}

TransformDelta transform_delta(const RigidTransform& a, const RigidTransform& b) {
    RigidTransform d = a.inverse() * b;
    return {d.rotation_angle_deg(), (a.translation - b.translation).norm()};
}

int DepthImage::valid_count() const {
    int n = 0;
    for (float v : values)
        if (v > 0.0f) ++n;
    return n;
}

void DepthImage::validate(double max_range_m) const {
    if (values.size() != static_cast<size_t>(width) * height)
        throw InvalidInputError("depth image storage does not match its dimensions");
    for (float v : values) {
        if (!std::isfinite(v) || v < 0.0f || v >= max_range_m) {
            std::ostringstream msg;
            msg << "depth value " << v << " outside [0, " << max_range_m << ")";
            throw InvalidInputError(msg.str());
        }
    }
}

std::int64_t MaskImage::count() const {
    std::int64_t n = 0;
    for (std::uint8_t b : bits)
        if (b) ++n;
    return n;
}

}  // namespace dpair

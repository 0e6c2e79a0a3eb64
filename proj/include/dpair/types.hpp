#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpair {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Error hierarchy. The CLI maps these onto exit codes, everything else
// just lets them propagate.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidInputError : Error {
    using Error::Error;
};
struct LoadError : InvalidInputError {
    using InvalidInputError::InvalidInputError;
};
struct WriteError : Error {
    using Error::Error;
};
struct BehindCameraError : InvalidInputError {
    using InvalidInputError::InvalidInputError;
};
struct AlignmentInfeasibleError : Error {
    using Error::Error;
};
struct DivergenceError : Error {
    using Error::Error;
};

/// Pinhole camera parameters. Pixel coordinates are continuous with the
/// pixel grid at integer positions, so the valid range is [0, width-1] x
/// [0, height-1].
struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    void validate() const;

    bool contains(double x, double y) const {
        return x >= 0.0 && y >= 0.0 && x <= width - 1.0 && y <= height - 1.0;
    }
    bool contains(const Vec2& p) const { return contains(p.x(), p.y()); }
};

/// Rotation (unit quaternion) plus translation in meters.
struct RigidTransform {
    Quat rotation{1.0, 0.0, 0.0, 0.0};  // (w, x, y, z)
    Vec3 translation{0.0, 0.0, 0.0};

    static RigidTransform identity() { return {}; }

    /// Rotation about `axis` by `angle_rad`, then translation.
    static RigidTransform from_axis_angle(const Vec3& axis, double angle_rad,
                                          const Vec3& translation = Vec3::Zero());

    RigidTransform normalized() const;
    RigidTransform inverse() const;
    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }

    /// this ∘ other: apply `other` first.
    RigidTransform operator*(const RigidTransform& other) const;

    double rotation_angle_rad() const;
    double rotation_angle_deg() const;
};

/// Rotation angle (deg) and translation distance (m) between two transforms.
struct TransformDelta {
    double rotation_deg = 0.0;
    double translation_m = 0.0;
};
TransformDelta transform_delta(const RigidTransform& a, const RigidTransform& b);

/// Depth map in meters, row major. Zero encodes a missing measurement, so
/// the validity mask is implied by the values and cannot get out of sync.
struct DepthImage {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    DepthImage() = default;
    DepthImage(int w, int h) : width(w), height(h), values(static_cast<size_t>(w) * h, 0.0f) {}

    size_t index(int x, int y) const { return static_cast<size_t>(y) * width + x; }
    float at(int x, int y) const { return values[index(x, y)]; }
    float& at(int x, int y) { return values[index(x, y)]; }
    bool valid(int x, int y) const { return at(x, y) > 0.0f; }
    bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

    int valid_count() const;

    /// Throws InvalidInputError if any value is non-finite, negative, or at or
    /// beyond max_range_m.
    void validate(double max_range_m = 10.0) const;
};

/// Interleaved 8-bit RGB, row major.
struct ColorImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    ColorImage() = default;
    ColorImage(int w, int h) : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, 0) {}

    size_t index(int x, int y) const { return (static_cast<size_t>(y) * width + x) * 3; }
    const std::uint8_t* at(int x, int y) const { return rgb.data() + index(x, y); }
    std::uint8_t* at(int x, int y) { return rgb.data() + index(x, y); }
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        auto* p = at(x, y);
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }

    /// Rec.601 luma: 0.299 R + 0.587 G + 0.114 B.
    double luminance(int x, int y) const {
        const std::uint8_t* p = at(x, y);
        return 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    }
};

/// Binary per-pixel mask (nonzero = set), row major.
struct MaskImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    MaskImage() = default;
    MaskImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), bits(static_cast<size_t>(w) * h, fill) {}

    static MaskImage all_on(int w, int h) { return MaskImage(w, h, 1); }

    size_t index(int x, int y) const { return static_cast<size_t>(y) * width + x; }
    bool on(int x, int y) const { return bits[index(x, y)] != 0; }
    void set(int x, int y, bool v) { bits[index(x, y)] = v ? 1 : 0; }

    std::int64_t count() const;
};

}  // namespace dpair

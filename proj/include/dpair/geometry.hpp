#pragma once

#include "dpair/types.hpp"

#include <cstdint>
#include <vector>

namespace dpair {

struct PixelDepth {
    Vec2 pixel;
    double depth = 0.0;  // meters, camera-space z
};

/// Round to nearest integer pixel, ties away from zero.
inline int round_pixel(double v) { return static_cast<int>(std::lround(v)); }

/// Back-project an in-bounds pixel with positive depth to camera space:
/// ((x - cx) d / fx, (y - cy) d / fy, d).
Vec3 unproject(const Vec2& pixel, double depth_m, const CameraIntrinsics& k);

/// Project a camera-space point with z > 0 onto the image plane. The result
/// may land outside the image; callers check bounds.
PixelDepth project(const Vec3& p, const CameraIntrinsics& k);

struct ReprojectionResult {
    DepthImage depth;    // destination-space depth
    ColorImage color;    // source color carried with each splat
    std::vector<std::int32_t> source_index;  // per destination pixel: source linear index, -1 if none

    std::int32_t source_at(int x, int y) const {
        return source_index[static_cast<size_t>(y) * depth.width + x];
    }
};

/// Unproject every valid source pixel, transform it with src_to_dst, and
/// splat it onto the nearest destination pixel. Collisions resolve to the
/// smallest destination-space depth (z-buffer); equal depths resolve to the
/// smallest source linear index, which makes the result independent of
/// thread count.
ReprojectionResult reproject_depth(const DepthImage& src_depth, const ColorImage& src_color,
                                   const CameraIntrinsics& k_src, const CameraIntrinsics& k_dst,
                                   const RigidTransform& src_to_dst);

}  // namespace dpair

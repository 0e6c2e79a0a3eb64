#include "dpair/geometry.hpp"

#include "dpair/parallel.hpp"

#include <atomic>
#include <bit>
#include <memory>
#include <sstream>

namespace dpair {

Vec3 unproject(const Vec2& pixel, double depth_m, const CameraIntrinsics& k) {
    if (!(depth_m > 0.0)) {
        std::ostringstream msg;
        msg << "unproject requires positive depth, got " << depth_m;
        throw InvalidInputError(msg.str());
    }
    if (!k.contains(pixel)) {
        std::ostringstream msg;
        msg << "pixel (" << pixel.x() << ", " << pixel.y() << ") outside " << k.width << "x" << k.height
            << " image";
        throw InvalidInputError(msg.str());
    }
    return {(pixel.x() - k.cx) * depth_m / k.fx, (pixel.y() - k.cy) * depth_m / k.fy, depth_m};
}

PixelDepth project(const Vec3& p, const CameraIntrinsics& k) {
    if (!(p.z() > 0.0)) {
        std::ostringstream msg;
        msg << "point with z=" << p.z() << " is behind the camera";
        throw BehindCameraError(msg.str());
    }
    return {{k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy}, p.z()};
}

namespace {

// (depth bits << 32) | source index. Positive IEEE floats compare like their
// bit patterns, so taking the minimum of the packed value implements
// "smallest depth wins, then smallest source index" in one atomic slot.
constexpr std::uint64_t kEmptySlot = ~0ull;

inline std::uint64_t pack_slot(float depth, std::uint32_t src) {
    return (static_cast<std::uint64_t>(std::bit_cast<std::uint32_t>(depth)) << 32) | src;
}

inline void atomic_min_u64(std::atomic<std::uint64_t>& slot, std::uint64_t value) {
    std::uint64_t cur = slot.load(std::memory_order_relaxed);
    while (value < cur && !slot.compare_exchange_weak(cur, value, std::memory_order_relaxed)) {
    }
}

}  // namespace

ReprojectionResult reproject_depth(const DepthImage& src_depth, const ColorImage& src_color,
                                   const CameraIntrinsics& k_src, const CameraIntrinsics& k_dst,
                                   const RigidTransform& src_to_dst) {
    k_src.validate();
    k_dst.validate();
    if (src_depth.width != k_src.width || src_depth.height != k_src.height)
        throw InvalidInputError("source depth dimensions do not match source intrinsics");
    if (src_color.width != src_depth.width || src_color.height != src_depth.height)
        throw InvalidInputError("source color dimensions do not match source depth");

    const size_t dst_size = static_cast<size_t>(k_dst.width) * k_dst.height;
    auto slots = std::make_unique<std::atomic<std::uint64_t>[]>(dst_size);
    for (size_t i = 0; i < dst_size; ++i) slots[i].store(kEmptySlot, std::memory_order_relaxed);

    const Mat3 rot = src_to_dst.rotation_matrix();
    const Vec3 trans = src_to_dst.translation;

    parallel_for(0, src_depth.height, [&](std::int64_t y) {
        for (int x = 0; x < src_depth.width; ++x) {
            const float d = src_depth.at(x, static_cast<int>(y));
            if (!(d > 0.0f)) continue;
            const Vec3 p = unproject({static_cast<double>(x), static_cast<double>(y)}, d, k_src);
            const Vec3 q = rot * p + trans;
            if (!(q.z() > 0.0)) continue;
            const double u = k_dst.fx * q.x() / q.z() + k_dst.cx;
            const double v = k_dst.fy * q.y() / q.z() + k_dst.cy;
            const int ui = round_pixel(u);
            const int vi = round_pixel(v);
            if (ui < 0 || vi < 0 || ui >= k_dst.width || vi >= k_dst.height) continue;
            const std::uint32_t src_idx =
                static_cast<std::uint32_t>(y) * static_cast<std::uint32_t>(src_depth.width) + x;
            atomic_min_u64(slots[static_cast<size_t>(vi) * k_dst.width + ui],
                           pack_slot(static_cast<float>(q.z()), src_idx));
        }
    });

    ReprojectionResult out;
    out.depth = DepthImage(k_dst.width, k_dst.height);
    out.color = ColorImage(k_dst.width, k_dst.height);
    out.source_index.assign(dst_size, -1);
    for (size_t i = 0; i < dst_size; ++i) {
        const std::uint64_t s = slots[i].load(std::memory_order_relaxed);
        if (s == kEmptySlot) continue;
        out.depth.values[i] = std::bit_cast<float>(static_cast<std::uint32_t>(s >> 32));
        const std::uint32_t src_idx = static_cast<std::uint32_t>(s);
        out.source_index[i] = static_cast<std::int32_t>(src_idx);
        const std::uint8_t* c = src_color.rgb.data() + static_cast<size_t>(src_idx) * 3;
        std::uint8_t* o = out.color.rgb.data() + i * 3;
        o[0] = c[0];
        o[1] = c[1];
        o[2] = c[2];
    }
    return out;
}

}  // namespace dpair

#pragma once

#include "dpair/sequence.hpp"
#include "dpair/spatial.hpp"
#include "dpair/temporal.hpp"
#include "dpair/types.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace dpair {

enum class PrimitiveKind { plane, sphere, box };

/// Analytic scene primitive. `pose` maps the primitive's local frame into
/// the world frame (= the LQ camera frame). Planes are finite rectangles in
/// the local xy plane with normal +z; spheres use size.x as radius; boxes
/// use size as half extents.
struct Primitive {
    PrimitiveKind kind = PrimitiveKind::plane;
    RigidTransform pose;
    Vec3 size{1.0, 1.0, 1.0};
    std::array<std::uint8_t, 3> albedo{200, 200, 200};
    double checker_m = 0.0;  // 0 = solid color, otherwise 3D checker cell size
    std::array<std::uint8_t, 3> albedo2{60, 60, 60};
    int group = 0;  // 0 = static, >0 joins an animated group
};

/// Rigid rotation of a primitive group about an axis through a pivot,
/// linear in time (a person slowly turning in place, roughly).
struct Spin {
    int group = 1;
    Vec3 axis{0.0, 1.0, 0.0};
    Vec3 pivot{0.0, 0.0, 0.0};
    double deg_per_s = 0.0;
};

/// Scene point tracked by the oracle correspondence provider. Anchors in an
/// animated group move with it.
struct AnchorPoint {
    Vec3 position{0.0, 0.0, 1.0};
    int group = 0;
};

struct SceneSpec {
    std::vector<Primitive> primitives;
    std::vector<AnchorPoint> anchors;
    std::vector<Spin> spins;
    std::array<std::uint8_t, 3> background{28, 28, 32};
    double max_range_m = 10.0;

    void validate() const;  // >= 8 anchors, geometry within range

    /// World motion of a group at time t (identity for group 0 or groups
    /// without a spin).
    RigidTransform group_motion(int group, double t_s) const;
    Vec3 anchor_position(size_t index, double t_s) const;
};

/// Per-sensor acquisition model. Depth noise sigma(z) = noise_sigma_mm +
/// noise_quad_mm_per_m2 * z^2, applied before dropout and quantization.
struct SensorSpec {
    CameraIntrinsics intrinsics;
    double fps = 30.0;
    double jitter_ms = 0.0;
    double noise_sigma_mm = 0.0;
    double noise_quad_mm_per_m2 = 0.0;
    double dropout_prob = 0.0;
    double quant_step_mm = 1.0;  // 0 disables quantization
};

struct RigSpec {
    SensorSpec lq;
    SensorSpec hq;
    RigidTransform hq_to_lq;  // true extrinsic
    double delta_ms = 0.0;    // true clock offset: t_lq = t_hq + delta

    void validate() const;
};

/// Noiseless render of the scene at time t_s from a camera posed by
/// cam_to_world (the LQ camera frame is the world frame). The frame's
/// timestamp is left at 0; record_pair assigns clocks.
Frame render_frame(const SceneSpec& scene, const CameraIntrinsics& k, const RigidTransform& cam_to_world,
                   double t_s);

/// Ground truth accompanying a simulated recording. True capture times are
/// on the world clock (= LQ clock) in microseconds.
struct SimTruth {
    double delta_ms = 0.0;
    RigidTransform hq_to_lq;
    std::vector<std::int64_t> lq_true_time_us;
    std::vector<std::int64_t> hq_true_time_us;
    SceneSpec scene;
};

struct RecordedPair {
    Sequence lq;
    Sequence hq;
    SimTruth truth;
    AlignmentResult alignment;  // the true alignment, residual 0
};

/// Simulate a two-sensor recording: jittered timestamp trains per sensor,
/// the HQ clock offset by -delta, per-frame renders at true capture times,
/// then per-sensor noise, dropout and quantization. Bit-identical for a
/// fixed seed regardless of thread count.
RecordedPair record_pair(const SceneSpec& scene, const RigSpec& rig, double duration_s, std::uint64_t seed);

/// Supplies exact correspondences by projecting scene anchor points into
/// both cameras at the frames' true capture times. With exact_depth the HQ
/// depth is the analytic anchor depth; otherwise it is sampled from the
/// rendered (possibly noisy) HQ depth image at the anchor's pixel.
struct OracleProviderOptions {
    bool exact_depth = true;
    double min_depth_m = 0.05;
};

class OracleCorrespondenceProvider : public CorrespondenceProvider {
public:
    OracleCorrespondenceProvider(SceneSpec scene, RigidTransform true_hq_to_lq, CameraIntrinsics k_lq,
                                 CameraIntrinsics k_hq, std::vector<std::int64_t> lq_true_time_us,
                                 std::vector<std::int64_t> hq_true_time_us,
                                 OracleProviderOptions options = {});

    /// Convenience: build from a recording's truth block.
    OracleCorrespondenceProvider(const SimTruth& truth, const CameraIntrinsics& k_lq,
                                 const CameraIntrinsics& k_hq, OracleProviderOptions options = {});

    bool needs_reprojection() const override { return false; }
    CorrespondenceSet extract(const FramePairView& view) const override;

private:
    SceneSpec scene_;
    RigidTransform lq_from_world_;  // identity by construction
    RigidTransform hq_from_world_;  // inverse of the true extrinsic
    CameraIntrinsics k_lq_;
    CameraIntrinsics k_hq_;
    std::vector<std::int64_t> lq_true_time_us_;
    std::vector<std::int64_t> hq_true_time_us_;
    OracleProviderOptions options_;
};

// JSON (de)serialization for the CLI-facing spec and truth files.
nlohmann::json scene_to_json(const SceneSpec& scene);
SceneSpec scene_from_json(const nlohmann::json& j);
SceneSpec load_scene_spec(const std::filesystem::path& file);

nlohmann::json rig_to_json(const RigSpec& rig);
RigSpec rig_from_json(const nlohmann::json& j);
RigSpec load_rig_spec(const std::filesystem::path& file);

nlohmann::json truth_to_json(const SimTruth& truth);
SimTruth truth_from_json(const nlohmann::json& j);
SimTruth load_truth(const std::filesystem::path& file);

}  // namespace dpair

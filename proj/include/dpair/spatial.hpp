#pragma once

#include "dpair/geometry.hpp"
#include "dpair/sequence.hpp"
#include "dpair/temporal.hpp"
#include "dpair/types.hpp"

#include <array>
#include <memory>
#include <span>
#include <vector>

namespace dpair {

/// One matched 2D point pair. p_h lives on the HQ image plane and carries
/// the HQ depth at its pixel, so the loss never has to touch images.
struct Correspondence {
    Vec2 p_l;
    Vec2 p_h;
    double hq_depth_m = 0.0;
};

struct CorrespondenceSet {
    int pair_index = 0;  // index into the FrameMapping this set was extracted for
    std::vector<Correspondence> matches;
};

/// Everything a correspondence provider may look at for one matched frame
/// pair. hq_in_lq is only populated for providers that report
/// needs_reprojection().
struct FramePairView {
    int lq_index = 0;
    int hq_index = 0;
    int pair_index = 0;
    double gap_ms = 0.0;
    const Frame* lq_frame = nullptr;
    const Frame* hq_frame = nullptr;
    const CameraIntrinsics* k_lq = nullptr;
    const CameraIntrinsics* k_hq = nullptr;
    const ReprojectionResult* hq_in_lq = nullptr;
};

/// Pluggable supplier of 2D correspondences between an LQ color frame and
/// the reprojected HQ color frame.
class CorrespondenceProvider {
public:
    virtual ~CorrespondenceProvider() = default;

    /// Whether extract() wants the HQ frame reprojected into the LQ view
    /// under the current transform estimate.
    virtual bool needs_reprojection() const { return true; }

    virtual CorrespondenceSet extract(const FramePairView& view) const = 0;
};

struct LossOptions {
    double huber_delta_px = 0.0;  // 0 disables robust weighting
    double min_z_m = 1e-4;        // transformed points with z <= this are dropped
};

/// Parameter order for the gradient: (qw, qx, qy, qz, tx, ty, tz). The
/// rotation is applied through the normalized quaternion, so the gradient is
/// well defined for slightly denormalized inputs.
struct LossValue {
    double loss = 0.0;
    std::array<double, 7> gradient{};
    int dropped = 0;  // terms discarded by the near-zero-depth guard
    int terms = 0;    // terms that entered the sum
};

/// Sum over all matches of the image-plane distance between the reprojected
/// HQ point and its LQ partner, with the analytic gradient.
LossValue correspondence_loss(std::span<const CorrespondenceSet> sets, const CameraIntrinsics& k_hq,
                              const CameraIntrinsics& k_lq, const RigidTransform& hq_to_lq,
                              const LossOptions& options = {});

struct CalibrateOptions {
    int outer_passes = 10;          // correspondence recomputation passes
    int max_inner_steps = 200;      // gradient steps per pass
    double initial_step = 1e-2;     // line search starting step for the first iteration
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    double update_tol = 1e-6;       // outer loop stop: transform change per pass
    int min_correspondences = 50;
    double huber_delta_px = 0.0;
    double min_z_m = 1e-4;
    double divergence_factor = 10.0;
};

struct CalibrationReport {
    RigidTransform transform;
    std::vector<double> inner_loss_trace;   // accepted-step losses, all passes concatenated
    std::vector<double> pass_final_loss;    // objective at the end of each outer pass
    std::vector<int> pass_corr_counts;
    bool converged = false;
    double final_loss = 0.0;            // optimized objective (Huber when enabled)
    double final_distance_loss = 0.0;   // plain pixel-distance sum at the final transform
    int total_correspondences = 0;
    double mean_residual_px = 0.0;      // final_distance_loss / total_correspondences
    int dropped_terms = 0;
};

/// Estimate the HQ->LQ extrinsic over the mapped frame pairs: reproject HQ
/// color under the current estimate, extract fresh correspondences, descend
/// the loss, repeat. Starts from the identity transform.
CalibrationReport calibrate(const Sequence& lq, const Sequence& hq, const FrameMapping& mapping,
                            const CorrespondenceProvider& provider, const CalibrateOptions& options = {});

/// Classical corner detector / patch matcher used when no oracle is
/// available: Harris-style corners, zero-mean patch descriptors compared by
/// normalized cross-correlation, mutual-nearest matching with a ratio test.
struct ClassicMatcherOptions {
    int max_keypoints = 400;
    double harris_k = 0.04;
    double response_rel_threshold = 1e-3;  // fraction of the strongest response
    int nms_radius = 4;
    int patch_radius = 5;
    double ratio = 0.8;
};

class ClassicCorrespondenceProvider : public CorrespondenceProvider {
public:
    explicit ClassicCorrespondenceProvider(ClassicMatcherOptions options = {}) : options_(options) {}

    bool needs_reprojection() const override { return true; }
    CorrespondenceSet extract(const FramePairView& view) const override;

private:
    ClassicMatcherOptions options_;
};

}  // namespace dpair

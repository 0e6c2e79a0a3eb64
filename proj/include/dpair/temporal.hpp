#pragma once

#include "dpair/sequence.hpp"
#include "dpair/types.hpp"

#include <vector>

namespace dpair {

/// Constant clock offset added to HQ timestamps to express them on the LQ
/// clock: t_lq = t_hq + delta.
struct TimeShift {
    double delta_ms = 0.0;
};

struct FramePair {
    int lq_index = 0;
    int hq_index = 0;
    double gap_ms = 0.0;  // |t_lq - (t_hq + delta)|
};

struct FrameMapping {
    std::vector<FramePair> pairs;  // one entry per LQ frame, ordered by lq_index

    FrameMapping filtered(double max_gap_ms) const;
};

/// For each LQ frame, the HQ frame nearest in shifted time. Ties break
/// toward the smaller HQ index. Two-pointer sweep, O(N_L + N_H).
FrameMapping match_frames(const Sequence& lq, const Sequence& hq, TimeShift shift);

/// Same, on bare microsecond timestamp lists (both strictly increasing).
FrameMapping match_timestamps(const std::vector<std::int64_t>& lq_ts,
                              const std::vector<std::int64_t>& hq_ts, TimeShift shift);

/// Recovered alignment between an LQ and an HQ sequence.
struct AlignmentResult {
    TimeShift shift;
    RigidTransform hq_to_lq;
    FrameMapping mapping;
    double residual_px = 0.0;  // mean correspondence loss per match
};

}  // namespace dpair

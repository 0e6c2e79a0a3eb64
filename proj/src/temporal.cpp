#include "dpair/temporal.hpp"

#include <cmath>

namespace dpair {

FrameMapping FrameMapping::filtered(double max_gap_ms) const {
    FrameMapping out;
    for (const FramePair& p : pairs)
        if (p.gap_ms <= max_gap_ms) out.pairs.push_back(p);
    return out;
}

FrameMapping match_timestamps(const std::vector<std::int64_t>& lq_ts,
                              const std::vector<std::int64_t>& hq_ts, TimeShift shift) {
    if (lq_ts.empty() || hq_ts.empty())
        throw InvalidInputError("frame matching requires two non-empty sequences");

    const double delta_us = shift.delta_ms * 1000.0;
    FrameMapping mapping;
    mapping.pairs.reserve(lq_ts.size());

    size_t j = 0;
    for (size_t i = 0; i < lq_ts.size(); ++i) {
        const double target = static_cast<double>(lq_ts[i]);
        auto gap_at = [&](size_t idx) { return std::abs(target - (static_cast<double>(hq_ts[idx]) + delta_us)); };
        // Shifted HQ timestamps are increasing, so the best index never moves
        // backwards as target grows. Strict improvement keeps ties on the
        // smaller index.
        while (j + 1 < hq_ts.size() && gap_at(j + 1) < gap_at(j)) ++j;
        mapping.pairs.push_back({static_cast<int>(i), static_cast<int>(j), gap_at(j) / 1000.0});
    }
    return mapping;
}

FrameMapping match_frames(const Sequence& lq, const Sequence& hq, TimeShift shift) {
    std::vector<std::int64_t> lq_ts, hq_ts;
    lq_ts.reserve(lq.frames.size());
    hq_ts.reserve(hq.frames.size());
    for (const Frame& f : lq.frames) lq_ts.push_back(f.timestamp_us);
    for (const Frame& f : hq.frames) hq_ts.push_back(f.timestamp_us);
    return match_timestamps(lq_ts, hq_ts, shift);
}

}  // namespace dpair

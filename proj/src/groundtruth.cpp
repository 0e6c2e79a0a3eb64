#include "dpair/groundtruth.hpp"

#include "dpair/geometry.hpp"
#include "dpair/parallel.hpp"

namespace dpair {

PairedDataset build_paired_dataset(const Sequence& lq, const Sequence& hq, const AlignmentResult& alignment,
                                   double max_gap_ms) {
    for (const FramePair& p : alignment.mapping.pairs) {
        if (p.lq_index < 0 || p.lq_index >= static_cast<int>(lq.frames.size()) || p.hq_index < 0 ||
            p.hq_index >= static_cast<int>(hq.frames.size()))
            throw InvalidInputError("alignment mapping references frames outside the sequences");
    }

    const FrameMapping retained = alignment.mapping.filtered(max_gap_ms);

    PairedDataset dataset;
    dataset.intrinsics = lq.intrinsics;
    dataset.delta_ms = alignment.shift.delta_ms;
    dataset.hq_to_lq = alignment.hq_to_lq;
    dataset.records.resize(retained.pairs.size());

    parallel_for(0, static_cast<std::int64_t>(retained.pairs.size()), [&](std::int64_t i) {
        const FramePair& p = retained.pairs[i];
        const Frame& hq_frame = hq.frames[p.hq_index];
        ReprojectionResult reproj = reproject_depth(hq_frame.depth, hq_frame.color, hq.intrinsics,
                                                    lq.intrinsics, alignment.hq_to_lq);
        PairedRecord& rec = dataset.records[i];
        rec.lq = lq.frames[p.lq_index];
        rec.gt_depth = std::move(reproj.depth);
        rec.gt_color = std::move(reproj.color);
        rec.gap_ms = p.gap_ms;
    });
    return dataset;
}

}  // namespace dpair

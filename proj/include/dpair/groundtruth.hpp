#pragma once

#include "dpair/sequence.hpp"
#include "dpair/temporal.hpp"

namespace dpair {

/// For each mapped pair with gap <= max_gap_ms, reproject the HQ frame into
/// the LQ camera under the recovered extrinsic and pair it with the LQ
/// frame. Records keep LQ order; one HQ frame may serve several LQ frames.
PairedDataset build_paired_dataset(const Sequence& lq, const Sequence& hq, const AlignmentResult& alignment,
                                   double max_gap_ms);

}  // namespace dpair

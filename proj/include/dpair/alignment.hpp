#pragma once

#include "dpair/spatial.hpp"
#include "dpair/temporal.hpp"

#include <string>
#include <vector>

namespace dpair {

struct ShiftSearchOptions {
    double range_ms = 60.0;
    double step_ms = 5.0;
    double max_gap_ms = 15.0;  // frame pairs beyond this are excluded from calibration
    bool coarse_to_fine = false;  // refine around the grid winner at half step

    // Candidate calibrations default to Huber smoothing: the smoothed
    // objective descends reliably from identity at every shift, while
    // candidates are still scored by the plain per-correspondence distance
    // at the calibrated transform.
    ShiftSearchOptions() { calibrate.huber_delta_px = 3.0; }

    CalibrateOptions calibrate;
};

struct ShiftCandidate {
    double delta_ms = 0.0;
    bool eligible = false;
    int retained_pairs = 0;
    int correspondences = 0;
    double residual_px = 0.0;  // mean loss per correspondence after calibration
    int passes = 0;
    std::string failure;  // empty when eligible
};

struct ShiftSearchResult {
    AlignmentResult alignment;
    std::vector<ShiftCandidate> candidates;  // grid order, refinements appended
};

/// Evaluate every shift on the grid {-range, -range+step, ..., +range}: build
/// the frame mapping, drop pairs beyond max_gap_ms, calibrate, and score by
/// the mean residual per correspondence. Returns the minimizer; ties break
/// toward smaller |delta|, then toward negative delta. Candidates are
/// independent and evaluated in parallel; the result does not depend on
/// thread count.
ShiftSearchResult find_time_shift(const Sequence& lq, const Sequence& hq,
                                  const CorrespondenceProvider& provider,
                                  const ShiftSearchOptions& options = {});

}  // namespace dpair

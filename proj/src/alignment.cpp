#include "dpair/alignment.hpp"

#include "dpair/parallel.hpp"

#include <cmath>

namespace dpair {

namespace {

struct Evaluated {
    ShiftCandidate candidate;
    RigidTransform transform;
    FrameMapping retained;
};

Evaluated evaluate_shift(const Sequence& lq, const Sequence& hq, const CorrespondenceProvider& provider,
                         const ShiftSearchOptions& options, double delta_ms) {
    Evaluated ev;
    ev.candidate.delta_ms = delta_ms;
    const FrameMapping full = match_frames(lq, hq, {delta_ms});
    ev.retained = full.filtered(options.max_gap_ms);
    ev.candidate.retained_pairs = static_cast<int>(ev.retained.pairs.size());
    if (ev.retained.pairs.empty()) {
        ev.candidate.failure = "no frame pairs within the gap threshold";
        return ev;
    }
    try {
        const CalibrationReport report = calibrate(lq, hq, ev.retained, provider, options.calibrate);
        ev.candidate.eligible = true;
        ev.candidate.correspondences = report.total_correspondences;
        ev.candidate.residual_px = report.mean_residual_px;
        ev.candidate.passes = static_cast<int>(report.pass_final_loss.size());
        ev.transform = report.transform;
    } catch (const AlignmentInfeasibleError& e) {
        ev.candidate.failure = e.what();
    } catch (const DivergenceError& e) {
        ev.candidate.failure = e.what();
    }
    return ev;
}

// Minimal residual; ties toward smaller |delta|, then toward negative delta.
bool better(const ShiftCandidate& a, const ShiftCandidate& b) {
    if (a.residual_px != b.residual_px) return a.residual_px < b.residual_px;
    const double aa = std::abs(a.delta_ms), ab = std::abs(b.delta_ms);
    if (aa != ab) return aa < ab;
    return a.delta_ms < b.delta_ms;
}

}  // namespace

ShiftSearchResult find_time_shift(const Sequence& lq, const Sequence& hq,
                                  const CorrespondenceProvider& provider,
                                  const ShiftSearchOptions& options) {
    if (!(options.range_ms > 0.0) || !(options.step_ms > 0.0) || options.step_ms > options.range_ms)
        throw InvalidInputError("shift search requires 0 < step_ms <= range_ms");

    std::vector<double> grid;
    for (double d = -options.range_ms; d <= options.range_ms + 1e-9; d += options.step_ms)
        grid.push_back(d);

    std::vector<Evaluated> evaluated(grid.size());
    parallel_for(0, static_cast<std::int64_t>(grid.size()), [&](std::int64_t i) {
        evaluated[i] = evaluate_shift(lq, hq, provider, options, grid[i]);
    });

    if (options.coarse_to_fine) {
        int coarse_best = -1;
        for (size_t i = 0; i < evaluated.size(); ++i) {
            if (!evaluated[i].candidate.eligible) continue;
            if (coarse_best < 0 || better(evaluated[i].candidate, evaluated[coarse_best].candidate))
                coarse_best = static_cast<int>(i);
        }
        if (coarse_best >= 0) {
            const double center = evaluated[coarse_best].candidate.delta_ms;
            const double half = options.step_ms / 2.0;
            for (double d : {center - half, center + half}) {
                if (std::abs(d) > options.range_ms + 1e-9) continue;
                evaluated.push_back(evaluate_shift(lq, hq, provider, options, d));
            }
        }
    }

    int best = -1;
    for (size_t i = 0; i < evaluated.size(); ++i) {
        if (!evaluated[i].candidate.eligible) continue;
        if (best < 0 || better(evaluated[i].candidate, evaluated[best].candidate))
            best = static_cast<int>(i);
    }

    ShiftSearchResult result;
    for (const Evaluated& ev : evaluated) result.candidates.push_back(ev.candidate);
    if (best < 0)
        throw AlignmentInfeasibleError("no time shift candidate produced enough correspondences");

    result.alignment.shift.delta_ms = evaluated[best].candidate.delta_ms;
    result.alignment.hq_to_lq = evaluated[best].transform;
    result.alignment.mapping = evaluated[best].retained;
    result.alignment.residual_px = evaluated[best].candidate.residual_px;
    return result;
}

}  // namespace dpair

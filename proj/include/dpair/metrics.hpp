#pragma once

#include "dpair/sequence.hpp"
#include "dpair/types.hpp"

#include <span>
#include <vector>

namespace dpair {

enum class LossMode { mean, sum };

struct MaskedLoss {
    double value = 0.0;
    std::int64_t pixels = 0;
    bool empty_mask = false;  // joint mask had no pixels; value is 0 by convention
};

/// Mean (or plain sum) of |pred - gt| in meters over pixels where both the
/// validity mask and the segmentation mask are set. Pred pixels without a
/// measurement enter as 0.
MaskedLoss masked_l1(const DepthImage& pred, const DepthImage& gt, const MaskImage& m,
                     const MaskImage& m_seg, LossMode mode = LossMode::mean);

/// Mean squared error in mm^2 over the joint mask.
MaskedLoss masked_mse(const DepthImage& pred, const DepthImage& gt, const MaskImage& m,
                      const MaskImage& m_seg);

struct FrameEval {
    double l1_m = 0.0;
    double mse_mm2 = 0.0;
    double rmse_mm = 0.0;
    std::int64_t pixels = 0;
    bool empty_mask = false;
};

/// Evaluate one prediction against a paired record. The validity mask is
/// the record's reprojected-depth mask; the segmentation mask defaults to
/// all-ones when the record has none.
FrameEval evaluate_record(const PairedRecord& record, const DepthImage& pred);

struct DatasetEval {
    std::vector<FrameEval> frames;
    double mean_l1_m = 0.0;
    double mean_mse_mm2 = 0.0;
    double mean_rmse_mm = 0.0;  // mean of per-frame RMSE values
    int evaluated_frames = 0;   // frames entering the means
    int empty_frames = 0;       // frames skipped for an empty joint mask
};

/// Aggregate as the mean of per-frame values; frames with an empty joint
/// mask are counted but excluded from the means. An empty `predictions`
/// span evaluates the raw LQ depth.
DatasetEval evaluate_dataset(const PairedDataset& dataset, std::span<const DepthImage> predictions = {});

}  // namespace dpair

#pragma once

#include "dpair/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dpair {

enum class SensorLabel { lq, hq };

std::string to_string(SensorLabel label);
SensorLabel sensor_label_from_string(const std::string& s);

/// One timestamped color+depth measurement, optionally with a person
/// segmentation mask supplied by an external tool.
struct Frame {
    ColorImage color;
    DepthImage depth;
    std::int64_t timestamp_us = 0;
    std::optional<MaskImage> seg_mask;
};

struct Sequence {
    std::string id;
    SensorLabel sensor = SensorLabel::lq;
    CameraIntrinsics intrinsics;
    std::vector<Frame> frames;

    /// Non-empty, strictly increasing timestamps, frame dimensions matching
    /// the intrinsics. Throws InvalidInputError naming the offending frame.
    void validate() const;
};

/// One LQ frame paired with ground truth reprojected from the matched HQ
/// frame. The validity mask is implied by gt_depth (nonzero = present).
struct PairedRecord {
    Frame lq;
    DepthImage gt_depth;
    ColorImage gt_color;
    double gap_ms = 0.0;
};

struct PairedDataset {
    CameraIntrinsics intrinsics;  // LQ camera; all records share its dimensions
    double delta_ms = 0.0;
    RigidTransform hq_to_lq;
    std::vector<PairedRecord> records;

    void validate(double max_gap_ms) const;
};

}  // namespace dpair

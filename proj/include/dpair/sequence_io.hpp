#pragma once

#include "dpair/sequence.hpp"

#include <filesystem>

namespace dpair {

/// Directory layout:
///   manifest.json
///   color/%06d.png   8-bit RGB
///   depth/%06d.png   16-bit grayscale, millimeters, 0 = missing
///   mask/%06d.png    optional 8-bit grayscale, nonzero = person
///
/// Manifest keys: sensor, intrinsics{fx,fy,cx,cy,width,height},
/// frames[{color,depth,mask?,timestamp_us}].
Sequence load_sequence(const std::filesystem::path& dir);
void save_sequence(const Sequence& seq, const std::filesystem::path& dir);

/// Paired dataset layout: manifest.json carrying delta_ms, the HQ->LQ
/// transform and per-record time gaps, plus lq_color/ lq_depth/ lq_mask/
/// gt_depth/ gt_color/ image directories.
void save_paired_dataset(const PairedDataset& dataset, const std::filesystem::path& dir);
PairedDataset load_paired_dataset(const std::filesystem::path& dir);

}  // namespace dpair

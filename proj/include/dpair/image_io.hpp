#pragma once

#include "dpair/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace dpair {

/// 8-bit RGB PNG.
ColorImage read_color_png(const std::filesystem::path& file);
void write_color_png(const std::filesystem::path& file, const ColorImage& img);

/// 16-bit grayscale PNG holding millimeters; 0 = missing. Values convert to
/// meters on load and round back to millimeters on save.
DepthImage read_depth_png(const std::filesystem::path& file);
void write_depth_png(const std::filesystem::path& file, const DepthImage& img);

/// 8-bit grayscale PNG, nonzero = set.
MaskImage read_mask_png(const std::filesystem::path& file);
void write_mask_png(const std::filesystem::path& file, const MaskImage& mask);

/// Raw 16-bit grayscale PNG (used for error heatmaps).
void write_gray16_png(const std::filesystem::path& file, const std::vector<std::uint16_t>& values,
                      int width, int height);

}  // namespace dpair

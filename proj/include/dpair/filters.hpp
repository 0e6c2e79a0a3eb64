#pragma once

#include "dpair/sequence.hpp"
#include "dpair/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace dpair {

enum class FilterKind { bf, jbf, rgf };

std::string to_string(FilterKind kind);
FilterKind filter_kind_from_string(const std::string& s);

struct FilterParams {
    double sigma_space_px = 2.0;
    double sigma_range = 0.05;  // meters for depth-guided weights, intensity units for color guides
    int radius = 0;             // 0 = ceil(3 * sigma_space)
    int iterations = 4;         // rolling guidance only

    int effective_radius() const;
    void validate(bool needs_iterations) const;
};

/// Missing pixels contribute zero weight everywhere; an output pixel stays
/// missing when its total weight falls below 1e-12. Bilateral additionally
/// requires a valid center pixel for its range reference.
DepthImage bilateral(const DepthImage& depth, const FilterParams& params);

/// Range weights from guide-image luminance differences, so holes can fill.
DepthImage joint_bilateral(const DepthImage& depth, const ColorImage& guide, const FilterParams& params);

/// Iteration 0 blurs the input; iterations 1..k joint-bilateral filter the
/// original input guided by the previous result.
DepthImage rolling_guidance(const DepthImage& depth, const FilterParams& params);

/// Mask-aware normalized Gaussian blur (the RGF starting point).
DepthImage gaussian_blur(const DepthImage& depth, double sigma_px, int radius);

class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual DepthImage denoise(const Frame& frame) const = 0;
    virtual std::string name() const = 0;
};

std::unique_ptr<Denoiser> make_denoiser(FilterKind kind, const FilterParams& params);

struct ParamGrid {
    std::vector<double> sigma_space{2.0};
    std::vector<double> sigma_range{0.05};
    std::vector<int> radius{0};
    std::vector<int> iterations{4};
};

/// Exhaustive grid search minimizing the dataset masked MSE; ties resolve
/// toward smaller sigmas.
FilterParams tune_params(FilterKind kind, const PairedDataset& dataset, const ParamGrid& grid);

}  // namespace dpair

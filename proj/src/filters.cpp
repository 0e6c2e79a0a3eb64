#include "dpair/filters.hpp"

#include "dpair/metrics.hpp"
#include "dpair/parallel.hpp"

#include <cmath>

namespace dpair {

std::string to_string(FilterKind kind) {
    switch (kind) {
        case FilterKind::bf: return "bf";
        case FilterKind::jbf: return "jbf";
        case FilterKind::rgf: return "rgf";
    }
    return "bf";
}

FilterKind filter_kind_from_string(const std::string& s) {
    if (s == "bf") return FilterKind::bf;
    if (s == "jbf") return FilterKind::jbf;
    if (s == "rgf") return FilterKind::rgf;
    throw InvalidInputError("unknown filter '" + s + "' (expected bf, jbf or rgf)");
}

int FilterParams::effective_radius() const {
    return radius > 0 ? radius : static_cast<int>(std::ceil(3.0 * sigma_space_px));
}

void FilterParams::validate(bool needs_iterations) const {
    if (!(sigma_space_px > 0.0)) throw InvalidInputError("sigma_space must be positive");
    if (!(sigma_range > 0.0)) throw InvalidInputError("sigma_range must be positive");
    if (radius < 0) throw InvalidInputError("radius must be >= 1 (or 0 for the default)");
    if (effective_radius() < 1) throw InvalidInputError("effective window radius must be >= 1");
    if (needs_iterations && iterations < 1) throw InvalidInputError("iterations must be >= 1");
}

namespace {

constexpr double kMinWeight = 1e-12;

std::vector<double> spatial_kernel(int radius, double sigma) {
    std::vector<double> k(radius + 1);
    for (int i = 0; i <= radius; ++i) k[i] = std::exp(-0.5 * (double(i) * i) / (sigma * sigma));
    return k;
}

// Shared weighted-mean core. `range_weight(center_index, neighbor_index)`
// returns the range factor; `center_ok` gates whether the output pixel can
// be computed at all (bilateral needs a valid center for its reference).
template <typename CenterOk, typename RangeWeight>
DepthImage weighted_mean_filter(const DepthImage& d, int radius, const std::vector<double>& sk,
                                CenterOk&& center_ok, RangeWeight&& range_weight) {
    DepthImage out(d.width, d.height);
    parallel_for(0, d.height, [&](std::int64_t yy) {
        const int y = static_cast<int>(yy);
        for (int x = 0; x < d.width; ++x) {
            const size_t pi = d.index(x, y);
            if (!center_ok(pi)) continue;
            double wsum = 0.0, vsum = 0.0;
            const int y0 = std::max(0, y - radius), y1 = std::min(d.height - 1, y + radius);
            const int x0 = std::max(0, x - radius), x1 = std::min(d.width - 1, x + radius);
            for (int ny = y0; ny <= y1; ++ny) {
                const double wy = sk[std::abs(ny - y)];
                for (int nx = x0; nx <= x1; ++nx) {
                    const size_t qi = d.index(nx, ny);
                    const float v = d.values[qi];
                    if (!(v > 0.0f)) continue;
                    const double w = wy * sk[std::abs(nx - x)] * range_weight(pi, qi);
                    wsum += w;
                    vsum += w * v;
                }
            }
            if (wsum >= kMinWeight) out.values[pi] = static_cast<float>(vsum / wsum);
        }
    });
    return out;
}

DepthImage jbf_scalar_guide(const DepthImage& d, const std::vector<float>& guide, double sigma_range,
                            int radius, const std::vector<double>& sk, bool guide_has_holes) {
    const double inv2s2 = 0.5 / (sigma_range * sigma_range);
    return weighted_mean_filter(
        d, radius, sk,
        [&](size_t pi) { return !guide_has_holes || guide[pi] > 0.0f; },
        [&](size_t pi, size_t qi) {
            if (guide_has_holes && !(guide[qi] > 0.0f)) return 0.0;
            const double dg = static_cast<double>(guide[qi]) - static_cast<double>(guide[pi]);
            return std::exp(-dg * dg * inv2s2);
        });
}

}  // namespace

DepthImage gaussian_blur(const DepthImage& depth, double sigma_px, int radius) {
    if (!(sigma_px > 0.0) || radius < 1) throw InvalidInputError("gaussian blur needs sigma > 0, radius >= 1");
    const std::vector<double> sk = spatial_kernel(radius, sigma_px);
    return weighted_mean_filter(
        depth, radius, sk, [](size_t) { return true; }, [](size_t, size_t) { return 1.0; });
}

DepthImage bilateral(const DepthImage& depth, const FilterParams& params) {
    params.validate(false);
    const int radius = params.effective_radius();
    const std::vector<double> sk = spatial_kernel(radius, params.sigma_space_px);
    const double inv2s2 = 0.5 / (params.sigma_range * params.sigma_range);
    return weighted_mean_filter(
        depth, radius, sk, [&](size_t pi) { return depth.values[pi] > 0.0f; },
        [&](size_t pi, size_t qi) {
            const double dd = static_cast<double>(depth.values[qi]) - static_cast<double>(depth.values[pi]);
            return std::exp(-dd * dd * inv2s2);
        });
}

DepthImage joint_bilateral(const DepthImage& depth, const ColorImage& guide, const FilterParams& params) {
    params.validate(false);
    if (guide.width != depth.width || guide.height != depth.height)
        throw InvalidInputError("joint bilateral: guide dimensions do not match depth");
    const int radius = params.effective_radius();
    const std::vector<double> sk = spatial_kernel(radius, params.sigma_space_px);

    std::vector<float> lum(depth.values.size());
    for (int y = 0; y < guide.height; ++y)
        for (int x = 0; x < guide.width; ++x)
            lum[depth.index(x, y)] = static_cast<float>(guide.luminance(x, y));

    const double inv2s2 = 0.5 / (params.sigma_range * params.sigma_range);
    return weighted_mean_filter(
        depth, radius, sk, [](size_t) { return true; },
        [&](size_t pi, size_t qi) {
            const double dg = static_cast<double>(lum[qi]) - static_cast<double>(lum[pi]);
            return std::exp(-dg * dg * inv2s2);
        });
}

DepthImage rolling_guidance(const DepthImage& depth, const FilterParams& params) {
    params.validate(true);
    const int radius = params.effective_radius();
    const std::vector<double> sk = spatial_kernel(radius, params.sigma_space_px);

    DepthImage guide = gaussian_blur(depth, params.sigma_space_px, radius);
    for (int it = 1; it < params.iterations; ++it)
        guide = jbf_scalar_guide(depth, guide.values, params.sigma_range, radius, sk, true);
    return guide;
}

namespace {

class FilterDenoiser : public Denoiser {
public:
    FilterDenoiser(FilterKind kind, FilterParams params) : kind_(kind), params_(params) {
        params_.validate(kind == FilterKind::rgf);
    }

    DepthImage denoise(const Frame& frame) const override {
        switch (kind_) {
            case FilterKind::bf: return bilateral(frame.depth, params_);
            case FilterKind::jbf: return joint_bilateral(frame.depth, frame.color, params_);
            case FilterKind::rgf: return rolling_guidance(frame.depth, params_);
        }
        throw InvalidInputError("unknown filter kind");
    }

    std::string name() const override { return to_string(kind_); }

private:
    FilterKind kind_;
    FilterParams params_;
};

}  // namespace

std::unique_ptr<Denoiser> make_denoiser(FilterKind kind, const FilterParams& params) {
    return std::make_unique<FilterDenoiser>(kind, params);
}

FilterParams tune_params(FilterKind kind, const PairedDataset& dataset, const ParamGrid& grid) {
    if (dataset.records.empty()) throw InvalidInputError("tune_params needs a non-empty dataset");
    if (grid.sigma_space.empty() || grid.sigma_range.empty() || grid.radius.empty() ||
        grid.iterations.empty())
        throw InvalidInputError("tune_params needs a non-empty parameter grid");

    struct Best {
        double mse = 0.0;
        FilterParams params;
        bool set = false;
    } best;

    auto key_less = [](const FilterParams& a, const FilterParams& b) {
        if (a.sigma_range != b.sigma_range) return a.sigma_range < b.sigma_range;
        if (a.sigma_space_px != b.sigma_space_px) return a.sigma_space_px < b.sigma_space_px;
        if (a.radius != b.radius) return a.radius < b.radius;
        return a.iterations < b.iterations;
    };

    for (double ss : grid.sigma_space) {
        for (double sr : grid.sigma_range) {
            for (int r : grid.radius) {
                for (int it : grid.iterations) {
                    FilterParams p;
                    p.sigma_space_px = ss;
                    p.sigma_range = sr;
                    p.radius = r;
                    p.iterations = it;
                    p.validate(kind == FilterKind::rgf);

                    const auto denoiser = make_denoiser(kind, p);
                    std::vector<DepthImage> preds(dataset.records.size());
                    parallel_for(0, static_cast<std::int64_t>(dataset.records.size()), [&](std::int64_t i) {
                        preds[i] = denoiser->denoise(dataset.records[i].lq);
                    });
                    const DatasetEval ev = evaluate_dataset(dataset, preds);
                    if (ev.evaluated_frames == 0)
                        throw InvalidInputError("tune_params: no record has a non-empty joint mask");

                    if (!best.set || ev.mean_mse_mm2 < best.mse ||
                        (ev.mean_mse_mm2 == best.mse && key_less(p, best.params))) {
                        best = {ev.mean_mse_mm2, p, true};
                    }
                    if (kind != FilterKind::rgf) break;  // iterations only matter for rgf
                }
            }
        }
    }
    return best.params;
}

}  // namespace dpair

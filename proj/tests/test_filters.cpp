#include "dpair/filters.hpp"
#include "dpair/metrics.hpp"
#include "dpair/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace dpair;

TEST_SUITE_BEGIN("filters");

namespace {

constexpr double kEps = 1e-12;

DepthImage random_depth(int w, int h, SplitMix64& rng, double hole_prob = 0.1) {
    DepthImage d(w, h);
    for (float& v : d.values)
        if (rng.uniform() >= hole_prob) v = static_cast<float>(rng.uniform(0.5, 4.0));
    return d;
}

ColorImage checker_guide(int w, int h, int cell, std::uint8_t lo = 40, std::uint8_t hi = 220) {
    ColorImage g(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::uint8_t v = ((x / cell + y / cell) & 1) ? hi : lo;
            g.set(x, y, v, v, v);
        }
    return g;
}

// Naive double-loop references, written directly from the definitions.

double spatial_w(int dx, int dy, double sigma) {
    return std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma));
}

DepthImage naive_gauss(const DepthImage& d, double sigma, int radius) {
    DepthImage out(d.width, d.height);
    for (int y = 0; y < d.height; ++y)
        for (int x = 0; x < d.width; ++x) {
            double ws = 0.0, vs = 0.0;
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= d.width || ny >= d.height) continue;
                    if (!d.valid(nx, ny)) continue;
                    const double w = spatial_w(dx, dy, sigma);
                    ws += w;
                    vs += w * d.at(nx, ny);
                }
            if (ws >= kEps) out.at(x, y) = static_cast<float>(vs / ws);
        }
    return out;
}

DepthImage naive_bilateral(const DepthImage& d, const FilterParams& p) {
    const int radius = p.effective_radius();
    DepthImage out(d.width, d.height);
    for (int y = 0; y < d.height; ++y)
        for (int x = 0; x < d.width; ++x) {
            if (!d.valid(x, y)) continue;
            const double center = d.at(x, y);
            double ws = 0.0, vs = 0.0;
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= d.width || ny >= d.height) continue;
                    if (!d.valid(nx, ny)) continue;
                    const double dd = d.at(nx, ny) - center;
                    const double w = spatial_w(dx, dy, p.sigma_space_px) *
                                     std::exp(-0.5 * dd * dd / (p.sigma_range * p.sigma_range));
                    ws += w;
                    vs += w * d.at(nx, ny);
                }
            if (ws >= kEps) out.at(x, y) = static_cast<float>(vs / ws);
        }
    return out;
}

DepthImage naive_jbf(const DepthImage& d, const ColorImage& guide, const FilterParams& p) {
    const int radius = p.effective_radius();
    DepthImage out(d.width, d.height);
    for (int y = 0; y < d.height; ++y)
        for (int x = 0; x < d.width; ++x) {
            const double center = guide.luminance(x, y);
            double ws = 0.0, vs = 0.0;
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= d.width || ny >= d.height) continue;
                    if (!d.valid(nx, ny)) continue;
                    const double dg = guide.luminance(nx, ny) - center;
                    const double w = spatial_w(dx, dy, p.sigma_space_px) *
                                     std::exp(-0.5 * dg * dg / (p.sigma_range * p.sigma_range));
                    ws += w;
                    vs += w * d.at(nx, ny);
                }
            if (ws >= kEps) out.at(x, y) = static_cast<float>(vs / ws);
        }
    return out;
}

DepthImage naive_rgf(const DepthImage& d, const FilterParams& p) {
    const int radius = p.effective_radius();
    DepthImage guide = naive_gauss(d, p.sigma_space_px, radius);
    for (int it = 1; it < p.iterations; ++it) {
        DepthImage next(d.width, d.height);
        for (int y = 0; y < d.height; ++y)
            for (int x = 0; x < d.width; ++x) {
                if (!guide.valid(x, y)) continue;
                const double center = guide.at(x, y);
                double ws = 0.0, vs = 0.0;
                for (int dy = -radius; dy <= radius; ++dy)
                    for (int dx = -radius; dx <= radius; ++dx) {
                        const int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= d.width || ny >= d.height) continue;
                        if (!d.valid(nx, ny) || !guide.valid(nx, ny)) continue;
                        const double dg = guide.at(nx, ny) - center;
                        const double w = spatial_w(dx, dy, p.sigma_space_px) *
                                         std::exp(-0.5 * dg * dg / (p.sigma_range * p.sigma_range));
                        ws += w;
                        vs += w * d.at(nx, ny);
                    }
                if (ws >= kEps) next.at(x, y) = static_cast<float>(vs / ws);
            }
        guide = std::move(next);
    }
    return guide;
}

double max_abs_diff(const DepthImage& a, const DepthImage& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i)
        m = std::max(m, std::abs(double(a.values[i]) - double(b.values[i])));
    return m;
}

}  // namespace

TEST_CASE("all filters leave a constant image unchanged") {
    DepthImage d(24, 20);
    std::fill(d.values.begin(), d.values.end(), 1.75f);
    FilterParams p;
    p.sigma_space_px = 2.0;
    p.sigma_range = 0.05;

    CHECK(max_abs_diff(bilateral(d, p), d) < 1e-6);
    CHECK(max_abs_diff(joint_bilateral(d, checker_guide(24, 20, 4), p), d) < 1e-6);
    FilterParams pr = p;
    pr.iterations = 4;
    CHECK(max_abs_diff(rolling_guidance(d, pr), d) < 1e-6);
}

TEST_CASE("bilateral with huge range sigma matches a plain Gaussian blur") {
    SplitMix64 rng(31);
    const DepthImage d = random_depth(32, 28, rng, 0.0);
    FilterParams p;
    p.sigma_space_px = 1.8;
    p.sigma_range = 1e9;
    const DepthImage want = naive_gauss(d, p.sigma_space_px, p.effective_radius());
    CHECK(max_abs_diff(bilateral(d, p), want) < 1e-6);
}

TEST_CASE("a sharp step edge survives a tight range sigma") {
    DepthImage d(32, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 32; ++x) d.at(x, y) = x < 16 ? 2.0f : 2.5f;
    FilterParams p;
    p.sigma_space_px = 2.0;
    p.sigma_range = 0.01;
    const DepthImage out = bilateral(d, p);
    CHECK(max_abs_diff(out, d) < 1e-3);  // every pixel moves less than 1 mm
}

TEST_CASE("filters match their double-loop oracles on random images") {
    SplitMix64 rng(67);
    for (int trial = 0; trial < 6; ++trial) {
        const DepthImage d = random_depth(32, 32, rng);
        const ColorImage g = checker_guide(32, 32, 5);
        FilterParams p;
        p.sigma_space_px = rng.uniform(1.0, 2.5);
        p.sigma_range = rng.uniform(0.02, 0.3);
        p.iterations = 3;

        CHECK(max_abs_diff(bilateral(d, p), naive_bilateral(d, p)) < 1e-6);
        FilterParams pj = p;
        pj.sigma_range = rng.uniform(8.0, 60.0);
        CHECK(max_abs_diff(joint_bilateral(d, g, pj), naive_jbf(d, g, pj)) < 1e-6);
        CHECK(max_abs_diff(rolling_guidance(d, p), naive_rgf(d, p)) < 1e-6);
    }
}

TEST_CASE("joint bilateral with a constant guide equals a Gaussian blur") {
    SplitMix64 rng(19);
    const DepthImage d = random_depth(28, 24, rng);
    ColorImage guide(28, 24);
    std::fill(guide.rgb.begin(), guide.rgb.end(), std::uint8_t{123});
    FilterParams p;
    p.sigma_space_px = 2.0;
    p.sigma_range = 10.0;
    CHECK(max_abs_diff(joint_bilateral(d, guide, p), naive_gauss(d, 2.0, p.effective_radius())) < 1e-6);
}

TEST_CASE("guide texture imprints on geometrically flat depth") {
    // A sloped plane: a symmetric blur keeps it planar in the interior, so
    // any interior deviation comes from the guide texture.
    DepthImage d(40, 24);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 40; ++x) d.at(x, y) = 2.0f + 0.004f * x;
    FilterParams p;
    p.sigma_space_px = 2.0;
    p.sigma_range = 12.0;
    const int r = p.effective_radius();

    ColorImage flat(40, 24);
    std::fill(flat.rgb.begin(), flat.rgb.end(), std::uint8_t{128});
    const DepthImage base = joint_bilateral(d, flat, p);
    const DepthImage textured = joint_bilateral(d, checker_guide(40, 24, 4), p);

    double base_dev = 0.0, textured_dev = 0.0;
    for (int y = r; y < 24 - r; ++y)
        for (int x = r; x < 40 - r; ++x) {
            base_dev = std::max(base_dev, std::abs(double(base.at(x, y)) - double(d.at(x, y))));
            textured_dev = std::max(textured_dev, std::abs(double(textured.at(x, y)) - double(d.at(x, y))));
        }
    CHECK(base_dev < 1e-5);
    CHECK(textured_dev > 1e-4);
}

TEST_CASE("rolling guidance with one iteration is the Gaussian blur") {
    SplitMix64 rng(23);
    const DepthImage d = random_depth(24, 24, rng);
    FilterParams p;
    p.sigma_space_px = 1.5;
    p.sigma_range = 0.05;
    p.iterations = 1;
    CHECK(max_abs_diff(rolling_guidance(d, p), naive_gauss(d, 1.5, p.effective_radius())) < 1e-6);
}

TEST_CASE("rolling guidance removes a small bump and restores a large edge") {
    DepthImage d(48, 24);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 48; ++x) d.at(x, y) = x < 36 ? 2.0f : 2.3f;
    d.at(12, 12) += 0.005f;  // 2-px bump of 5 mm
    d.at(13, 12) += 0.005f;

    FilterParams p;
    p.sigma_space_px = 2.0;
    p.sigma_range = 0.03;
    p.iterations = 4;
    const DepthImage out = rolling_guidance(d, p);

    CHECK(std::abs(double(out.at(12, 12)) - 2.0) < 5e-4);
    CHECK(std::abs(double(out.at(13, 12)) - 2.0) < 5e-4);

    // The 0.3 m step must survive on both sides of the boundary.
    for (int y = 8; y < 16; ++y) {
        CHECK(std::abs(double(out.at(34, y)) - 2.0) < 2e-3);
        CHECK(std::abs(double(out.at(37, y)) - 2.3) < 2e-3);
    }
}

TEST_CASE("rolling guidance iterations converge on smooth input") {
    SplitMix64 rng(29);
    DepthImage d(32, 24);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 32; ++x)
            d.at(x, y) = 2.0f + 0.3f * std::sin(x * 0.2f) * std::cos(y * 0.17f) +
                         0.002f * static_cast<float>(rng.normal());

    FilterParams p;
    p.sigma_space_px = 1.5;
    p.sigma_range = 0.05;
    DepthImage prev;
    double prev_delta = 1e9;
    for (int k = 1; k <= 5; ++k) {
        p.iterations = k;
        DepthImage cur = rolling_guidance(d, p);
        if (k > 1) {
            const double delta = max_abs_diff(cur, prev);
            CHECK(delta <= prev_delta + 1e-9);
            prev_delta = delta;
        }
        prev = std::move(cur);
    }
}

TEST_CASE("filters commute with a constant depth offset") {
    SplitMix64 rng(37);
    const DepthImage d = random_depth(24, 20, rng);
    const float c = 0.625f;
    DepthImage shifted = d;
    for (float& v : shifted.values)
        if (v > 0.0f) v += c;

    FilterParams p;
    p.sigma_space_px = 1.6;
    p.sigma_range = 0.08;
    p.iterations = 3;
    const ColorImage g = checker_guide(24, 20, 4);

    auto check_shift = [&](const DepthImage& a, const DepthImage& b) {
        for (size_t i = 0; i < a.values.size(); ++i) {
            if (a.values[i] > 0.0f && b.values[i] > 0.0f)
                CHECK(std::abs(double(b.values[i]) - double(a.values[i]) - c) < 1e-5);
            else
                CHECK((a.values[i] > 0.0f) == (b.values[i] > 0.0f));
        }
    };
    check_shift(bilateral(d, p), bilateral(shifted, p));
    FilterParams pj = p;
    pj.sigma_range = 15.0;
    check_shift(joint_bilateral(d, g, pj), joint_bilateral(shifted, g, pj));
    check_shift(rolling_guidance(d, p), rolling_guidance(shifted, p));
}

TEST_CASE("outputs stay inside the window's input range") {
    SplitMix64 rng(41);
    const DepthImage d = random_depth(24, 24, rng);
    FilterParams p;
    p.sigma_space_px = 1.5;
    p.sigma_range = 0.2;
    p.iterations = 2;
    const int r = p.effective_radius();

    for (const DepthImage& out :
         {bilateral(d, p), joint_bilateral(d, checker_guide(24, 24, 3), p), rolling_guidance(d, p)}) {
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 24; ++x) {
                if (!out.valid(x, y)) continue;
                float lo = 1e9f, hi = -1e9f;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        const int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= 24 || ny >= 24 || !d.valid(nx, ny)) continue;
                        lo = std::min(lo, d.at(nx, ny));
                        hi = std::max(hi, d.at(nx, ny));
                    }
                CHECK(out.at(x, y) >= lo - 1e-6f);
                CHECK(out.at(x, y) <= hi + 1e-6f);
            }
    }
}

TEST_CASE("parameter validation rejects bad values") {
    FilterParams p;
    p.sigma_space_px = 0.0;
    CHECK_THROWS_AS(p.validate(false), InvalidInputError);
    p.sigma_space_px = 2.0;
    p.sigma_range = -1.0;
    CHECK_THROWS_AS(p.validate(false), InvalidInputError);
    p.sigma_range = 0.05;
    p.iterations = 0;
    CHECK_THROWS_AS(p.validate(true), InvalidInputError);
    p.iterations = 2;
    CHECK_NOTHROW(p.validate(true));

    const DepthImage d(8, 8);
    CHECK_THROWS_AS(joint_bilateral(d, ColorImage(4, 4), p), InvalidInputError);
}

namespace {

PairedDataset noisy_plane_dataset(double noise_mm, int frames, SplitMix64& rng) {
    PairedDataset ds;
    ds.intrinsics = {50.0, 50.0, 16.0, 12.0, 32, 24};
    for (int f = 0; f < frames; ++f) {
        PairedRecord r;
        r.gt_depth = DepthImage(32, 24);
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 32; ++x) r.gt_depth.at(x, y) = 2.0f + 0.003f * x + 0.002f * y;
        r.gt_color = ColorImage(32, 24);
        r.lq.color = ColorImage(32, 24);
        r.lq.depth = r.gt_depth;
        for (float& v : r.lq.depth.values) v += static_cast<float>(rng.normal() * noise_mm / 1000.0);
        r.lq.timestamp_us = f * 33000;
        ds.records.push_back(std::move(r));
    }
    return ds;
}

}  // namespace

TEST_CASE("tuning a single-point grid returns that point") {
    SplitMix64 rng(1);
    const PairedDataset ds = noisy_plane_dataset(20.0, 2, rng);
    ParamGrid grid;
    grid.sigma_space = {1.7};
    grid.sigma_range = {0.033};
    grid.radius = {4};
    grid.iterations = {2};
    const FilterParams best = tune_params(FilterKind::bf, ds, grid);
    CHECK(best.sigma_space_px == 1.7);
    CHECK(best.sigma_range == 0.033);
    CHECK(best.radius == 4);
}

TEST_CASE("tuned parameters achieve the smallest grid MSE when re-evaluated") {
    SplitMix64 rng(2);
    const PairedDataset ds = noisy_plane_dataset(20.0, 2, rng);
    ParamGrid grid;
    grid.sigma_space = {1.0, 2.0};
    grid.sigma_range = {0.01, 0.04, 0.1};
    const FilterParams best = tune_params(FilterKind::bf, ds, grid);

    auto mse_of = [&](const FilterParams& p) {
        std::vector<DepthImage> preds;
        for (const PairedRecord& r : ds.records) preds.push_back(naive_bilateral(r.lq.depth, p));
        return evaluate_dataset(ds, preds).mean_mse_mm2;
    };
    const double best_mse = mse_of(best);
    for (double ss : grid.sigma_space)
        for (double sr : grid.sigma_range) {
            FilterParams p;
            p.sigma_space_px = ss;
            p.sigma_range = sr;
            CHECK(best_mse <= mse_of(p) + 1e-9);
        }
}

TEST_CASE("tuning tracks the noise level within one grid step") {
    SplitMix64 rng(3);
    const PairedDataset ds = noisy_plane_dataset(20.0, 3, rng);
    ParamGrid grid;
    grid.sigma_space = {2.0};
    grid.sigma_range = {0.005, 0.01, 0.02, 0.04, 0.08, 0.16};
    const FilterParams best = tune_params(FilterKind::bf, ds, grid);

    // Dense sweep as the oracle for the best range sigma.
    double dense_best = grid.sigma_range.front();
    double dense_mse = 1e300;
    for (double sr = 0.005; sr <= 0.16; sr *= 1.3) {
        FilterParams p;
        p.sigma_space_px = 2.0;
        p.sigma_range = sr;
        std::vector<DepthImage> preds;
        for (const PairedRecord& r : ds.records) preds.push_back(naive_bilateral(r.lq.depth, p));
        const double mse = evaluate_dataset(ds, preds).mean_mse_mm2;
        if (mse < dense_mse) {
            dense_mse = mse;
            dense_best = sr;
        }
    }
    // Within one step of the dense optimum on the geometric grid.
    CHECK(best.sigma_range >= dense_best / 2.0 - 1e-12);
    CHECK(best.sigma_range <= dense_best * 2.0 + 1e-12);
}

TEST_CASE("tuning rejects empty inputs") {
    SplitMix64 rng(4);
    const PairedDataset ds = noisy_plane_dataset(10.0, 1, rng);
    ParamGrid empty_grid;
    empty_grid.sigma_range.clear();
    CHECK_THROWS_AS(tune_params(FilterKind::bf, ds, empty_grid), InvalidInputError);
    PairedDataset empty_ds;
    empty_ds.intrinsics = ds.intrinsics;
    CHECK_THROWS_AS(tune_params(FilterKind::bf, empty_ds, ParamGrid{}), InvalidInputError);
}

TEST_SUITE_END();

#include "dpair/metrics.hpp"
#include "dpair/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace dpair;

TEST_SUITE_BEGIN("metrics");

namespace {

DepthImage quantized_depth(int w, int h, SplitMix64& rng, double hole_prob = 0.1) {
    DepthImage d(w, h);
    for (float& v : d.values)
        if (rng.uniform() >= hole_prob)
            v = static_cast<float>(std::llround(rng.uniform(0.3, 6.0) * 1000.0)) / 1000.0f;
    return d;
}

MaskImage random_mask(int w, int h, SplitMix64& rng, double on_prob) {
    MaskImage m(w, h);
    for (auto& b : m.bits) b = rng.uniform() < on_prob ? 1 : 0;
    return m;
}

// Scalar per-pixel loops, written independently of the library path.
double naive_l1(const DepthImage& p, const DepthImage& g, const MaskImage& m, const MaskImage& ms,
                std::int64_t* count) {
    double sum = 0.0;
    std::int64_t n = 0;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x)
            if (m.on(x, y) && ms.on(x, y)) {
                sum += std::abs(double(p.at(x, y)) - double(g.at(x, y)));
                ++n;
            }
    *count = n;
    return n ? sum / n : 0.0;
}

double naive_mse_mm2(const DepthImage& p, const DepthImage& g, const MaskImage& m, const MaskImage& ms) {
    double sum = 0.0;
    std::int64_t n = 0;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x)
            if (m.on(x, y) && ms.on(x, y)) {
                const double e = (double(p.at(x, y)) - double(g.at(x, y))) * 1000.0;
                sum += e * e;
                ++n;
            }
    return n ? sum / n : 0.0;
}

}  // namespace

TEST_CASE("identical images score zero") {
    SplitMix64 rng(1);
    const DepthImage g = quantized_depth(16, 12, rng);
    const MaskImage all = MaskImage::all_on(16, 12);
    CHECK(masked_l1(g, g, all, all).value == 0.0);
    CHECK(masked_mse(g, g, all, all).value == 0.0);
}

TEST_CASE("constant 10 mm offset scores 10 mm") {
    DepthImage g(16, 12);
    DepthImage p(16, 12);
    for (size_t i = 0; i < g.values.size(); ++i) {
        g.values[i] = 2.0f;
        p.values[i] = 2.010f;
    }
    const MaskImage all = MaskImage::all_on(16, 12);
    CHECK(masked_l1(p, g, all, all).value == doctest::Approx(0.010).epsilon(1e-4));
    CHECK(masked_mse(p, g, all, all).value == doctest::Approx(100.0).epsilon(1e-3));
}

TEST_CASE("losses match the scalar loop oracle") {
    SplitMix64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const DepthImage g = quantized_depth(24, 18, rng);
        const DepthImage p = quantized_depth(24, 18, rng);
        const MaskImage m = random_mask(24, 18, rng, 0.8);
        const MaskImage ms = random_mask(24, 18, rng, 0.7);

        std::int64_t n = 0;
        const double want_l1 = naive_l1(p, g, m, ms, &n);
        const MaskedLoss got_l1 = masked_l1(p, g, m, ms);
        CHECK(std::abs(got_l1.value - want_l1) <= 1e-9);
        CHECK(got_l1.pixels == n);

        CHECK(std::abs(masked_mse(p, g, m, ms).value - naive_mse_mm2(p, g, m, ms)) <= 1e-9);
    }
}

TEST_CASE("sum mode is the mean times the pixel count") {
    SplitMix64 rng(3);
    const DepthImage g = quantized_depth(16, 12, rng);
    const DepthImage p = quantized_depth(16, 12, rng);
    const MaskImage m = random_mask(16, 12, rng, 0.7);
    const MaskImage all = MaskImage::all_on(16, 12);
    const MaskedLoss mean = masked_l1(p, g, m, all, LossMode::mean);
    const MaskedLoss sum = masked_l1(p, g, m, all, LossMode::sum);
    CHECK(sum.value == doctest::Approx(mean.value * mean.pixels).epsilon(1e-12));
}

TEST_CASE("empty joint mask reports a diagnostic instead of failing") {
    const DepthImage g(8, 8);
    const DepthImage p(8, 8);
    const MaskImage none(8, 8);
    const MaskedLoss l = masked_l1(p, g, none, MaskImage::all_on(8, 8));
    CHECK(l.value == 0.0);
    CHECK(l.pixels == 0);
    CHECK(l.empty_mask);
}

TEST_CASE("pixels outside the joint mask contribute nothing") {
    DepthImage g(8, 1);
    DepthImage p(8, 1);
    for (int x = 0; x < 8; ++x) {
        g.at(x, 0) = 1.0f;
        p.at(x, 0) = x < 4 ? 1.0f : 9.0f;  // large error only on masked-out pixels
    }
    MaskImage m = MaskImage::all_on(8, 1);
    MaskImage ms = MaskImage::all_on(8, 1);
    for (int x = 4; x < 8; ++x) ms.set(x, 0, false);
    CHECK(masked_l1(p, g, m, ms).value == 0.0);
    CHECK(masked_mse(p, g, m, ms).value == 0.0);
}

TEST_CASE("masked_l1 is symmetric in its arguments") {
    SplitMix64 rng(9);
    const DepthImage g = quantized_depth(12, 12, rng);
    const DepthImage p = quantized_depth(12, 12, rng);
    const MaskImage all = MaskImage::all_on(12, 12);
    CHECK(masked_l1(p, g, all, all).value == masked_l1(g, p, all, all).value);
}

TEST_CASE("disjoint mask partitions combine as a weighted mean") {
    SplitMix64 rng(11);
    const DepthImage g = quantized_depth(20, 20, rng, 0.0);
    const DepthImage p = quantized_depth(20, 20, rng, 0.0);
    const MaskImage all = MaskImage::all_on(20, 20);

    MaskImage left(20, 20), right(20, 20);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x)
            (x < 9 ? left : right).set(x, y, true);

    const MaskedLoss a = masked_l1(p, g, left, all);
    const MaskedLoss b = masked_l1(p, g, right, all);
    const MaskedLoss whole = masked_l1(p, g, all, all);
    const double combined =
        (a.value * a.pixels + b.value * b.pixels) / static_cast<double>(a.pixels + b.pixels);
    CHECK(whole.value == doctest::Approx(combined).epsilon(1e-12));
    CHECK(a.pixels + b.pixels == whole.pixels);
}

TEST_CASE("dimension mismatch is rejected") {
    const DepthImage g(8, 8);
    const DepthImage p(9, 8);
    const MaskImage m = MaskImage::all_on(8, 8);
    CHECK_THROWS_AS(masked_l1(p, g, m, m), InvalidInputError);
}

TEST_CASE("dataset aggregation averages per-frame values and tracks empties") {
    SplitMix64 rng(21);
    PairedDataset d;
    d.intrinsics = {10.0, 10.0, 4.0, 4.0, 10, 10};
    for (int i = 0; i < 3; ++i) {
        PairedRecord r;
        r.lq.depth = quantized_depth(10, 10, rng, 0.0);
        r.lq.color = ColorImage(10, 10);
        r.gt_depth = i == 2 ? DepthImage(10, 10) : quantized_depth(10, 10, rng, 0.0);
        r.gt_color = ColorImage(10, 10);
        d.records.push_back(std::move(r));
    }
    const DatasetEval ev = evaluate_dataset(d);
    CHECK(ev.frames.size() == 3);
    CHECK(ev.evaluated_frames == 2);
    CHECK(ev.empty_frames == 1);
    const double mean = (ev.frames[0].mse_mm2 + ev.frames[1].mse_mm2) / 2.0;
    CHECK(ev.mean_mse_mm2 == doctest::Approx(mean).epsilon(1e-12));
}

TEST_SUITE_END();

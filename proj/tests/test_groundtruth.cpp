#include "dpair/groundtruth.hpp"
#include "dpair/simulator.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace dpair;

TEST_SUITE_BEGIN("groundtruth");

TEST_CASE("an impossible gap threshold yields an empty dataset") {
    using namespace testutil;
    const SceneSpec scene = test_scene();
    const RigSpec rig = test_rig(7.0, small_extrinsic());
    const RecordedPair rec = record_pair(scene, rig, 0.5, 2);
    const PairedDataset ds = build_paired_dataset(rec.lq, rec.hq, rec.alignment, 0.0);
    CHECK(ds.records.empty());
}

TEST_CASE("reprojected ground truth agrees with a direct render of the LQ view") {
    using namespace testutil;
    const SceneSpec scene = test_scene(0.0);
    RigSpec rig = test_rig(0.0, small_extrinsic());
    rig.lq.noise_sigma_mm = 0.0;
    rig.lq.dropout_prob = 0.0;
    rig.lq.jitter_ms = 0.0;
    rig.hq.jitter_ms = 0.0;
    const RecordedPair rec = record_pair(scene, rig, 0.2, 4);

    const PairedDataset ds = build_paired_dataset(rec.lq, rec.hq, rec.alignment, 15.0);
    REQUIRE(!ds.records.empty());

    const double quant_m = rig.hq.quant_step_mm / 1000.0;
    for (const PairedRecord& r : ds.records) {
        // The LQ frame itself is the analytic render of the LQ view.
        int overlap = 0, close = 0;
        for (int y = 0; y < r.gt_depth.height; ++y)
            for (int x = 0; x < r.gt_depth.width; ++x) {
                if (!r.gt_depth.valid(x, y) || !r.lq.depth.valid(x, y)) continue;
                ++overlap;
                if (std::abs(double(r.gt_depth.at(x, y)) - double(r.lq.depth.at(x, y))) <= 2.0 * quant_m)
                    ++close;
            }
        REQUIRE(overlap > 1000);
        CHECK(double(close) / overlap >= 0.95);
    }
}

TEST_CASE("ground truth is sparse when the HQ sensor has fewer pixels") {
    using namespace testutil;
    const SceneSpec scene = test_scene(0.0);
    RigSpec rig = test_rig(0.0, small_extrinsic());
    rig.hq.intrinsics = {80.0, 80.0, 49.5, 37.5, 100, 75};  // below LQ resolution
    const RecordedPair rec = record_pair(scene, rig, 0.2, 3);
    const PairedDataset ds = build_paired_dataset(rec.lq, rec.hq, rec.alignment, 15.0);
    REQUIRE(!ds.records.empty());
    for (const PairedRecord& r : ds.records) {
        const double frac =
            double(r.gt_depth.valid_count()) / (r.gt_depth.width * r.gt_depth.height);
        CHECK(frac < 1.0);
        CHECK(frac < 0.5);  // at most the HQ pixel budget
    }
}

TEST_CASE("records carry their gaps and respect the threshold and LQ order") {
    using namespace testutil;
    const SceneSpec scene = test_scene();
    const RigSpec rig = test_rig(-12.0, small_extrinsic());
    const RecordedPair rec = record_pair(scene, rig, 1.0, 6);
    const double max_gap = 10.0;
    const PairedDataset ds = build_paired_dataset(rec.lq, rec.hq, rec.alignment, max_gap);

    CHECK(ds.records.size() <= rec.lq.frames.size());
    CHECK(ds.delta_ms == rec.alignment.shift.delta_ms);
    std::int64_t prev_ts = -1;
    for (const PairedRecord& r : ds.records) {
        CHECK(r.gap_ms <= max_gap);
        CHECK(r.lq.timestamp_us > prev_ts);
        prev_ts = r.lq.timestamp_us;
    }
}

TEST_CASE("one HQ frame may serve several LQ frames") {
    using namespace testutil;
    const SceneSpec scene = test_scene(0.0);
    RigSpec rig = test_rig(0.0, RigidTransform::identity());
    rig.lq.fps = 60.0;
    rig.hq.fps = 15.0;
    const RecordedPair rec = record_pair(scene, rig, 0.5, 8);
    const FrameMapping retained = rec.alignment.mapping.filtered(40.0);

    std::multiset<int> hq_uses;
    for (const FramePair& p : retained.pairs) hq_uses.insert(p.hq_index);
    bool any_duplicate = false;
    for (int idx : hq_uses)
        if (hq_uses.count(idx) > 1) any_duplicate = true;
    CHECK(any_duplicate);

    const PairedDataset ds = build_paired_dataset(rec.lq, rec.hq, rec.alignment, 40.0);
    CHECK(ds.records.size() == retained.pairs.size());
}

TEST_CASE("mapping indices outside the sequences are rejected") {
    using namespace testutil;
    const SceneSpec scene = test_scene(0.0);
    const RigSpec rig = test_rig(0.0, RigidTransform::identity());
    const RecordedPair rec = record_pair(scene, rig, 0.2, 1);
    AlignmentResult broken = rec.alignment;
    broken.mapping.pairs.push_back({0, 9999, 1.0});
    CHECK_THROWS_AS(build_paired_dataset(rec.lq, rec.hq, broken, 15.0), InvalidInputError);
}

TEST_SUITE_END();

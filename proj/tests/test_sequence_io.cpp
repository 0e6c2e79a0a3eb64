#include "dpair/image_io.hpp"
#include "dpair/rng.hpp"
#include "dpair/sequence_io.hpp"

#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>

using namespace dpair;
using nlohmann::json;

TEST_SUITE_BEGIN("sequence_io");

namespace {

Sequence small_sequence(int frames, SplitMix64& rng, bool with_masks = false) {
    Sequence s;
    s.id = "fixture";
    s.sensor = SensorLabel::lq;
    s.intrinsics = {20.0, 20.0, 7.5, 5.5, 16, 12};
    std::int64_t ts = 1000;
    for (int i = 0; i < frames; ++i) {
        Frame f;
        f.color = ColorImage(16, 12);
        for (auto& b : f.color.rgb) b = static_cast<std::uint8_t>(rng.next() & 0xff);
        f.depth = DepthImage(16, 12);
        for (float& v : f.depth.values)
            if (rng.uniform() > 0.2)
                v = static_cast<float>(rng.next() % 8000) / 1000.0f;  // mm-quantized
        f.timestamp_us = ts;
        ts += 33000 + static_cast<std::int64_t>(rng.next() % 1000);
        if (with_masks && i % 2 == 0) {
            MaskImage m(16, 12);
            for (auto& b : m.bits) b = rng.uniform() < 0.5 ? 1 : 0;
            f.seg_mask = std::move(m);
        }
        s.frames.push_back(std::move(f));
    }
    return s;
}

json read_manifest(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    json j;
    in >> j;
    return j;
}

void write_manifest(const std::filesystem::path& dir, const json& j) {
    std::ofstream out(dir / "manifest.json");
    out << j.dump(2);
}

}  // namespace

TEST_CASE("sequence save and load round-trips bit-exactly") {
    testutil::TempDir tmp("seq_roundtrip");
    SplitMix64 rng(1);
    const Sequence s = small_sequence(3, rng, true);
    save_sequence(s, tmp.path / "seq");
    const Sequence back = load_sequence(tmp.path / "seq");

    CHECK(back.id == s.id);
    CHECK(back.sensor == s.sensor);
    CHECK(back.intrinsics.fx == s.intrinsics.fx);
    REQUIRE(back.frames.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(back.frames[i].timestamp_us == s.frames[i].timestamp_us);
        CHECK(back.frames[i].depth.values == s.frames[i].depth.values);
        CHECK(back.frames[i].color.rgb == s.frames[i].color.rgb);
        CHECK(back.frames[i].seg_mask.has_value() == s.frames[i].seg_mask.has_value());
        if (back.frames[i].seg_mask) CHECK(back.frames[i].seg_mask->bits == s.frames[i].seg_mask->bits);
    }
    for (size_t i = 1; i < back.frames.size(); ++i)
        CHECK(back.frames[i].timestamp_us > back.frames[i - 1].timestamp_us);
}

TEST_CASE("depth files are millimeters on disk") {
    testutil::TempDir tmp("depth_mm");
    DepthImage d(4, 2);
    d.at(0, 0) = 1.234f;
    d.at(3, 1) = 0.001f;
    write_depth_png(tmp.path / "d.png", d);
    const DepthImage back = read_depth_png(tmp.path / "d.png");
    CHECK(back.at(0, 0) == 1234.0f / 1000.0f);
    CHECK(back.at(3, 1) == 1.0f / 1000.0f);
    CHECK(back.at(1, 0) == 0.0f);
}

TEST_CASE("missing manifest is a load error naming the path") {
    testutil::TempDir tmp("no_manifest");
    try {
        load_sequence(tmp.path / "nothing");
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(std::string(e.what()).find("manifest") != std::string::npos);
        CHECK(std::string(e.what()).find("nothing") != std::string::npos);
    }
}

TEST_CASE("non-monotone timestamps are rejected on load") {
    testutil::TempDir tmp("bad_ts");
    SplitMix64 rng(2);
    save_sequence(small_sequence(3, rng), tmp.path / "seq");
    json j = read_manifest(tmp.path / "seq");
    j["frames"][2]["timestamp_us"] = j["frames"][0]["timestamp_us"];
    write_manifest(tmp.path / "seq", j);
    try {
        load_sequence(tmp.path / "seq");
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(std::string(e.what()).find("strictly increasing") != std::string::npos);
    }
}

TEST_CASE("declared intrinsics must match the image files") {
    // Manifest declares 512x424 but the files are 480x640.
    testutil::TempDir tmp("dim_mismatch");
    const auto dir = tmp.path / "seq";
    std::filesystem::create_directories(dir / "color");
    std::filesystem::create_directories(dir / "depth");
    write_color_png(dir / "color" / "000000.png", ColorImage(480, 640));
    DepthImage d(480, 640);
    d.at(0, 0) = 1.0f;
    write_depth_png(dir / "depth" / "000000.png", d);
    const json manifest = {
        {"sensor", "HQ"},
        {"intrinsics",
         {{"fx", 360.0}, {"fy", 360.0}, {"cx", 255.5}, {"cy", 211.5}, {"width", 512}, {"height", 424}}},
        {"frames", json::array({{{"color", "color/000000.png"},
                                 {"depth", "depth/000000.png"},
                                 {"timestamp_us", 0}}})}};
    write_manifest(dir, manifest);
    try {
        load_sequence(dir);
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("480x640") != std::string::npos);
        CHECK(msg.find("512x424") != std::string::npos);
    }
}

TEST_CASE("unreadable image files are load errors naming the file") {
    testutil::TempDir tmp("bad_png");
    SplitMix64 rng(3);
    save_sequence(small_sequence(2, rng), tmp.path / "seq");
    std::ofstream(tmp.path / "seq" / "depth" / "000001.png") << "not a png";
    try {
        load_sequence(tmp.path / "seq");
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(std::string(e.what()).find("000001.png") != std::string::npos);
    }
}

TEST_CASE("paired dataset round-trips bit-exactly") {
    testutil::TempDir tmp("paired_roundtrip");
    SplitMix64 rng(4);
    PairedDataset ds;
    ds.intrinsics = {20.0, 20.0, 7.5, 5.5, 16, 12};
    ds.delta_ms = -32.5;
    ds.hq_to_lq = RigidTransform::from_axis_angle(Vec3(0, 1, 0), 0.05, Vec3(0.08, 0.0, 0.01));
    const Sequence donor = small_sequence(2, rng, true);
    for (int i = 0; i < 2; ++i) {
        PairedRecord r;
        r.lq = donor.frames[i];
        r.gt_depth = donor.frames[1 - i].depth;
        r.gt_color = donor.frames[1 - i].color;
        r.gap_ms = 3.25 * (i + 1);
        ds.records.push_back(std::move(r));
    }
    save_paired_dataset(ds, tmp.path / "paired");
    const PairedDataset back = load_paired_dataset(tmp.path / "paired");

    CHECK(back.delta_ms == ds.delta_ms);
    CHECK((back.hq_to_lq.rotation.coeffs() - ds.hq_to_lq.rotation.coeffs()).norm() < 1e-12);
    REQUIRE(back.records.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
        CHECK(back.records[i].lq.depth.values == ds.records[i].lq.depth.values);
        CHECK(back.records[i].lq.color.rgb == ds.records[i].lq.color.rgb);
        CHECK(back.records[i].gt_depth.values == ds.records[i].gt_depth.values);
        CHECK(back.records[i].gt_color.rgb == ds.records[i].gt_color.rgb);
        CHECK(back.records[i].gap_ms == ds.records[i].gap_ms);
        CHECK(back.records[i].lq.timestamp_us == ds.records[i].lq.timestamp_us);
    }
}

TEST_CASE("empty paired dataset writes a bare manifest") {
    testutil::TempDir tmp("paired_empty");
    PairedDataset ds;
    ds.intrinsics = {20.0, 20.0, 7.5, 5.5, 16, 12};
    save_paired_dataset(ds, tmp.path / "paired");
    CHECK(std::filesystem::exists(tmp.path / "paired" / "manifest.json"));
    CHECK(!std::filesystem::exists(tmp.path / "paired" / "lq_depth"));
    const PairedDataset back = load_paired_dataset(tmp.path / "paired");
    CHECK(back.records.empty());
}

TEST_CASE("a 12 ms record passes a 15 ms threshold and fails a 5 ms one") {
    SplitMix64 rng(5);
    PairedDataset ds;
    ds.intrinsics = {20.0, 20.0, 7.5, 5.5, 16, 12};
    PairedRecord r;
    r.lq = small_sequence(1, rng).frames[0];
    r.gt_depth = DepthImage(16, 12);
    r.gt_color = ColorImage(16, 12);
    r.gap_ms = 12.0;
    ds.records.push_back(std::move(r));
    CHECK_NOTHROW(ds.validate(15.0));
    CHECK_THROWS_AS(ds.validate(5.0), InvalidInputError);
}

TEST_SUITE_END();

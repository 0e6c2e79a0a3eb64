#include "dpair/sequence_io.hpp"

#include "dpair/image_io.hpp"
#include "dpair/json_conv.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace dpair {

using nlohmann::json;

std::string to_string(SensorLabel label) { return label == SensorLabel::lq ? "LQ" : "HQ"; }

SensorLabel sensor_label_from_string(const std::string& s) {
    if (s == "LQ") return SensorLabel::lq;
    if (s == "HQ") return SensorLabel::hq;
    throw LoadError("unknown sensor label '" + s + "' (expected LQ or HQ)");
}

void Sequence::validate() const {
    intrinsics.validate();
    if (frames.empty()) throw InvalidInputError("sequence '" + id + "' has no frames");
    std::int64_t prev_ts = -1;
    for (size_t i = 0; i < frames.size(); ++i) {
        const Frame& f = frames[i];
        const std::string where = "sequence '" + id + "' frame " + std::to_string(i);
        if (f.timestamp_us < 0) throw InvalidInputError(where + ": negative timestamp");
        if (f.timestamp_us <= prev_ts)
            throw InvalidInputError(where + ": timestamps not strictly increasing (" +
                                    std::to_string(f.timestamp_us) + " after " + std::to_string(prev_ts) + ")");
        prev_ts = f.timestamp_us;
        if (f.depth.width != intrinsics.width || f.depth.height != intrinsics.height)
            throw InvalidInputError(where + ": depth is " + std::to_string(f.depth.width) + "x" +
                                    std::to_string(f.depth.height) + ", intrinsics declare " +
                                    std::to_string(intrinsics.width) + "x" + std::to_string(intrinsics.height));
        if (f.color.width != intrinsics.width || f.color.height != intrinsics.height)
            throw InvalidInputError(where + ": color dimensions do not match intrinsics");
        if (f.seg_mask && (f.seg_mask->width != intrinsics.width || f.seg_mask->height != intrinsics.height))
            throw InvalidInputError(where + ": mask dimensions do not match intrinsics");
        f.depth.validate();
    }
}

void PairedDataset::validate(double max_gap_ms) const {
    intrinsics.validate();
    for (size_t i = 0; i < records.size(); ++i) {
        const PairedRecord& r = records[i];
        const std::string where = "paired record " + std::to_string(i);
        if (r.lq.depth.width != intrinsics.width || r.lq.depth.height != intrinsics.height ||
            r.gt_depth.width != intrinsics.width || r.gt_depth.height != intrinsics.height ||
            r.gt_color.width != intrinsics.width || r.gt_color.height != intrinsics.height)
            throw InvalidInputError(where + ": images do not share the LQ dimensions");
        if (r.gap_ms > max_gap_ms)
            throw InvalidInputError(where + ": gap " + std::to_string(r.gap_ms) + " ms exceeds threshold " +
                                    std::to_string(max_gap_ms) + " ms");
    }
}

namespace {

std::string frame_name(size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06zu.png", i);
    return buf;
}

json load_manifest(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.json";
    std::ifstream in(path);
    if (!in) throw LoadError("missing manifest: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw LoadError("unparsable manifest " + path.string() + ": " + e.what());
    }
    return j;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw WriteError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw WriteError("failed writing " + path.string());
}

}  // namespace

Sequence load_sequence(const std::filesystem::path& dir) {
    const json j = load_manifest(dir);
    Sequence seq;
    try {
        seq.sensor = sensor_label_from_string(j.at("sensor").get<std::string>());
        seq.intrinsics = intrinsics_from_json(j.at("intrinsics"));
        seq.id = j.value("id", dir.filename().string());
    } catch (const json::exception& e) {
        throw LoadError(dir.string() + "/manifest.json: " + e.what());
    }

    if (!j.contains("frames") || !j.at("frames").is_array())
        throw LoadError(dir.string() + "/manifest.json: missing frames array");
    for (const json& fj : j.at("frames")) {
        Frame f;
        std::filesystem::path color_rel, depth_rel;
        try {
            color_rel = fj.at("color").get<std::string>();
            depth_rel = fj.at("depth").get<std::string>();
            f.timestamp_us = fj.at("timestamp_us").get<std::int64_t>();
        } catch (const json::exception& e) {
            throw LoadError(dir.string() + "/manifest.json frame entry: " + e.what());
        }
        f.color = read_color_png(dir / color_rel);
        f.depth = read_depth_png(dir / depth_rel);
        if (fj.contains("mask")) f.seg_mask = read_mask_png(dir / fj.at("mask").get<std::string>());
        seq.frames.push_back(std::move(f));
    }

    try {
        seq.validate();
    } catch (const InvalidInputError& e) {
        throw LoadError(dir.string() + ": " + e.what());
    }
    return seq;
}

void save_sequence(const Sequence& seq, const std::filesystem::path& dir) {
    seq.validate();
    std::filesystem::create_directories(dir / "color");
    std::filesystem::create_directories(dir / "depth");
    const bool any_mask =
        std::any_of(seq.frames.begin(), seq.frames.end(), [](const Frame& f) { return f.seg_mask.has_value(); });
    if (any_mask) std::filesystem::create_directories(dir / "mask");

    json frames = json::array();
    for (size_t i = 0; i < seq.frames.size(); ++i) {
        const Frame& f = seq.frames[i];
        const std::string name = frame_name(i);
        write_color_png(dir / "color" / name, f.color);
        write_depth_png(dir / "depth" / name, f.depth);
        json fj = {{"color", "color/" + name}, {"depth", "depth/" + name}, {"timestamp_us", f.timestamp_us}};
        if (f.seg_mask) {
            write_mask_png(dir / "mask" / name, *f.seg_mask);
            fj["mask"] = "mask/" + name;
        }
        frames.push_back(std::move(fj));
    }

    json manifest = {{"sensor", to_string(seq.sensor)},
                     {"id", seq.id},
                     {"intrinsics", intrinsics_to_json(seq.intrinsics)},
                     {"frames", std::move(frames)}};
    write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

void save_paired_dataset(const PairedDataset& dataset, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const char* subdirs[] = {"lq_color", "lq_depth", "gt_depth", "gt_color"};
    if (!dataset.records.empty())
        for (const char* s : subdirs) std::filesystem::create_directories(dir / s);
    const bool any_mask = std::any_of(dataset.records.begin(), dataset.records.end(),
                                      [](const PairedRecord& r) { return r.lq.seg_mask.has_value(); });
    if (any_mask) std::filesystem::create_directories(dir / "lq_mask");

    json records = json::array();
    for (size_t i = 0; i < dataset.records.size(); ++i) {
        const PairedRecord& r = dataset.records[i];
        const std::string name = frame_name(i);
        write_color_png(dir / "lq_color" / name, r.lq.color);
        write_depth_png(dir / "lq_depth" / name, r.lq.depth);
        write_depth_png(dir / "gt_depth" / name, r.gt_depth);
        write_color_png(dir / "gt_color" / name, r.gt_color);
        json rj = {{"lq_color", "lq_color/" + name},
                   {"lq_depth", "lq_depth/" + name},
                   {"gt_depth", "gt_depth/" + name},
                   {"gt_color", "gt_color/" + name},
                   {"lq_timestamp_us", r.lq.timestamp_us},
                   {"gap_ms", r.gap_ms}};
        if (r.lq.seg_mask) {
            write_mask_png(dir / "lq_mask" / name, *r.lq.seg_mask);
            rj["lq_mask"] = "lq_mask/" + name;
        }
        records.push_back(std::move(rj));
    }

    json manifest = {{"delta_ms", dataset.delta_ms},
                     {"transform", transform_to_json(dataset.hq_to_lq)},
                     {"intrinsics", intrinsics_to_json(dataset.intrinsics)},
                     {"records", std::move(records)}};
    write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

PairedDataset load_paired_dataset(const std::filesystem::path& dir) {
    const json j = load_manifest(dir);
    PairedDataset d;
    try {
        d.delta_ms = j.at("delta_ms").get<double>();
        d.hq_to_lq = transform_from_json(j.at("transform"));
        d.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    } catch (const json::exception& e) {
        throw LoadError(dir.string() + "/manifest.json: " + e.what());
    }
    if (!j.contains("records") || !j.at("records").is_array())
        throw LoadError(dir.string() + "/manifest.json: missing records array");

    for (const json& rj : j.at("records")) {
        PairedRecord r;
        try {
            r.lq.color = read_color_png(dir / rj.at("lq_color").get<std::string>());
            r.lq.depth = read_depth_png(dir / rj.at("lq_depth").get<std::string>());
            r.gt_depth = read_depth_png(dir / rj.at("gt_depth").get<std::string>());
            r.gt_color = read_color_png(dir / rj.at("gt_color").get<std::string>());
            r.lq.timestamp_us = rj.at("lq_timestamp_us").get<std::int64_t>();
            r.gap_ms = rj.at("gap_ms").get<double>();
            if (rj.contains("lq_mask")) r.lq.seg_mask = read_mask_png(dir / rj.at("lq_mask").get<std::string>());
        } catch (const json::exception& e) {
            throw LoadError(dir.string() + "/manifest.json record entry: " + e.what());
        }
        d.records.push_back(std::move(r));
    }
    return d;
}

}  // namespace dpair

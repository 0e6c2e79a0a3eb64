#include "dpair/simulator.hpp"

#include "dpair/geometry.hpp"
#include "dpair/json_conv.hpp"
#include "dpair/parallel.hpp"
#include "dpair/rng.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace dpair {

using nlohmann::json;

void SceneSpec::validate() const {
    if (anchors.size() < 8)
        throw InvalidInputError("scene needs at least 8 anchor points, got " + std::to_string(anchors.size()));
    if (primitives.empty()) throw InvalidInputError("scene has no primitives");
    for (const Primitive& p : primitives) {
        const double extent = p.pose.translation.norm() + p.size.cwiseAbs().maxCoeff();
        if (extent >= max_range_m)
            throw InvalidInputError("primitive extends beyond the configured range");
        if (p.kind == PrimitiveKind::sphere && !(p.size.x() > 0.0))
            throw InvalidInputError("sphere radius must be positive");
    }
    for (const AnchorPoint& a : anchors)
        if (a.position.norm() >= max_range_m) throw InvalidInputError("anchor beyond the configured range");
}

RigidTransform SceneSpec::group_motion(int group, double t_s) const {
    if (group == 0) return RigidTransform::identity();
    for (const Spin& s : spins) {
        if (s.group != group) continue;
        const double angle = s.deg_per_s * t_s * M_PI / 180.0;
        RigidTransform rot = RigidTransform::from_axis_angle(s.axis, angle);
        rot.translation = s.pivot - rot.rotation * s.pivot;
        return rot;
    }
    return RigidTransform::identity();
}

Vec3 SceneSpec::anchor_position(size_t index, double t_s) const {
    const AnchorPoint& a = anchors.at(index);
    return group_motion(a.group, t_s).apply(a.position);
}

void RigSpec::validate() const {
    lq.intrinsics.validate();
    hq.intrinsics.validate();
    for (const SensorSpec* s : {&lq, &hq}) {
        if (!(s->fps > 0.0)) throw InvalidInputError("sensor fps must be positive");
        if (s->jitter_ms < 0.0 || s->noise_sigma_mm < 0.0 || s->noise_quad_mm_per_m2 < 0.0 ||
            s->quant_step_mm < 0.0)
            throw InvalidInputError("sensor noise parameters must be non-negative");
        if (s->dropout_prob < 0.0 || s->dropout_prob > 1.0)
            throw InvalidInputError("dropout probability must lie in [0, 1]");
    }
}

namespace {

constexpr double kRayEps = 1e-9;

struct LocalFrame {
    Mat3 rot_inv;
    Vec3 origin;  // world->local applied to the ray origin
    const Primitive* prim = nullptr;
};

// Smallest positive ray parameter for o + s*d against the primitive in its
// local frame; negative result = miss. The ray direction is unnormalized
// with camera-z = 1, so s equals camera-space depth.
double intersect_local(const Primitive& p, const Vec3& o, const Vec3& d, Vec3* hit_local) {
    switch (p.kind) {
        case PrimitiveKind::plane: {
            if (std::abs(d.z()) < 1e-15) return -1.0;
            const double s = -o.z() / d.z();
            if (s <= kRayEps) return -1.0;
            const Vec3 h = o + s * d;
            if (std::abs(h.x()) > p.size.x() || std::abs(h.y()) > p.size.y()) return -1.0;
            *hit_local = h;
            return s;
        }
        case PrimitiveKind::sphere: {
            const double r = p.size.x();
            const double a = d.squaredNorm();
            const double b = 2.0 * o.dot(d);
            const double c = o.squaredNorm() - r * r;
            const double disc = b * b - 4.0 * a * c;
            if (disc < 0.0) return -1.0;
            const double sq = std::sqrt(disc);
            double s = (-b - sq) / (2.0 * a);
            if (s <= kRayEps) s = (-b + sq) / (2.0 * a);
            if (s <= kRayEps) return -1.0;
            *hit_local = o + s * d;
            return s;
        }
        case PrimitiveKind::box: {
            double tmin = -std::numeric_limits<double>::infinity();
            double tmax = std::numeric_limits<double>::infinity();
            for (int ax = 0; ax < 3; ++ax) {
                const double h = p.size(ax);
                if (std::abs(d(ax)) < 1e-15) {
                    if (std::abs(o(ax)) > h) return -1.0;
                    continue;
                }
                double t1 = (-h - o(ax)) / d(ax);
                double t2 = (h - o(ax)) / d(ax);
                if (t1 > t2) std::swap(t1, t2);
                tmin = std::max(tmin, t1);
                tmax = std::min(tmax, t2);
            }
            if (tmax < tmin || tmin <= kRayEps) return -1.0;
            *hit_local = o + tmin * d;
            return tmin;
        }
    }
    return -1.0;
}

std::array<std::uint8_t, 3> shade(const Primitive& p, const Vec3& hit_local) {
    if (p.checker_m <= 0.0) return p.albedo;
    const long cells = static_cast<long>(std::floor(hit_local.x() / p.checker_m)) +
                       static_cast<long>(std::floor(hit_local.y() / p.checker_m)) +
                       static_cast<long>(std::floor(hit_local.z() / p.checker_m));
    return (cells & 1) == 0 ? p.albedo : p.albedo2;
}

}  // namespace

Frame render_frame(const SceneSpec& scene, const CameraIntrinsics& k, const RigidTransform& cam_to_world,
                   double t_s) {
    k.validate();
    Frame frame;
    frame.depth = DepthImage(k.width, k.height);
    frame.color = ColorImage(k.width, k.height);

    std::vector<LocalFrame> locals(scene.primitives.size());
    for (size_t i = 0; i < scene.primitives.size(); ++i) {
        const Primitive& p = scene.primitives[i];
        const RigidTransform world_to_local = (scene.group_motion(p.group, t_s) * p.pose).inverse();
        locals[i].rot_inv = world_to_local.rotation_matrix();
        locals[i].origin = world_to_local.apply(cam_to_world.translation);
        locals[i].prim = &p;
    }
    const Mat3 cam_rot = cam_to_world.rotation_matrix();

    for (int y = 0; y < k.height; ++y) {
        for (int x = 0; x < k.width; ++x) {
            const Vec3 d_cam((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
            const Vec3 d_world = cam_rot * d_cam;

            double best = std::numeric_limits<double>::infinity();
            const Primitive* best_prim = nullptr;
            Vec3 best_local = Vec3::Zero();
            for (const LocalFrame& lf : locals) {
                Vec3 hit;
                const double s = intersect_local(*lf.prim, lf.origin, lf.rot_inv * d_world, &hit);
                if (s > 0.0 && s < best) {
                    best = s;
                    best_prim = lf.prim;
                    best_local = hit;
                }
            }
            if (best_prim && best < scene.max_range_m) {
                frame.depth.at(x, y) = static_cast<float>(best);
                const auto c = shade(*best_prim, best_local);
                frame.color.set(x, y, c[0], c[1], c[2]);
            } else {
                frame.color.set(x, y, scene.background[0], scene.background[1], scene.background[2]);
            }
        }
    }
    return frame;
}

namespace {

// True capture times in milliseconds from the recording epoch. Starts with
// a random phase so the two sensors never begin in lockstep.
std::vector<double> timestamp_train(const SensorSpec& sensor, double duration_s, std::uint64_t seed) {
    SplitMix64 rng(seed);
    const double period = 1000.0 / sensor.fps;
    const double start = 100.0 + rng.uniform(0.0, period);
    std::vector<double> times;
    double t = start;
    while (t < start + duration_s * 1000.0) {
        times.push_back(t);
        double dt = period + (sensor.jitter_ms > 0.0 ? rng.normal() * sensor.jitter_ms : 0.0);
        dt = std::max(dt, std::max(0.05 * period, 0.002));
        t += dt;
    }
    return times;
}

void apply_sensor_noise(DepthImage& depth, const SensorSpec& sensor, double max_range_m,
                        std::uint64_t seed) {
    SplitMix64 rng(seed);
    for (float& v : depth.values) {
        if (!(v > 0.0f)) continue;
        double z = v;
        if (sensor.noise_sigma_mm > 0.0 || sensor.noise_quad_mm_per_m2 > 0.0) {
            const double sigma_m = (sensor.noise_sigma_mm + sensor.noise_quad_mm_per_m2 * z * z) / 1000.0;
            z += rng.normal() * sigma_m;
        }
        if (sensor.dropout_prob > 0.0 && rng.uniform() < sensor.dropout_prob) {
            v = 0.0f;
            continue;
        }
        if (sensor.quant_step_mm > 0.0)
            z = static_cast<double>(std::llround(z * 1000.0 / sensor.quant_step_mm)) *
                sensor.quant_step_mm / 1000.0;
        v = (z > 0.0 && z < max_range_m) ? static_cast<float>(z) : 0.0f;
    }
}

}  // namespace

RecordedPair record_pair(const SceneSpec& scene, const RigSpec& rig, double duration_s, std::uint64_t seed) {
    if (!(duration_s > 0.0)) throw InvalidInputError("recording duration must be positive");
    scene.validate();
    rig.validate();

    const std::vector<double> lq_ms = timestamp_train(rig.lq, duration_s, derive_seed(seed, 1));
    const std::vector<double> hq_ms = timestamp_train(rig.hq, duration_s, derive_seed(seed, 2));

    RecordedPair rec;
    rec.truth.delta_ms = rig.delta_ms;
    rec.truth.hq_to_lq = rig.hq_to_lq;
    rec.truth.scene = scene;

    const std::int64_t delta_us = std::llround(rig.delta_ms * 1000.0);

    rec.lq.id = "lq";
    rec.lq.sensor = SensorLabel::lq;
    rec.lq.intrinsics = rig.lq.intrinsics;
    rec.lq.frames.resize(lq_ms.size());
    rec.truth.lq_true_time_us.resize(lq_ms.size());

    rec.hq.id = "hq";
    rec.hq.sensor = SensorLabel::hq;
    rec.hq.intrinsics = rig.hq.intrinsics;
    rec.hq.frames.resize(hq_ms.size());
    rec.truth.hq_true_time_us.resize(hq_ms.size());

    // True times round to integer microseconds first so rendering, clocks,
    // and the truth block agree exactly.
    std::int64_t prev = -1;
    for (size_t i = 0; i < lq_ms.size(); ++i) {
        std::int64_t us = std::llround(lq_ms[i] * 1000.0);
        if (us <= prev) us = prev + 1;
        rec.truth.lq_true_time_us[i] = us;
        prev = us;
    }
    prev = -1;
    for (size_t i = 0; i < hq_ms.size(); ++i) {
        std::int64_t us = std::llround(hq_ms[i] * 1000.0);
        if (us <= prev) us = prev + 1;
        rec.truth.hq_true_time_us[i] = us;
        prev = us;
    }

    const RigidTransform lq_pose = RigidTransform::identity();
    const RigidTransform hq_pose = rig.hq_to_lq;  // HQ camera posed in the LQ/world frame

    parallel_for(0, static_cast<std::int64_t>(lq_ms.size()), [&](std::int64_t i) {
        const std::int64_t us = rec.truth.lq_true_time_us[i];
        Frame f = render_frame(scene, rig.lq.intrinsics, lq_pose, us / 1e6);
        apply_sensor_noise(f.depth, rig.lq, scene.max_range_m, derive_seed(seed, (1ull << 32) + i));
        f.timestamp_us = us;  // the LQ clock is the reference clock
        rec.lq.frames[i] = std::move(f);
    });
    parallel_for(0, static_cast<std::int64_t>(hq_ms.size()), [&](std::int64_t i) {
        const std::int64_t us = rec.truth.hq_true_time_us[i];
        Frame f = render_frame(scene, rig.hq.intrinsics, hq_pose, us / 1e6);
        apply_sensor_noise(f.depth, rig.hq, scene.max_range_m, derive_seed(seed, (2ull << 32) + i));
        f.timestamp_us = us - delta_us;  // t_lq = t_hq + delta
        rec.hq.frames[i] = std::move(f);
    });

    rec.lq.validate();
    rec.hq.validate();

    rec.alignment.shift.delta_ms = rig.delta_ms;
    rec.alignment.hq_to_lq = rig.hq_to_lq;
    rec.alignment.mapping = match_frames(rec.lq, rec.hq, {rig.delta_ms});
    rec.alignment.residual_px = 0.0;
    return rec;
}

OracleCorrespondenceProvider::OracleCorrespondenceProvider(SceneSpec scene, RigidTransform true_hq_to_lq,
                                                           CameraIntrinsics k_lq, CameraIntrinsics k_hq,
                                                           std::vector<std::int64_t> lq_true_time_us,
                                                           std::vector<std::int64_t> hq_true_time_us,
                                                           OracleProviderOptions options)
    : scene_(std::move(scene)),
      lq_from_world_(RigidTransform::identity()),
      hq_from_world_(true_hq_to_lq.inverse()),
      k_lq_(k_lq),
      k_hq_(k_hq),
      lq_true_time_us_(std::move(lq_true_time_us)),
      hq_true_time_us_(std::move(hq_true_time_us)),
      options_(options) {}

OracleCorrespondenceProvider::OracleCorrespondenceProvider(const SimTruth& truth,
                                                           const CameraIntrinsics& k_lq,
                                                           const CameraIntrinsics& k_hq,
                                                           OracleProviderOptions options)
    : OracleCorrespondenceProvider(truth.scene, truth.hq_to_lq, k_lq, k_hq, truth.lq_true_time_us,
                                   truth.hq_true_time_us, options) {}

CorrespondenceSet OracleCorrespondenceProvider::extract(const FramePairView& view) const {
    CorrespondenceSet out;
    out.pair_index = view.pair_index;
    if (view.lq_index < 0 || view.lq_index >= static_cast<int>(lq_true_time_us_.size()) ||
        view.hq_index < 0 || view.hq_index >= static_cast<int>(hq_true_time_us_.size()))
        throw InvalidInputError("oracle provider: frame index outside the recorded truth");

    const double t_l = lq_true_time_us_[view.lq_index] / 1e6;
    const double t_h = hq_true_time_us_[view.hq_index] / 1e6;

    for (size_t a = 0; a < scene_.anchors.size(); ++a) {
        const Vec3 p_lq_cam = lq_from_world_.apply(scene_.anchor_position(a, t_l));
        const Vec3 p_hq_cam = hq_from_world_.apply(scene_.anchor_position(a, t_h));
        if (p_lq_cam.z() < options_.min_depth_m || p_hq_cam.z() < options_.min_depth_m) continue;
        const PixelDepth pl = project(p_lq_cam, k_lq_);
        const PixelDepth ph = project(p_hq_cam, k_hq_);
        if (!k_lq_.contains(pl.pixel) || !k_hq_.contains(ph.pixel)) continue;

        double depth = ph.depth;
        if (!options_.exact_depth) {
            if (!view.hq_frame) throw InvalidInputError("oracle provider: sampled depth needs the HQ frame");
            const int px = round_pixel(ph.pixel.x());
            const int py = round_pixel(ph.pixel.y());
            if (!view.hq_frame->depth.in_bounds(px, py)) continue;
            const float sampled = view.hq_frame->depth.at(px, py);
            if (!(sampled > 0.0f)) continue;
            depth = sampled;
        }
        out.matches.push_back({pl.pixel, ph.pixel, depth});
    }
    return out;
}

// ---- JSON ----

namespace {

json color_to_json(const std::array<std::uint8_t, 3>& c) { return json::array({c[0], c[1], c[2]}); }

std::array<std::uint8_t, 3> color_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw LoadError("expected [r,g,b]");
    return {j[0].get<std::uint8_t>(), j[1].get<std::uint8_t>(), j[2].get<std::uint8_t>()};
}

json pose_to_json(const RigidTransform& t) {
    return {{"quat", json::array({t.rotation.w(), t.rotation.x(), t.rotation.y(), t.rotation.z()})},
            {"trans", vec3_to_json(t.translation)}};
}

RigidTransform pose_from_json(const json& j) {
    RigidTransform t;
    if (j.contains("quat")) {
        const json& q = j.at("quat");
        t.rotation = Quat(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                          q.at(3).get<double>());
    }
    if (j.contains("trans")) t.translation = vec3_from_json(j.at("trans"));
    return t.normalized();
}

const char* kind_name(PrimitiveKind k) {
    switch (k) {
        case PrimitiveKind::plane: return "plane";
        case PrimitiveKind::sphere: return "sphere";
        case PrimitiveKind::box: return "box";
    }
    return "plane";
}

PrimitiveKind kind_from_name(const std::string& s) {
    if (s == "plane") return PrimitiveKind::plane;
    if (s == "sphere") return PrimitiveKind::sphere;
    if (s == "box") return PrimitiveKind::box;
    throw LoadError("unknown primitive kind '" + s + "'");
}

json sensor_to_json(const SensorSpec& s) {
    return {{"intrinsics", intrinsics_to_json(s.intrinsics)},
            {"fps", s.fps},
            {"jitter_ms", s.jitter_ms},
            {"noise_sigma_mm", s.noise_sigma_mm},
            {"noise_quad_mm_per_m2", s.noise_quad_mm_per_m2},
            {"dropout_prob", s.dropout_prob},
            {"quant_step_mm", s.quant_step_mm}};
}

SensorSpec sensor_from_json(const json& j) {
    SensorSpec s;
    s.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    s.fps = j.value("fps", 30.0);
    s.jitter_ms = j.value("jitter_ms", 0.0);
    s.noise_sigma_mm = j.value("noise_sigma_mm", 0.0);
    s.noise_quad_mm_per_m2 = j.value("noise_quad_mm_per_m2", 0.0);
    s.dropout_prob = j.value("dropout_prob", 0.0);
    s.quant_step_mm = j.value("quant_step_mm", 1.0);
    return s;
}

json load_json_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw LoadError("cannot open " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw LoadError("unparsable JSON in " + file.string() + ": " + e.what());
    }
    return j;
}

}  // namespace

json scene_to_json(const SceneSpec& scene) {
    json prims = json::array();
    for (const Primitive& p : scene.primitives) {
        json pj = {{"kind", kind_name(p.kind)},
                   {"pose", pose_to_json(p.pose)},
                   {"size", vec3_to_json(p.size)},
                   {"albedo", color_to_json(p.albedo)},
                   {"group", p.group}};
        if (p.checker_m > 0.0) {
            pj["checker_m"] = p.checker_m;
            pj["albedo2"] = color_to_json(p.albedo2);
        }
        prims.push_back(std::move(pj));
    }
    json anchors = json::array();
    for (const AnchorPoint& a : scene.anchors)
        anchors.push_back({{"pos", vec3_to_json(a.position)}, {"group", a.group}});
    json spins = json::array();
    for (const Spin& s : scene.spins)
        spins.push_back({{"group", s.group},
                         {"axis", vec3_to_json(s.axis)},
                         {"pivot", vec3_to_json(s.pivot)},
                         {"deg_per_s", s.deg_per_s}});
    return {{"primitives", std::move(prims)},
            {"anchors", std::move(anchors)},
            {"spins", std::move(spins)},
            {"background", color_to_json(scene.background)},
            {"max_range_m", scene.max_range_m}};
}

SceneSpec scene_from_json(const json& j) {
    SceneSpec scene;
    for (const json& pj : j.value("primitives", json::array())) {
        Primitive p;
        p.kind = kind_from_name(pj.at("kind").get<std::string>());
        if (pj.contains("pose")) p.pose = pose_from_json(pj.at("pose"));
        if (pj.contains("size")) p.size = vec3_from_json(pj.at("size"));
        if (pj.contains("albedo")) p.albedo = color_from_json(pj.at("albedo"));
        p.checker_m = pj.value("checker_m", 0.0);
        if (pj.contains("albedo2")) p.albedo2 = color_from_json(pj.at("albedo2"));
        p.group = pj.value("group", 0);
        scene.primitives.push_back(p);
    }
    for (const json& aj : j.value("anchors", json::array())) {
        AnchorPoint a;
        a.position = vec3_from_json(aj.at("pos"));
        a.group = aj.value("group", 0);
        scene.anchors.push_back(a);
    }
    for (const json& sj : j.value("spins", json::array())) {
        Spin s;
        s.group = sj.value("group", 1);
        if (sj.contains("axis")) s.axis = vec3_from_json(sj.at("axis"));
        if (sj.contains("pivot")) s.pivot = vec3_from_json(sj.at("pivot"));
        s.deg_per_s = sj.value("deg_per_s", 0.0);
        scene.spins.push_back(s);
    }
    if (j.contains("background")) scene.background = color_from_json(j.at("background"));
    scene.max_range_m = j.value("max_range_m", 10.0);
    scene.validate();
    return scene;
}

SceneSpec load_scene_spec(const std::filesystem::path& file) { return scene_from_json(load_json_file(file)); }

json rig_to_json(const RigSpec& rig) {
    return {{"lq", sensor_to_json(rig.lq)},
            {"hq", sensor_to_json(rig.hq)},
            {"hq_to_lq", pose_to_json(rig.hq_to_lq)},
            {"delta_ms", rig.delta_ms}};
}

RigSpec rig_from_json(const json& j) {
    RigSpec rig;
    rig.lq = sensor_from_json(j.at("lq"));
    rig.hq = sensor_from_json(j.at("hq"));
    rig.hq_to_lq = pose_from_json(j.at("hq_to_lq"));
    rig.delta_ms = j.value("delta_ms", 0.0);
    rig.validate();
    return rig;
}

RigSpec load_rig_spec(const std::filesystem::path& file) { return rig_from_json(load_json_file(file)); }

json truth_to_json(const SimTruth& truth) {
    return {{"delta_ms", truth.delta_ms},
            {"hq_to_lq", pose_to_json(truth.hq_to_lq)},
            {"lq_true_time_us", truth.lq_true_time_us},
            {"hq_true_time_us", truth.hq_true_time_us},
            {"scene", scene_to_json(truth.scene)}};
}

SimTruth truth_from_json(const json& j) {
    SimTruth t;
    t.delta_ms = j.at("delta_ms").get<double>();
    t.hq_to_lq = pose_from_json(j.at("hq_to_lq"));
    t.lq_true_time_us = j.at("lq_true_time_us").get<std::vector<std::int64_t>>();
    t.hq_true_time_us = j.at("hq_true_time_us").get<std::vector<std::int64_t>>();
    t.scene = scene_from_json(j.at("scene"));
    return t;
}

SimTruth load_truth(const std::filesystem::path& file) { return truth_from_json(load_json_file(file)); }

}  // namespace dpair

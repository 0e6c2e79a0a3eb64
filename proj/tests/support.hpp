#pragma once

#include "dpair/rng.hpp"
#include "dpair/simulator.hpp"
#include "dpair/types.hpp"

#include <filesystem>
#include <string>

namespace testutil {

// Scratch directory removed on scope exit.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("dpair_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

// Room-like scene: a dominant set of static anchors pins the extrinsic and a
// spinning sphere group provides the motion that makes the clock offset
// observable.
inline dpair::SceneSpec test_scene(double spin_deg_per_s = 40.0) {
    using namespace dpair;
    SceneSpec scene;

    Primitive wall;
    wall.kind = PrimitiveKind::plane;
    wall.pose.translation = Vec3(0.0, 0.0, 3.0);
    wall.size = Vec3(2.5, 2.0, 0.0);
    wall.albedo = {180, 170, 160};
    wall.checker_m = 0.22;
    wall.albedo2 = {90, 100, 120};
    scene.primitives.push_back(wall);

    Primitive ball;
    ball.kind = PrimitiveKind::sphere;
    ball.pose.translation = Vec3(0.1, 0.0, 2.0);
    ball.size = Vec3(0.35, 0.0, 0.0);
    ball.albedo = {200, 80, 70};
    ball.checker_m = 0.12;
    ball.albedo2 = {240, 200, 60};
    ball.group = 1;
    scene.primitives.push_back(ball);

    Primitive crate;
    crate.kind = PrimitiveKind::box;
    crate.pose = RigidTransform::from_axis_angle(Vec3(0, 1, 0), 0.15, Vec3(-0.7, 0.25, 2.4));
    crate.size = Vec3(0.25, 0.35, 0.2);
    crate.albedo = {70, 160, 200};
    crate.checker_m = 0.15;
    crate.albedo2 = {40, 60, 120};
    scene.primitives.push_back(crate);

    const double wall_pts[][3] = {{-1.2, -0.8, 3}, {1.1, -0.7, 3}, {-1.0, 0.9, 3}, {1.2, 0.8, 3},
                                  {-0.4, -1.1, 3}, {0.5, 1.0, 3},  {-1.4, 0.1, 3}, {1.4, -0.2, 3},
                                  {-0.8, -0.5, 3}, {0.8, 0.5, 3},  {-0.6, 0.6, 3}, {0.6, -0.6, 3},
                                  {-0.55, 0.12, 2.62}, {-0.78, 0.4, 2.5}, {-0.62, -0.1, 2.55},
                                  {-0.85, 0.3, 2.45}};
    for (const auto& p : wall_pts) scene.anchors.push_back({dpair::Vec3(p[0], p[1], p[2]), 0});

    const double ball_pts[][3] = {{0.1, 0.0, 1.65},  {0.35, 0.18, 1.78}, {-0.15, -0.2, 1.74},
                                  {0.3, -0.15, 1.82}, {-0.1, 0.25, 1.8}, {0.12, -0.3, 1.76}};
    for (const auto& p : ball_pts) scene.anchors.push_back({dpair::Vec3(p[0], p[1], p[2]), 1});

    if (spin_deg_per_s != 0.0)
        scene.spins.push_back({1, dpair::Vec3(0, 1, 0), dpair::Vec3(0.1, 0.0, 2.0), spin_deg_per_s});
    return scene;
}

inline dpair::CameraIntrinsics small_lq_intrinsics() {
    return {140.0, 140.0, 79.5, 59.5, 160, 120};
}

inline dpair::CameraIntrinsics small_hq_intrinsics() {
    return {190.0, 190.0, 99.5, 74.5, 200, 150};
}

// Defaults: noiseless HQ, mildly noisy LQ, incommensurate frame rates.
inline dpair::RigSpec test_rig(double delta_ms, const dpair::RigidTransform& hq_to_lq,
                               double lq_noise_mm = 0.0, double lq_dropout = 0.0,
                               double jitter_ms = 1.0) {
    dpair::RigSpec rig;
    rig.lq.intrinsics = small_lq_intrinsics();
    rig.lq.fps = 30.0;
    rig.lq.jitter_ms = jitter_ms;
    rig.lq.noise_sigma_mm = lq_noise_mm;
    rig.lq.dropout_prob = lq_dropout;
    rig.lq.quant_step_mm = 1.0;

    rig.hq.intrinsics = small_hq_intrinsics();
    rig.hq.fps = 47.0;
    rig.hq.jitter_ms = jitter_ms;
    rig.hq.quant_step_mm = 1.0;

    rig.hq_to_lq = hq_to_lq;
    rig.delta_ms = delta_ms;
    return rig;
}

// Noise-free variant of both sensors (exact analytic depth survives).
inline void make_noiseless(dpair::RigSpec& rig) {
    for (dpair::SensorSpec* s : {&rig.lq, &rig.hq}) {
        s->noise_sigma_mm = 0.0;
        s->noise_quad_mm_per_m2 = 0.0;
        s->dropout_prob = 0.0;
        s->quant_step_mm = 0.0;
        s->jitter_ms = 0.0;
    }
}

inline dpair::RigidTransform small_extrinsic(double angle_deg = 4.0, double baseline_m = 0.08) {
    return dpair::RigidTransform::from_axis_angle(dpair::Vec3(0, 1, 0), angle_deg * M_PI / 180.0,
                                                  dpair::Vec3(baseline_m, 0.01, 0.005));
}

}  // namespace testutil

#include "dpair/json_conv.hpp"

namespace dpair {

using nlohmann::json;

json intrinsics_to_json(const CameraIntrinsics& k) {
    return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics intrinsics_from_json(const json& j) {
    CameraIntrinsics k;
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.width = j.at("width").get<int>();
    k.height = j.at("height").get<int>();
    return k;
}

json transform_to_json(const RigidTransform& t) {
    return {{"qw", t.rotation.w()}, {"qx", t.rotation.x()}, {"qy", t.rotation.y()},
            {"qz", t.rotation.z()}, {"tx", t.translation.x()}, {"ty", t.translation.y()},
            {"tz", t.translation.z()}};
}

RigidTransform transform_from_json(const json& j) {
    RigidTransform t;
    t.rotation = Quat(j.at("qw").get<double>(), j.at("qx").get<double>(), j.at("qy").get<double>(),
                      j.at("qz").get<double>());
    t.translation = Vec3(j.at("tx").get<double>(), j.at("ty").get<double>(), j.at("tz").get<double>());
    return t.normalized();
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw LoadError("expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace dpair

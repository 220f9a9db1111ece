#include "rvw/config.hpp"

#include "rvw/error.hpp"
#include "rvw/geometry.hpp"

#include <set>

namespace rvw {

void Config::validate() const
{
    const auto require = [](bool ok, const char* what) {
        if (!ok) {
            throw ValidationError(std::string("config: ") + what);
        }
    };
    require(epsilon > 0.0, "epsilon must be > 0");
    require(min_crossing_angle_deg >= 0.0 && min_crossing_angle_deg <= 90.0, "min_crossing_angle_deg in [0, 90]");
    require(min_frames >= 2, "min_frames must be >= 2");
    require(terminal_radius >= 0.0, "terminal_radius must be >= 0");
    require(corridor_tolerance > 0.0, "corridor_tolerance must be > 0");
    require(fps > 0.0, "fps must be > 0");
    require(frame_width >= 2 && frame_height >= 2, "frame dimensions must be >= 2");
    require(camera_fov_deg > 0.0 && camera_fov_deg <= target_fov_deg && target_fov_deg < 180.0,
            "need 0 < camera_fov_deg <= target_fov_deg < 180");
    require(camera_height > 0.0, "camera_height must be > 0");
    require(avatar_distance >= 0.0, "avatar_distance must be >= 0");
    require(delta_end >= 0.0 && delta_preload >= 0.0, "thresholds must be >= 0");
    require(fade >= 0.0, "fade must be >= 0");
    require(max_step > 0.0, "max_step must be > 0");
    require(!walkable_classes.empty(), "walkable_classes must not be empty");
}

Json config_to_json(const Config& c)
{
    return Json{
        {"epsilon", c.epsilon},
        {"min_crossing_angle_deg", c.min_crossing_angle_deg},
        {"min_frames", c.min_frames},
        {"terminal_radius", c.terminal_radius},
        {"corridor_tolerance", c.corridor_tolerance},
        {"max_trajectory_step", c.max_trajectory_step},
        {"fps", c.fps},
        {"frame_width", c.frame_width},
        {"frame_height", c.frame_height},
        {"camera_fov_deg", c.camera_fov_deg},
        {"target_fov_deg", c.target_fov_deg},
        {"camera_height", c.camera_height},
        {"avatar_distance", c.avatar_distance},
        {"delta_end", c.delta_end},
        {"delta_preload", c.delta_preload},
        {"fade", c.fade},
        {"max_step", c.max_step},
        {"walkable_classes", c.walkable_classes},
        {"with_video", c.with_video},
        // derived, for clients building the projection surface
        {"spheroid_k", geo::solve_k(c.target_fov_deg, c.camera_fov_deg)},
    };
}

Config config_from_json(const Json& j)
{
    if (!j.is_object()) {
        throw ParseError("config must be a JSON object");
    }
    static const std::set<std::string> known{
        "epsilon", "min_crossing_angle_deg", "min_frames", "terminal_radius", "corridor_tolerance",
        "max_trajectory_step", "fps", "frame_width", "frame_height", "camera_fov_deg", "target_fov_deg",
        "camera_height", "avatar_distance", "delta_end", "delta_preload", "fade", "max_step",
        "walkable_classes", "with_video", "spheroid_k"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) {
            throw ParseError("config: unknown key '" + it.key() + "'");
        }
    }
    Config c;
    try {
        const auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) {
                j.at(key).get_to(field);
            }
        };
        get("epsilon", c.epsilon);
        get("min_crossing_angle_deg", c.min_crossing_angle_deg);
        get("min_frames", c.min_frames);
        get("terminal_radius", c.terminal_radius);
        get("corridor_tolerance", c.corridor_tolerance);
        get("max_trajectory_step", c.max_trajectory_step);
        get("fps", c.fps);
        get("frame_width", c.frame_width);
        get("frame_height", c.frame_height);
        get("camera_fov_deg", c.camera_fov_deg);
        get("target_fov_deg", c.target_fov_deg);
        get("camera_height", c.camera_height);
        get("avatar_distance", c.avatar_distance);
        get("delta_end", c.delta_end);
        get("delta_preload", c.delta_preload);
        get("fade", c.fade);
        get("max_step", c.max_step);
        get("walkable_classes", c.walkable_classes);
        get("with_video", c.with_video);
    } catch (const Json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace rvw

#pragma once

#include "rvw/canonical_json.hpp"

#include <string>
#include <vector>

namespace rvw {

// Every tunable of the pipeline. A copy travels inside each manifest so a
// world is self-describing.
struct Config {
    // trajectory ingestion and graph building
    double epsilon = 1.0;                 // m, intersection pair distance
    double min_crossing_angle_deg = 30.0;  // pairs of near-parallel paths are not crossings
    int min_frames = 15;                  // shortest edge kept between two intersections
    double terminal_radius = 2.0;         // m, video ends closer than this share a node
    double corridor_tolerance = 2.0;      // m, mean distance for reverse-edge pairing
    double max_trajectory_step = 0.5;     // m between consecutive frames; <= 0 disables

    // capture and rendering
    double fps = 30.0;
    int frame_width = 1920;
    int frame_height = 960;
    double camera_fov_deg = 60.0;
    double target_fov_deg = 110.0;

    // navigation
    double camera_height = 1.7;    // m
    double avatar_distance = 1.5;  // m, camera-to-avatar gap along the track
    double delta_end = 2.0;        // m, intersection arrival threshold
    double delta_preload = 5.0;    // m, preload threshold (closed)
    double fade = 0.5;             // s
    double max_step = 0.5;         // m per step

    std::vector<std::string> walkable_classes{"ground", "road", "sidewalk", "parking", "person"};
    bool with_video = false;

    // Throws ValidationError on out-of-range values.
    void validate() const;
};

Json config_to_json(const Config& c);
// Missing keys keep their defaults; unknown keys are rejected.
Config config_from_json(const Json& j);

}  // namespace rvw

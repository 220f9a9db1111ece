#pragma once

#include "rvw/canonical_json.hpp"
#include "rvw/geometry.hpp"
#include "rvw/trajectory_graph.hpp"
#include "rvw/walkability.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

// Avatar navigation over a world graph. The camera sits at a captured frame
// position of the current edge and looks at the avatar; collision is a lookup
// of the avatar's foot direction in the frame's walkability map.
namespace rvw::nav {

using graph::Point2;

// Immutable world data shared by all sessions.
class World {
public:
    // Walk maps are keyed by walkmap_uri.
    World(graph::WorldGraph graph, std::map<std::string, walk::WalkMap> walkmaps);

    // Loads the manifest and every referenced walk map below `assets_root`.
    // Missing files raise NotFoundError naming the URI.
    static World load(const std::string& manifest_path, const std::string& assets_root);

    const graph::WorldGraph& graph() const { return graph_; }
    const Config& config() const { return graph_.config(); }
    const walk::WalkMap& walkmap(const graph::Edge& edge) const;

private:
    graph::WorldGraph graph_;
    std::map<std::string, walk::WalkMap> walkmaps_;
};

enum class Mode { walking, at_intersection, fading };

struct SessionState {
    std::string session_id;
    int edge_id = 0;
    Point2 avatar_pos;
    double avatar_yaw = 0.0;  // bearing, atan2(dx, dy)
    int current_frame = 0;    // absolute frame index of the edge's video
    double s = 0.0;           // camera arc length along the edge
    Mode mode = Mode::walking;
    std::vector<int> pending_options;
    std::optional<int> at_node;  // node whose options are pending
    double fade_t = 0.0;         // seconds of transition left
};

struct Action {
    enum class Kind { choose, reverse, teleport };
    Kind kind = Kind::reverse;
    int target = 0;  // edge id for choose, node id for teleport
};

struct StepInput {
    Point2 move;  // requested planar displacement, meters
    std::optional<Action> action;
    std::optional<double> dt;  // seconds; the engine default applies when absent
};

enum class Event { fade_out, fade_in, arrived_at_intersection, options_shown, edge_changed };

struct CameraPose {
    geo::Vec3 position;  // (x, height, y)
    geo::Vec3 look_at;   // the avatar's ground point
    double frame_yaw = 0.0;
};

struct StepResult {
    SessionState state;
    bool collided = false;
    bool clamped = false;  // the requested move exceeded max_step
    std::vector<Event> events;
    CameraPose camera;
    std::vector<int> preload_hints;
};

inline constexpr double kDefaultDt = 0.1;

// Direction from the camera to the avatar's foot, in the panorama's frame.
// Throws ValidationError when the planar positions coincide.
geo::Direction foot_direction(Point2 camera_pos, double camera_height, double frame_yaw, Point2 avatar_pos);

// Fresh session: on the lowest-id edge at s = 0, or as teleport(spawn_node).
SessionState create_session(const World& world, const std::string& session_id,
                            std::optional<int> spawn_node = std::nullopt);

StepResult step(const SessionState& state, const StepInput& input, const World& world, double dt);
StepResult choose_direction(const SessionState& state, int edge_id, const World& world);
StepResult switch_reverse(const SessionState& state, const World& world);
StepResult teleport(const SessionState& state, int node_id, const World& world);
std::vector<int> preload_hints(const SessionState& state, const World& world);

Point2 camera_position(const SessionState& state, const World& world);
CameraPose camera_pose(const SessionState& state, const World& world);
// The full result for a state that did not move (used for fresh sessions).
StepResult snapshot(const SessionState& state, const World& world);

const char* to_string(Mode mode);
const char* to_string(Event event);

Json to_json(const SessionState& state);
Json to_json(const CameraPose& camera);
Json to_json(const StepResult& result);
// ParseError on malformed input.
StepInput step_input_from_json(const Json& j);

}  // namespace rvw::nav

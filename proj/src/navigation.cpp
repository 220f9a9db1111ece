#include "rvw/navigation.hpp"

#include "rvw/error.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

namespace rvw::nav {

namespace fs = std::filesystem;

World::World(graph::WorldGraph graph, std::map<std::string, walk::WalkMap> walkmaps)
    : graph_(std::move(graph)), walkmaps_(std::move(walkmaps))
{
    graph::validate(graph_);
    for (const auto& e : graph_.edges()) {
        const auto it = walkmaps_.find(e.walkmap_uri);
        if (it == walkmaps_.end()) {
            throw NotFoundError("edge " + std::to_string(e.id) + ": walkmap '" + e.walkmap_uri + "' not loaded");
        }
        for (int f = e.frame_start; f <= e.frame_end; ++f) {
            if (!it->second.has_frame(f)) {
                throw ValidationError("edge " + std::to_string(e.id) + ": walkmap '" + e.walkmap_uri +
                                      "' has no frame " + std::to_string(f));
            }
        }
    }
}

World World::load(const std::string& manifest_path, const std::string& assets_root)
{
    graph::WorldGraph g = graph::load_manifest(manifest_path);
    std::map<std::string, walk::WalkMap> maps;
    for (const auto& e : g.edges()) {
        if (maps.count(e.walkmap_uri) != 0) {
            continue;
        }
        const fs::path path = fs::path(assets_root) / e.walkmap_uri;
        if (!fs::exists(path)) {
            throw NotFoundError("missing asset '" + e.walkmap_uri + "' (looked in " + path.string() + ")");
        }
        maps.emplace(e.walkmap_uri, walk::WalkMap::load(path.string()));
    }
    return World(std::move(g), std::move(maps));
}

const walk::WalkMap& World::walkmap(const graph::Edge& edge) const
{
    const auto it = walkmaps_.find(edge.walkmap_uri);
    if (it == walkmaps_.end()) {
        throw NotFoundError("walkmap '" + edge.walkmap_uri + "' not loaded");
    }
    return it->second;
}

geo::Direction foot_direction(Point2 camera_pos, double camera_height, double frame_yaw, Point2 avatar_pos)
{
    const double dx = avatar_pos.x - camera_pos.x;
    const double dy = avatar_pos.y - camera_pos.y;
    if (dx == 0.0 && dy == 0.0) {
        throw ValidationError("foot_direction: avatar coincides with the camera");
    }
    const double s = std::sin(frame_yaw);
    const double c = std::cos(frame_yaw);
    // panorama axes: z along the frame's bearing, x to its right, y up
    return geo::Direction::from_vector(geo::Vec3(dx * c - dy * s, -camera_height, dx * s + dy * c));
}

namespace {

double bearing(Point2 d) { return std::atan2(d.x, d.y); }

int offset_of(const graph::Edge& e, int frame)
{
    if (frame < e.frame_start || frame > e.frame_end) {
        throw ValidationError("frame " + std::to_string(frame) + " outside edge " + std::to_string(e.id));
    }
    return frame - e.frame_start;
}

// Unit direction of travel at offset i.
Point2 tangent(const graph::Edge& e, int i)
{
    const int n = static_cast<int>(e.positions.size());
    Point2 d;
    if (i + 1 < n) {
        d = {e.positions[i + 1].x - e.positions[i].x, e.positions[i + 1].y - e.positions[i].y};
    } else if (i > 0) {
        d = {e.positions[i].x - e.positions[i - 1].x, e.positions[i].y - e.positions[i - 1].y};
    }
    const double len = std::hypot(d.x, d.y);
    if (len < 1e-12) {
        return {std::sin(e.yaw[i]), std::cos(e.yaw[i])};
    }
    return {d.x / len, d.y / len};
}

// Arc length of the point of the edge polyline closest to p.
double project(const graph::Edge& e, Point2 p)
{
    const auto& pts = e.positions;
    if (pts.size() < 2) {
        return 0.0;
    }
    double best = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double ax = pts[i + 1].x - pts[i].x;
        const double ay = pts[i + 1].y - pts[i].y;
        const double len2 = ax * ax + ay * ay;
        double t = 0.0;
        if (len2 > 0.0) {
            t = std::clamp(((p.x - pts[i].x) * ax + (p.y - pts[i].y) * ay) / len2, 0.0, 1.0);
        }
        const double d = std::hypot(pts[i].x + t * ax - p.x, pts[i].y + t * ay - p.y);
        if (d < best) {
            best = d;
            best_s = e.arclen[i] + t * (e.arclen[i + 1] - e.arclen[i]);
        }
    }
    return best_s;
}

// Offset whose arc length is nearest s; ties go to the lower offset.
int offset_at(const graph::Edge& e, double s)
{
    const auto it = std::lower_bound(e.arclen.begin(), e.arclen.end(), s);
    if (it == e.arclen.begin()) {
        return 0;
    }
    if (it == e.arclen.end()) {
        return static_cast<int>(e.arclen.size()) - 1;
    }
    const auto hi = static_cast<int>(it - e.arclen.begin());
    return (s - e.arclen[hi - 1] <= *it - s) ? hi - 1 : hi;
}

std::vector<int> options_at(const World& world, const graph::Edge& current, int node)
{
    std::set<int> out;
    for (const int id : world.graph().outgoing(node)) {
        if (id != current.id) {
            out.insert(id);
        }
    }
    if (current.reverse_edge_id) {
        out.insert(*current.reverse_edge_id);
    }
    return {out.begin(), out.end()};
}

// Camera on `e` at `offset`, avatar ahead of it along the track.
void place(SessionState& st, const World& world, const graph::Edge& e, int offset)
{
    const Point2 cam = e.positions[static_cast<std::size_t>(offset)];
    const Point2 t = tangent(e, offset);
    const double d = world.config().avatar_distance;
    st.edge_id = e.id;
    st.current_frame = e.frame_start + offset;
    st.s = e.arclen[static_cast<std::size_t>(offset)];
    st.avatar_pos = {cam.x + d * t.x, cam.y + d * t.y};
    st.avatar_yaw = bearing(t);
}

void begin_transition(StepResult& r, const World& world)
{
    r.state.pending_options.clear();
    r.state.at_node.reset();
    const double fade = world.config().fade;
    r.state.mode = fade > 0.0 ? Mode::fading : Mode::walking;
    r.state.fade_t = fade;
    r.events.push_back(Event::fade_out);
    r.events.push_back(Event::edge_changed);
    r.events.push_back(Event::fade_in);
}

void finish(StepResult& r, const World& world)
{
    r.camera = camera_pose(r.state, world);
    r.preload_hints = preload_hints(r.state, world);
}

void require_not_fading(const SessionState& st)
{
    if (st.mode == Mode::fading) {
        throw ConflictError("a transition is in progress");
    }
}

void apply_move(StepResult& r, Point2 move, const World& world)
{
    SessionState& st = r.state;
    const graph::Edge& e = world.graph().edge(st.edge_id);
    const Config& cfg = world.config();

    const Point2 avatar{st.avatar_pos.x + move.x, st.avatar_pos.y + move.y};
    const double s = std::clamp(st.s + project(e, avatar) - project(e, st.avatar_pos), 0.0, e.length());
    const int offset = offset_at(e, s);
    const Point2 cam = e.positions[static_cast<std::size_t>(offset)];
    // an avatar standing exactly under the camera looks straight down
    const geo::Direction foot = avatar == cam ? geo::Direction::from_lat_lon(-geo::kPi / 2.0, 0.0)
                                              : foot_direction(cam, cfg.camera_height,
                                                               e.yaw[static_cast<std::size_t>(offset)], avatar);
    if (!world.walkmap(e).is_walkable(e.frame_start + offset, foot.lat(), foot.lon())) {
        r.collided = true;
        return;
    }

    const double previous_s = st.s;
    st.avatar_pos = avatar;
    st.avatar_yaw = bearing(move);
    st.s = s;
    st.current_frame = e.frame_start + offset;

    const double len = e.length();
    if (st.mode == Mode::walking) {
        std::optional<int> node;
        if (s >= len - cfg.delta_end && s > previous_s) {
            node = e.to;
        } else if (s <= cfg.delta_end && s < previous_s) {
            node = e.from;
        }
        if (node) {
            st.mode = Mode::at_intersection;
            st.at_node = node;
            st.pending_options = options_at(world, e, *node);
            r.events.push_back(Event::arrived_at_intersection);
            r.events.push_back(Event::options_shown);
        }
    } else if (st.mode == Mode::at_intersection && st.at_node) {
        const bool near = *st.at_node == e.to ? s >= len - cfg.delta_end : s <= cfg.delta_end;
        if (!near) {
            st.mode = Mode::walking;
            st.at_node.reset();
            st.pending_options.clear();
        }
    }
}

StepResult do_choose(const SessionState& state, int edge_id, const World& world)
{
    require_not_fading(state);
    if (state.mode != Mode::at_intersection) {
        throw ConflictError("no intersection options are pending");
    }
    if (std::find(state.pending_options.begin(), state.pending_options.end(), edge_id) ==
        state.pending_options.end()) {
        throw ConflictError("edge " + std::to_string(edge_id) + " is not an offered option");
    }
    const graph::Edge& current = world.graph().edge(state.edge_id);
    if (current.reverse_edge_id && *current.reverse_edge_id == edge_id) {
        return switch_reverse(state, world);
    }
    const graph::Edge& chosen = world.graph().edge(edge_id);
    StepResult r;
    r.state = state;
    const int offset = chosen.from == *state.at_node ? 0 : chosen.frame_count() - 1;
    place(r.state, world, chosen, offset);
    begin_transition(r, world);
    finish(r, world);
    return r;
}

}  // namespace

Point2 camera_position(const SessionState& state, const World& world)
{
    const graph::Edge& e = world.graph().edge(state.edge_id);
    return e.positions[static_cast<std::size_t>(offset_of(e, state.current_frame))];
}

CameraPose camera_pose(const SessionState& state, const World& world)
{
    const graph::Edge& e = world.graph().edge(state.edge_id);
    const int offset = offset_of(e, state.current_frame);
    const Point2 cam = e.positions[static_cast<std::size_t>(offset)];
    CameraPose pose;
    pose.position = geo::Vec3(cam.x, world.config().camera_height, cam.y);
    pose.look_at = geo::Vec3(state.avatar_pos.x, 0.0, state.avatar_pos.y);
    pose.frame_yaw = e.yaw[static_cast<std::size_t>(offset)];
    return pose;
}

std::vector<int> preload_hints(const SessionState& state, const World& world)
{
    const graph::Edge& e = world.graph().edge(state.edge_id);
    const Point2 cam = camera_position(state, world);
    std::set<int> out;
    for (const int node : {e.from, e.to}) {
        if (graph::distance(cam, world.graph().node(node).pos) <= world.config().delta_preload) {
            for (const int id : world.graph().outgoing(node)) {
                out.insert(id);
            }
        }
    }
    return {out.begin(), out.end()};
}

StepResult snapshot(const SessionState& state, const World& world)
{
    StepResult r;
    r.state = state;
    finish(r, world);
    return r;
}

SessionState create_session(const World& world, const std::string& session_id, std::optional<int> spawn_node)
{
    if (world.graph().edges().empty()) {
        throw ValidationError("world has no edges");
    }
    SessionState st;
    st.session_id = session_id;
    if (spawn_node) {
        SessionState placed = teleport(st, *spawn_node, world).state;
        placed.mode = Mode::walking;
        placed.fade_t = 0.0;
        return placed;
    }
    const auto lowest = std::min_element(world.graph().edges().begin(), world.graph().edges().end(),
                                         [](const auto& a, const auto& b) { return a.id < b.id; });
    place(st, world, *lowest, 0);
    return st;
}

StepResult step(const SessionState& state, const StepInput& input, const World& world, double dt)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ValidationError("dt must be positive");
    }
    if (!std::isfinite(input.move.x) || !std::isfinite(input.move.y)) {
        throw ValidationError("move must be finite");
    }
    const graph::Edge& e = world.graph().edge(state.edge_id);
    (void)offset_of(e, state.current_frame);

    StepResult r;
    r.state = state;
    if (state.mode == Mode::fading) {
        if (input.action) {
            throw ConflictError("a transition is in progress");
        }
        r.state.fade_t = state.fade_t - dt;
        // absorb the rounding left by repeated subtraction of decimal steps
        if (r.state.fade_t <= 1e-9) {
            r.state.fade_t = 0.0;
            r.state.mode = Mode::walking;
        }
        finish(r, world);
        return r;
    }

    Point2 move = input.move;
    const double len = std::hypot(move.x, move.y);
    const double max_step = world.config().max_step;
    if (len > max_step) {
        move = {move.x * max_step / len, move.y * max_step / len};
        r.clamped = true;
    }
    if (len > 0.0) {
        apply_move(r, move, world);
    }

    if (input.action) {
        StepResult acted;
        switch (input.action->kind) {
        case Action::Kind::choose:
            acted = do_choose(r.state, input.action->target, world);
            break;
        case Action::Kind::reverse:
            acted = switch_reverse(r.state, world);
            break;
        case Action::Kind::teleport:
            acted = teleport(r.state, input.action->target, world);
            break;
        }
        acted.collided = r.collided;
        acted.clamped = r.clamped;
        r.events.insert(r.events.end(), acted.events.begin(), acted.events.end());
        acted.events = std::move(r.events);
        r = std::move(acted);
    }
    finish(r, world);
    return r;
}

StepResult choose_direction(const SessionState& state, int edge_id, const World& world)
{
    return do_choose(state, edge_id, world);
}

StepResult switch_reverse(const SessionState& state, const World& world)
{
    require_not_fading(state);
    const graph::Edge& e = world.graph().edge(state.edge_id);
    if (!e.reverse_edge_id) {
        throw ConflictError("edge " + std::to_string(e.id) + " is a one-way segment");
    }
    const graph::Edge& rev = world.graph().edge(*e.reverse_edge_id);
    const int offset = graph::nearest_frame(rev, camera_position(state, world));
    StepResult r;
    r.state = state;
    r.state.edge_id = rev.id;
    r.state.current_frame = rev.frame_start + offset;
    r.state.s = rev.arclen[static_cast<std::size_t>(offset)];
    r.state.avatar_yaw = bearing(tangent(rev, offset));
    begin_transition(r, world);
    finish(r, world);
    return r;
}

StepResult teleport(const SessionState& state, int node_id, const World& world)
{
    require_not_fading(state);
    world.graph().node(node_id);
    const std::vector<int> out = world.graph().outgoing(node_id);
    if (out.empty()) {
        throw ConflictError("node " + std::to_string(node_id) + " has no outgoing edges");
    }
    StepResult r;
    r.state = state;
    place(r.state, world, world.graph().edge(out.front()), 0);
    begin_transition(r, world);
    finish(r, world);
    return r;
}

const char* to_string(Mode mode)
{
    switch (mode) {
    case Mode::walking:
        return "walking";
    case Mode::at_intersection:
        return "at_intersection";
    case Mode::fading:
        return "fading";
    }
    return "?";
}

const char* to_string(Event event)
{
    switch (event) {
    case Event::fade_out:
        return "fade_out";
    case Event::fade_in:
        return "fade_in";
    case Event::arrived_at_intersection:
        return "arrived_at_intersection";
    case Event::options_shown:
        return "options_shown";
    case Event::edge_changed:
        return "edge_changed";
    }
    return "?";
}

Json to_json(const SessionState& st)
{
    return Json{{"session_id", st.session_id},
                {"edge_id", st.edge_id},
                {"avatar_pos", {st.avatar_pos.x, st.avatar_pos.y}},
                {"avatar_yaw", st.avatar_yaw},
                {"current_frame", st.current_frame},
                {"s", st.s},
                {"mode", to_string(st.mode)},
                {"pending_options", st.pending_options},
                {"at_node", st.at_node ? Json(*st.at_node) : Json(nullptr)},
                {"fade_t", st.fade_t}};
}

Json to_json(const CameraPose& c)
{
    return Json{{"position", {c.position.x(), c.position.y(), c.position.z()}},
                {"look_at", {c.look_at.x(), c.look_at.y(), c.look_at.z()}},
                {"frame_yaw", c.frame_yaw}};
}

Json to_json(const StepResult& r)
{
    Json events = Json::array();
    for (const Event e : r.events) {
        events.push_back(to_string(e));
    }
    return Json{{"state", to_json(r.state)},    {"collided", r.collided},
                {"clamped", r.clamped},         {"events", events},
                {"camera", to_json(r.camera)}, {"preload_hints", r.preload_hints}};
}

namespace {

double finite_number(const Json& j, const char* what)
{
    if (!j.is_number()) {
        throw ParseError(std::string(what) + " must be a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        throw ParseError(std::string(what) + " must be finite");
    }
    return v;
}

int integer(const Json& j, const char* what)
{
    if (!j.is_number_integer()) {
        throw ParseError(std::string(what) + " must be an integer");
    }
    return j.get<int>();
}

}  // namespace

StepInput step_input_from_json(const Json& j)
{
    if (!j.is_object()) {
        throw ParseError("step input must be an object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "move" && it.key() != "action" && it.key() != "dt") {
            throw ParseError("unknown field '" + it.key() + "'");
        }
    }
    StepInput in;
    if (j.contains("move")) {
        const Json& m = j["move"];
        if (!m.is_array() || m.size() != 2) {
            throw ParseError("move must be [dx, dy]");
        }
        in.move = {finite_number(m[0], "move"), finite_number(m[1], "move")};
    }
    if (j.contains("dt")) {
        in.dt = finite_number(j["dt"], "dt");
        if (*in.dt <= 0.0) {
            throw ParseError("dt must be positive");
        }
    }
    if (j.contains("action") && !j["action"].is_null()) {
        const Json& a = j["action"];
        if (!a.is_object() || !a.contains("type") || !a["type"].is_string()) {
            throw ParseError("action must be an object with a type");
        }
        const std::string type = a["type"].get<std::string>();
        Action act;
        if (type == "choose") {
            act.kind = Action::Kind::choose;
            act.target = integer(a.value("edge_id", Json()), "action.edge_id");
        } else if (type == "reverse") {
            act.kind = Action::Kind::reverse;
        } else if (type == "teleport") {
            act.kind = Action::Kind::teleport;
            act.target = integer(a.value("node_id", Json()), "action.node_id");
        } else {
            throw ParseError("unknown action '" + type + "'");
        }
        in.action = act;
    }
    return in;
}

}  // namespace rvw::nav

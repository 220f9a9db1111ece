#pragma once

#include "rvw/canonical_json.hpp"
#include "rvw/config.hpp"

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace rvw::graph {

// Ground-plane position in meters. World 3D is (x, height, y).
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

double distance(Point2 a, Point2 b);

struct TrajectoryFrame {
    int frame = 0;
    Point2 pos;
    double yaw = 0.0;  // bearing of the panorama's forward direction, radians
};

struct Trajectory {
    std::string video_id;
    std::vector<TrajectoryFrame> frames;
    double fps = 30.0;
};

// CSV with header `frame,x,y[,yaw]`. `max_step` <= 0 disables the step check.
Trajectory parse_trajectory(const std::string& text, const std::string& video_id, double max_step = 0.5);
// video_id is the file stem.
Trajectory load_trajectory(const std::string& path, double max_step = 0.5);

struct FrameRef {
    std::string video_id;
    int frame = 0;

    friend bool operator==(const FrameRef&, const FrameRef&) = default;
};

struct IntersectionNode {
    Point2 position;
    std::vector<FrameRef> members;  // every frame within epsilon of position
};

// Cross-video frame pairs closer than epsilon whose paths cross at an angle of
// at least min_crossing_angle_deg, clustered by single linkage. Output is
// ordered by position and does not depend on the order of `trajs`.
std::vector<IntersectionNode> detect_intersections(const std::vector<Trajectory>& trajs, double epsilon,
                                                   double min_crossing_angle_deg = 30.0);

struct Node {
    int id = 0;
    Point2 pos;
    bool terminal = false;
};

struct Edge {
    int id = 0;
    int from = 0;
    int to = 0;
    std::string video_id;
    int frame_start = 0;
    int frame_end = 0;  // inclusive
    std::optional<int> reverse_edge_id;
    std::vector<double> arclen;
    std::vector<Point2> positions;
    std::vector<double> yaw;
    std::string frames_uri;
    std::optional<std::string> video_uri;
    std::string walkmap_uri;

    int frame_count() const { return frame_end - frame_start + 1; }
    double length() const { return arclen.empty() ? 0.0 : arclen.back(); }
};

struct Segmentation {
    std::vector<Node> nodes;
    std::vector<Edge> edges;  // ids follow (video_id, frame_start)
};

// Cuts every trajectory at the frame nearest each node per pass through it.
// Positions, yaw and arclen are filled; URIs and reverse ids are not.
Segmentation segment_videos(const std::vector<Trajectory>& trajs, const std::vector<IntersectionNode>& nodes,
                            int min_frames = 15, double terminal_radius = 2.0);

void pair_reverse_edges(std::vector<Edge>& edges, double corridor_tolerance = 2.0);

std::vector<double> arc_length_table(std::span<const Point2> positions);

// Offset into the edge's frames closest to `point`; ties go to the lower offset.
int nearest_frame(const Edge& edge, Point2 point);

// Mean over `points` of the distance to the polyline `line`.
double mean_distance_to_polyline(std::span<const Point2> points, std::span<const Point2> line);

class WorldGraph {
public:
    WorldGraph() = default;
    WorldGraph(Config config, std::vector<Node> nodes, std::vector<Edge> edges);

    const Config& config() const { return config_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }

    // Throw NotFoundError for unknown ids.
    const Node& node(int id) const;
    const Edge& edge(int id) const;
    bool has_node(int id) const { return node_index_.count(id) != 0; }
    bool has_edge(int id) const { return edge_index_.count(id) != 0; }

    // Edges leaving `node_id`, ascending id.
    std::vector<int> outgoing(int node_id) const;

private:
    Config config_;
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::unordered_map<int, std::size_t> node_index_;
    std::unordered_map<int, std::size_t> edge_index_;
};

WorldGraph build_manifest(const std::vector<Trajectory>& trajs, const Config& config);

// Checks endpoint existence, frame ranges, arclen tables against a re-summation
// of the positions, and reverse pairing. Throws ValidationError naming the edge.
void validate(const WorldGraph& graph);

Json manifest_to_json(const WorldGraph& graph);
// Canonical text, two-space indented, trailing newline.
std::string manifest_text(const WorldGraph& graph);
// Parses the schema only; call validate() for the graph invariants.
WorldGraph manifest_from_json(const Json& j);
WorldGraph load_manifest(const std::string& path);

}  // namespace rvw::graph

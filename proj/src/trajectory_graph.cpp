#include "rvw/trajectory_graph.hpp"

#include "rvw/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

namespace rvw::graph {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        fields.push_back(trim(field));
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

int parse_int(const std::string& s, int line, const char* what)
{
    int value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError(std::string("malformed ") + what + " '" + s + "'", line);
    }
    return value;
}

double parse_double(const std::string& s, int line, const char* what)
{
    if (s.empty()) {
        throw ParseError(std::string("missing ") + what, line);
    }
    char* end = nullptr;
    const double value = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) {
        throw ParseError(std::string("malformed ") + what + " '" + s + "'", line);
    }
    if (!std::isfinite(value)) {
        throw ParseError(std::string("non-finite ") + what, line);
    }
    return value;
}

// Disjoint-set forest over [0, n).
class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

    std::size_t find(std::size_t i)
    {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }

    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b) {
            parent_[std::max(a, b)] = std::min(a, b);
        }
    }

private:
    std::vector<std::size_t> parent_;
};

// Uniform grid over the plane for fixed-radius neighbor queries.
class PointGrid {
public:
    explicit PointGrid(double cell) : cell_(cell) {}

    void insert(Point2 p, std::size_t id) { cells_[key(cell_of(p.x), cell_of(p.y))].push_back(id); }

    // Calls fn(id) for every id in the 3x3 cells around p.
    template <typename Fn>
    void for_neighbors(Point2 p, Fn&& fn) const
    {
        const long long cx = cell_of(p.x);
        const long long cy = cell_of(p.y);
        for (long long dx = -1; dx <= 1; ++dx) {
            for (long long dy = -1; dy <= 1; ++dy) {
                const auto it = cells_.find(key(cx + dx, cy + dy));
                if (it == cells_.end()) {
                    continue;
                }
                for (const std::size_t id : it->second) {
                    fn(id);
                }
            }
        }
    }

private:
    long long cell_of(double v) const { return static_cast<long long>(std::floor(v / cell_)); }
    static std::pair<long long, long long> key(long long x, long long y) { return {x, y}; }

    double cell_;
    std::map<std::pair<long long, long long>, std::vector<std::size_t>> cells_;
};

std::vector<const Trajectory*> sorted_by_id(const std::vector<Trajectory>& trajs)
{
    std::vector<const Trajectory*> out;
    out.reserve(trajs.size());
    for (const auto& t : trajs) {
        out.push_back(&t);
    }
    std::sort(out.begin(), out.end(), [](const Trajectory* a, const Trajectory* b) { return a->video_id < b->video_id; });
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i]->video_id == out[i - 1]->video_id) {
            throw ValidationError("duplicate video id '" + out[i]->video_id + "'");
        }
    }
    return out;
}

// Unit travel direction at frame i, widening the difference window across
// pauses. Empty when the whole trajectory is stationary.
std::optional<Point2> heading(const Trajectory& t, std::size_t i)
{
    const std::size_t n = t.frames.size();
    for (std::size_t r = 1; r < n; ++r) {
        const Point2 a = t.frames[i >= r ? i - r : 0].pos;
        const Point2 b = t.frames[std::min(i + r, n - 1)].pos;
        const double len = distance(a, b);
        if (len > 1e-9) {
            return Point2{(b.x - a.x) / len, (b.y - a.y) / len};
        }
    }
    return std::nullopt;
}

bool less_position(Point2 a, Point2 b) { return std::tie(a.x, a.y) < std::tie(b.x, b.y); }

double point_segment_distance(Point2 p, Point2 a, Point2 b)
{
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    if (len2 == 0.0) {
        return distance(p, a);
    }
    const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
    return distance(p, {a.x + t * dx, a.y + t * dy});
}

}  // namespace

Trajectory parse_trajectory(const std::string& text, const std::string& video_id, double max_step)
{
    Trajectory traj;
    traj.video_id = video_id;
    std::stringstream in(text);
    std::string raw;
    int line = 0;
    bool header_seen = false;
    bool has_yaw = false;
    while (std::getline(in, raw)) {
        ++line;
        const std::string content = trim(raw);
        if (content.empty()) {
            continue;
        }
        const auto fields = split_csv(content);
        if (!header_seen) {
            header_seen = true;
            if (fields == std::vector<std::string>{"frame", "x", "y", "yaw"}) {
                has_yaw = true;
            } else if (fields != std::vector<std::string>{"frame", "x", "y"}) {
                throw ParseError("expected header 'frame,x,y,yaw'", line);
            }
            continue;
        }
        const std::size_t expected = has_yaw ? 4 : 3;
        if (fields.size() != expected && !(has_yaw && fields.size() == 3)) {
            throw ParseError("expected " + std::to_string(expected) + " fields, got " + std::to_string(fields.size()),
                             line);
        }
        TrajectoryFrame f;
        f.frame = parse_int(fields[0], line, "frame index");
        f.pos.x = parse_double(fields[1], line, "x coordinate");
        f.pos.y = parse_double(fields[2], line, "y coordinate");
        if (fields.size() == 4 && !fields[3].empty()) {
            f.yaw = parse_double(fields[3], line, "yaw");
        }
        if (!traj.frames.empty()) {
            const auto& prev = traj.frames.back();
            if (f.frame <= prev.frame) {
                throw ParseError("frame index " + std::to_string(f.frame) + " does not increase", line);
            }
            if (max_step > 0.0 && distance(prev.pos, f.pos) > max_step + 1e-9) {
                throw ParseError("step of " + std::to_string(distance(prev.pos, f.pos)) + " m exceeds max step",
                                 line);
            }
        }
        traj.frames.push_back(f);
    }
    if (traj.frames.empty()) {
        throw ParseError("no frames");
    }
    return traj;
}

Trajectory load_trajectory(const std::string& path, double max_step)
{
    const std::string text = read_file(path);
    try {
        return parse_trajectory(text, std::filesystem::path(path).stem().string(), max_step);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::vector<IntersectionNode> detect_intersections(const std::vector<Trajectory>& trajs, double epsilon,
                                                   double min_crossing_angle_deg)
{
    if (!(epsilon > 0.0)) {
        throw ValidationError("epsilon must be > 0");
    }
    const auto sorted = sorted_by_id(trajs);
    const double max_abs_cos = std::cos(min_crossing_angle_deg * 3.14159265358979323846 / 180.0);

    struct FrameEntry {
        std::size_t traj;
        std::size_t index;
    };
    std::vector<FrameEntry> entries;
    std::vector<std::vector<std::optional<Point2>>> headings(sorted.size());
    PointGrid grid(epsilon);
    for (std::size_t t = 0; t < sorted.size(); ++t) {
        headings[t].reserve(sorted[t]->frames.size());
        for (std::size_t i = 0; i < sorted[t]->frames.size(); ++i) {
            headings[t].push_back(heading(*sorted[t], i));
            grid.insert(sorted[t]->frames[i].pos, entries.size());
            entries.push_back({t, i});
        }
    }

    // (traj a, frame i, traj b, frame j) with a < b
    std::vector<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>> pairs;
    for (const auto& e : entries) {
        const Point2 p = sorted[e.traj]->frames[e.index].pos;
        grid.for_neighbors(p, [&](std::size_t id) {
            const auto& o = entries[id];
            if (o.traj <= e.traj) {
                return;
            }
            if (!(distance(p, sorted[o.traj]->frames[o.index].pos) < epsilon)) {
                return;
            }
            const auto& ha = headings[e.traj][e.index];
            const auto& hb = headings[o.traj][o.index];
            if (ha && hb && std::abs(ha->x * hb->x + ha->y * hb->y) > max_abs_cos + 1e-12) {
                return;  // overlapping captures of the same street
            }
            pairs.emplace_back(e.traj, e.index, o.traj, o.index);
        });
    }
    std::sort(pairs.begin(), pairs.end());

    std::vector<Point2> midpoints;
    midpoints.reserve(pairs.size());
    for (const auto& [a, i, b, j] : pairs) {
        const Point2 p = sorted[a]->frames[i].pos;
        const Point2 q = sorted[b]->frames[j].pos;
        midpoints.push_back({(p.x + q.x) / 2.0, (p.y + q.y) / 2.0});
    }

    UnionFind clusters(midpoints.size());
    PointGrid mid_grid(epsilon);
    for (std::size_t k = 0; k < midpoints.size(); ++k) {
        mid_grid.insert(midpoints[k], k);
    }
    for (std::size_t k = 0; k < midpoints.size(); ++k) {
        mid_grid.for_neighbors(midpoints[k], [&](std::size_t m) {
            if (m > k && distance(midpoints[k], midpoints[m]) <= epsilon) {
                clusters.unite(k, m);
            }
        });
    }

    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t k = 0; k < midpoints.size(); ++k) {
        groups[clusters.find(k)].push_back(k);
    }

    std::vector<IntersectionNode> nodes;
    for (const auto& [root, members] : groups) {
        Point2 c;
        for (const std::size_t k : members) {
            c.x += midpoints[k].x;
            c.y += midpoints[k].y;
        }
        c.x /= static_cast<double>(members.size());
        c.y /= static_cast<double>(members.size());
        IntersectionNode node;
        node.position = c;
        for (const auto* t : sorted) {
            for (const auto& f : t->frames) {
                if (distance(f.pos, c) < epsilon) {
                    node.members.push_back({t->video_id, f.frame});
                }
            }
        }
        nodes.push_back(std::move(node));
    }
    std::sort(nodes.begin(), nodes.end(),
              [](const IntersectionNode& a, const IntersectionNode& b) { return less_position(a.position, b.position); });
    return nodes;
}

std::vector<double> arc_length_table(std::span<const Point2> positions)
{
    std::vector<double> table;
    table.reserve(positions.size());
    double total = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (i > 0) {
            total += distance(positions[i - 1], positions[i]);
        }
        table.push_back(total);
    }
    return table;
}

namespace {

constexpr int kTerminal = -1;

// A place where a trajectory is split. `index` is the last frame of the
// segment ending here; the start boundary sits at -1.
struct Boundary {
    long index;
    int node;  // interior node index, or kTerminal
};

std::vector<Boundary> cut_trajectory(const Trajectory& t, const std::vector<IntersectionNode>& nodes, int min_frames)
{
    const long n = static_cast<long>(t.frames.size());
    std::vector<Boundary> cuts;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        std::vector<long> member_indices;
        for (const auto& m : nodes[k].members) {
            if (m.video_id != t.video_id) {
                continue;
            }
            const auto it = std::lower_bound(t.frames.begin(), t.frames.end(), m.frame,
                                             [](const TrajectoryFrame& f, int frame) { return f.frame < frame; });
            if (it != t.frames.end() && it->frame == m.frame) {
                member_indices.push_back(it - t.frames.begin());
            }
        }
        std::sort(member_indices.begin(), member_indices.end());
        // one cut per pass: a maximal run of consecutive member frames
        std::size_t run_start = 0;
        for (std::size_t r = 0; r <= member_indices.size(); ++r) {
            if (r < member_indices.size() && (r == run_start || member_indices[r] == member_indices[r - 1] + 1)) {
                continue;
            }
            if (r > run_start) {
                long best = member_indices[run_start];
                double best_d = distance(t.frames[best].pos, nodes[k].position);
                for (std::size_t q = run_start + 1; q < r; ++q) {
                    const double d = distance(t.frames[member_indices[q]].pos, nodes[k].position);
                    if (d < best_d) {
                        best_d = d;
                        best = member_indices[q];
                    }
                }
                cuts.push_back({best, static_cast<int>(k)});
            }
            run_start = r;
        }
    }
    std::sort(cuts.begin(), cuts.end(), [](const Boundary& a, const Boundary& b) {
        return std::tie(a.index, a.node) < std::tie(b.index, b.node);
    });
    cuts.erase(std::unique(cuts.begin(), cuts.end(), [](const Boundary& a, const Boundary& b) { return a.index == b.index; }),
               cuts.end());

    std::vector<Boundary> bounds;
    bounds.push_back({-1, kTerminal});
    bounds.insert(bounds.end(), cuts.begin(), cuts.end());
    bounds.push_back({n - 1, kTerminal});

    // Merge degenerate segments until stable: fewer than two frames always,
    // shorter than min_frames when both ends are intersections.
    bool changed = true;
    while (changed && bounds.size() > 2) {
        changed = false;
        for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
            const long count = bounds[k + 1].index - bounds[k].index;
            const bool interior = bounds[k].node != kTerminal && bounds[k + 1].node != kTerminal;
            if (!(count < 2 || (interior && count < min_frames))) {
                continue;
            }
            if (k == 0) {
                if (bounds[0].node == kTerminal) {
                    bounds[0].node = bounds[1].node;
                }
                bounds.erase(bounds.begin() + 1);
            } else if (k + 2 == bounds.size()) {
                if (bounds[k + 1].node == kTerminal) {
                    bounds[k + 1].node = bounds[k].node;
                }
                bounds.erase(bounds.begin() + static_cast<long>(k));
            } else {
                bounds.erase(bounds.begin() + static_cast<long>(k));
            }
            changed = true;
            break;
        }
    }
    return bounds;
}

}  // namespace

Segmentation segment_videos(const std::vector<Trajectory>& trajs, const std::vector<IntersectionNode>& nodes,
                            int min_frames, double terminal_radius)
{
    const auto sorted = sorted_by_id(trajs);

    struct RawEdge {
        const Trajectory* traj;
        long first;
        long last;
        int from;  // interior index, or -(endpoint slot + 2)
        int to;
    };
    std::vector<RawEdge> raw;
    std::vector<Point2> endpoints;  // positions of video ends that became terminals

    for (const auto* t : sorted) {
        if (t->frames.size() < 2) {
            throw ValidationError("trajectory '" + t->video_id + "' needs at least two frames");
        }
        for (std::size_t i = 1; i < t->frames.size(); ++i) {
            if (t->frames[i].frame != t->frames[i - 1].frame + 1) {
                throw ValidationError("trajectory '" + t->video_id + "' skips frames after " +
                                      std::to_string(t->frames[i - 1].frame));
            }
        }
        const auto bounds = cut_trajectory(*t, nodes, min_frames);
        const auto endpoint_slot = [&](Point2 p) {
            endpoints.push_back(p);
            return -static_cast<int>(endpoints.size()) - 1;
        };
        const int start = bounds.front().node == kTerminal ? endpoint_slot(t->frames.front().pos) : bounds.front().node;
        const int end = bounds.back().node == kTerminal ? endpoint_slot(t->frames.back().pos) : bounds.back().node;
        for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
            const int from = k == 0 ? start : bounds[k].node;
            const int to = k + 2 == bounds.size() ? end : bounds[k + 1].node;
            raw.push_back({t, bounds[k].index + 1, bounds[k + 1].index, from, to});
        }
    }

    // Video ends close to each other share one terminal node.
    UnionFind terminal_sets(endpoints.size());
    for (std::size_t a = 0; a < endpoints.size(); ++a) {
        for (std::size_t b = a + 1; b < endpoints.size(); ++b) {
            if (distance(endpoints[a], endpoints[b]) <= terminal_radius) {
                terminal_sets.unite(a, b);
            }
        }
    }
    std::map<std::size_t, std::vector<std::size_t>> terminal_groups;
    for (std::size_t a = 0; a < endpoints.size(); ++a) {
        terminal_groups[terminal_sets.find(a)].push_back(a);
    }
    std::vector<std::pair<Point2, std::size_t>> terminals;  // centroid, group root
    for (const auto& [root, group] : terminal_groups) {
        Point2 c;
        for (const std::size_t a : group) {
            c.x += endpoints[a].x;
            c.y += endpoints[a].y;
        }
        c.x /= static_cast<double>(group.size());
        c.y /= static_cast<double>(group.size());
        terminals.emplace_back(c, root);
    }
    std::sort(terminals.begin(), terminals.end(),
              [](const auto& a, const auto& b) { return less_position(a.first, b.first); });

    Segmentation out;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        out.nodes.push_back({static_cast<int>(k), nodes[k].position, false});
    }
    std::map<std::size_t, int> terminal_id;
    for (const auto& [pos, root] : terminals) {
        const int id = static_cast<int>(out.nodes.size());
        terminal_id[root] = id;
        out.nodes.push_back({id, pos, true});
    }
    const auto resolve = [&](int ref) {
        return ref >= 0 ? ref : terminal_id.at(terminal_sets.find(static_cast<std::size_t>(-ref - 2)));
    };

    std::sort(raw.begin(), raw.end(), [](const RawEdge& a, const RawEdge& b) {
        return std::tie(a.traj->video_id, a.traj->frames[a.first].frame) <
               std::tie(b.traj->video_id, b.traj->frames[b.first].frame);
    });
    for (const auto& r : raw) {
        Edge e;
        e.id = static_cast<int>(out.edges.size());
        e.from = resolve(r.from);
        e.to = resolve(r.to);
        e.video_id = r.traj->video_id;
        e.frame_start = r.traj->frames[r.first].frame;
        e.frame_end = r.traj->frames[r.last].frame;
        for (long i = r.first; i <= r.last; ++i) {
            e.positions.push_back(r.traj->frames[i].pos);
            e.yaw.push_back(r.traj->frames[i].yaw);
        }
        e.arclen = arc_length_table(e.positions);
        out.edges.push_back(std::move(e));
    }
    return out;
}

double mean_distance_to_polyline(std::span<const Point2> points, std::span<const Point2> line)
{
    if (points.empty() || line.empty()) {
        throw ValidationError("mean_distance_to_polyline: empty input");
    }
    double total = 0.0;
    for (const Point2 p : points) {
        double best = distance(p, line.front());
        for (std::size_t i = 1; i < line.size(); ++i) {
            best = std::min(best, point_segment_distance(p, line[i - 1], line[i]));
        }
        total += best;
    }
    return total / static_cast<double>(points.size());
}

void pair_reverse_edges(std::vector<Edge>& edges, double corridor_tolerance)
{
    struct Candidate {
        double dist;
        std::size_t a;
        std::size_t b;
    };
    std::vector<Candidate> candidates;
    for (std::size_t a = 0; a < edges.size(); ++a) {
        edges[a].reverse_edge_id.reset();
    }
    for (std::size_t a = 0; a < edges.size(); ++a) {
        for (std::size_t b = a + 1; b < edges.size(); ++b) {
            if (edges[a].from != edges[b].to || edges[a].to != edges[b].from) {
                continue;
            }
            const double d = std::max(mean_distance_to_polyline(edges[a].positions, edges[b].positions),
                                      mean_distance_to_polyline(edges[b].positions, edges[a].positions));
            if (d <= corridor_tolerance) {
                candidates.push_back({d, a, b});
            }
        }
    }
    std::sort(candidates.begin(), candidates.end(), [&](const Candidate& x, const Candidate& y) {
        return std::tie(x.dist, edges[x.a].id, edges[x.b].id) < std::tie(y.dist, edges[y.a].id, edges[y.b].id);
    });
    for (const auto& c : candidates) {
        if (edges[c.a].reverse_edge_id || edges[c.b].reverse_edge_id) {
            continue;
        }
        edges[c.a].reverse_edge_id = edges[c.b].id;
        edges[c.b].reverse_edge_id = edges[c.a].id;
    }
}

int nearest_frame(const Edge& edge, Point2 point)
{
    if (edge.positions.empty()) {
        throw ValidationError("nearest_frame: edge " + std::to_string(edge.id) + " has no frames");
    }
    int best = 0;
    double best_d = distance(edge.positions[0], point);
    for (std::size_t i = 1; i < edge.positions.size(); ++i) {
        const double d = distance(edge.positions[i], point);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

WorldGraph::WorldGraph(Config config, std::vector<Node> nodes, std::vector<Edge> edges)
    : config_(std::move(config)), nodes_(std::move(nodes)), edges_(std::move(edges))
{
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!node_index_.emplace(nodes_[i].id, i).second) {
            throw ValidationError("duplicate node id " + std::to_string(nodes_[i].id));
        }
    }
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        if (!edge_index_.emplace(edges_[i].id, i).second) {
            throw ValidationError("duplicate edge id " + std::to_string(edges_[i].id));
        }
    }
}

const Node& WorldGraph::node(int id) const
{
    const auto it = node_index_.find(id);
    if (it == node_index_.end()) {
        throw NotFoundError("unknown node " + std::to_string(id));
    }
    return nodes_[it->second];
}

const Edge& WorldGraph::edge(int id) const
{
    const auto it = edge_index_.find(id);
    if (it == edge_index_.end()) {
        throw NotFoundError("unknown edge " + std::to_string(id));
    }
    return edges_[it->second];
}

std::vector<int> WorldGraph::outgoing(int node_id) const
{
    std::vector<int> ids;
    for (const auto& e : edges_) {
        if (e.from == node_id) {
            ids.push_back(e.id);
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

WorldGraph build_manifest(const std::vector<Trajectory>& trajs, const Config& config)
{
    config.validate();
    if (trajs.empty()) {
        throw ValidationError("no trajectories");
    }
    std::vector<IntersectionNode> intersections;
    if (trajs.size() >= 2) {
        intersections = detect_intersections(trajs, config.epsilon, config.min_crossing_angle_deg);
    }
    auto seg = segment_videos(trajs, intersections, config.min_frames, config.terminal_radius);
    pair_reverse_edges(seg.edges, config.corridor_tolerance);
    for (auto& e : seg.edges) {
        e.frames_uri = "frames/" + e.video_id;
        e.walkmap_uri = "walkmaps/" + e.video_id + ".json";
        if (config.with_video) {
            e.video_uri = "videos/" + e.video_id + ".mp4";
        }
    }
    WorldGraph graph(config, std::move(seg.nodes), std::move(seg.edges));
    validate(graph);
    return graph;
}

void validate(const WorldGraph& graph)
{
    for (const auto& e : graph.edges()) {
        const std::string name = "edge " + std::to_string(e.id);
        const auto fail = [&](const std::string& what) { throw ValidationError(name + ": " + what); };
        if (!graph.has_node(e.from)) {
            fail("dangling endpoint from=" + std::to_string(e.from));
        }
        if (!graph.has_node(e.to)) {
            fail("dangling endpoint to=" + std::to_string(e.to));
        }
        if (!(e.frame_start < e.frame_end)) {
            fail("frame_start must be < frame_end");
        }
        const auto count = static_cast<std::size_t>(e.frame_count());
        if (e.arclen.size() != count || e.positions.size() != count || e.yaw.size() != count) {
            fail("arclen, positions and yaw must have one entry per frame");
        }
        if (e.arclen.front() != 0.0) {
            fail("arclen must start at 0");
        }
        double total = 0.0;
        for (std::size_t i = 1; i < count; ++i) {
            if (e.arclen[i] < e.arclen[i - 1]) {
                fail("arclen decreases at offset " + std::to_string(i));
            }
            total += distance(e.positions[i - 1], e.positions[i]);
            // manifest values carry six decimals
            if (std::abs(total - e.arclen[i]) > 1e-5 + 2e-6 * static_cast<double>(i)) {
                fail("arclen disagrees with positions at offset " + std::to_string(i));
            }
        }
        if (e.reverse_edge_id) {
            if (!graph.has_edge(*e.reverse_edge_id)) {
                fail("reverse edge " + std::to_string(*e.reverse_edge_id) + " does not exist");
            }
            const Edge& r = graph.edge(*e.reverse_edge_id);
            if (r.reverse_edge_id != e.id) {
                fail("reverse pairing with edge " + std::to_string(r.id) + " is not mutual");
            }
            if (r.from != e.to || r.to != e.from) {
                fail("reverse edge " + std::to_string(r.id) + " does not connect the same nodes in opposite order");
            }
        }
    }
}

Json manifest_to_json(const WorldGraph& graph)
{
    Json nodes = Json::array();
    for (const auto& n : graph.nodes()) {
        nodes.push_back({{"id", n.id}, {"x", n.pos.x}, {"y", n.pos.y}, {"terminal", n.terminal}});
    }
    Json edges = Json::array();
    for (const auto& e : graph.edges()) {
        Json positions = Json::array();
        for (const auto& p : e.positions) {
            positions.push_back({p.x, p.y});
        }
        edges.push_back({
            {"id", e.id},
            {"from", e.from},
            {"to", e.to},
            {"video_id", e.video_id},
            {"frame_start", e.frame_start},
            {"frame_end", e.frame_end},
            {"reverse_edge_id", e.reverse_edge_id ? Json(*e.reverse_edge_id) : Json(nullptr)},
            {"arclen", e.arclen},
            {"positions", positions},
            {"yaw", e.yaw},
            {"frames_uri", e.frames_uri},
            {"video_uri", e.video_uri ? Json(*e.video_uri) : Json(nullptr)},
            {"walkmap_uri", e.walkmap_uri},
        });
    }
    return Json{{"config", config_to_json(graph.config())}, {"nodes", nodes}, {"edges", edges}};
}

std::string manifest_text(const WorldGraph& graph) { return canonical_dump(manifest_to_json(graph), 2) + "\n"; }

WorldGraph manifest_from_json(const Json& j)
{
    try {
        Config config = config_from_json(j.at("config"));
        std::vector<Node> nodes;
        for (const auto& n : j.at("nodes")) {
            nodes.push_back({n.at("id").get<int>(), {n.at("x").get<double>(), n.at("y").get<double>()},
                             n.value("terminal", false)});
        }
        std::vector<Edge> edges;
        for (const auto& je : j.at("edges")) {
            Edge e;
            e.id = je.at("id").get<int>();
            e.from = je.at("from").get<int>();
            e.to = je.at("to").get<int>();
            e.video_id = je.at("video_id").get<std::string>();
            e.frame_start = je.at("frame_start").get<int>();
            e.frame_end = je.at("frame_end").get<int>();
            if (!je.at("reverse_edge_id").is_null()) {
                e.reverse_edge_id = je.at("reverse_edge_id").get<int>();
            }
            e.arclen = je.at("arclen").get<std::vector<double>>();
            for (const auto& p : je.at("positions")) {
                e.positions.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            }
            e.yaw = je.at("yaw").get<std::vector<double>>();
            e.frames_uri = je.at("frames_uri").get<std::string>();
            if (!je.at("video_uri").is_null()) {
                e.video_uri = je.at("video_uri").get<std::string>();
            }
            e.walkmap_uri = je.at("walkmap_uri").get<std::string>();
            edges.push_back(std::move(e));
        }
        return WorldGraph(std::move(config), std::move(nodes), std::move(edges));
    } catch (const Json::exception& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    }
}

WorldGraph load_manifest(const std::string& path) { return manifest_from_json(parse_json(read_file(path))); }

}  // namespace rvw::graph

#include "rvw/error.hpp"
#include "rvw/trajectory_graph.hpp"

#include "oracles.hpp"
#include "scenes.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>

using namespace rvw;
using namespace rvw::graph;

namespace {

Config cross_config(double epsilon = 0.6)
{
    Config c;
    c.epsilon = epsilon;
    return c;
}

std::string error_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

// Every frame of every trajectory lies in exactly one edge.
void expect_partition(const std::vector<Trajectory>& trajs, const std::vector<Edge>& edges)
{
    for (const auto& t : trajs) {
        std::map<int, int> owner;
        for (const auto& e : edges) {
            if (e.video_id != t.video_id) {
                continue;
            }
            for (int f = e.frame_start; f <= e.frame_end; ++f) {
                EXPECT_TRUE(owner.emplace(f, e.id).second) << t.video_id << " frame " << f << " in two edges";
            }
        }
        for (const auto& f : t.frames) {
            EXPECT_EQ(owner.count(f.frame), 1u) << t.video_id << " frame " << f.frame << " not covered";
        }
        EXPECT_EQ(owner.size(), t.frames.size());
    }
}

Trajectory polyline(const std::string& id, const std::vector<Point2>& corners, double spacing)
{
    Trajectory t;
    t.video_id = id;
    int frame = 0;
    for (std::size_t k = 0; k + 1 < corners.size(); ++k) {
        const Trajectory leg = scene::straight(id, corners[k], corners[k + 1], spacing);
        for (std::size_t i = (k == 0 ? 0 : 1); i < leg.frames.size(); ++i) {
            auto f = leg.frames[i];
            f.frame = frame++;
            t.frames.push_back(f);
        }
    }
    return t;
}

}  // namespace

TEST(ParseTrajectory, ThreeRows)
{
    const Trajectory t = parse_trajectory("frame,x,y,yaw\n0,0,0,0\n1,0.4,0,0\n2,0.8,0,0\n", "v");
    ASSERT_EQ(t.frames.size(), 3u);
    EXPECT_DOUBLE_EQ(t.frames[2].pos.x, 0.8);
    EXPECT_EQ(t.video_id, "v");
}

TEST(ParseTrajectory, YawIsOptional)
{
    const Trajectory t = parse_trajectory("frame,x,y\n0,0,0\n1,0.4,0\n", "v");
    EXPECT_EQ(t.frames[1].yaw, 0.0);
    const Trajectory u = parse_trajectory("frame,x,y,yaw\n0,0,0,1.5\n1,0.4,0,\n", "v");
    EXPECT_EQ(u.frames[0].yaw, 1.5);
    EXPECT_EQ(u.frames[1].yaw, 0.0);
}

TEST(ParseTrajectory, RepeatedFrameNamesTheLine)
{
    const std::string msg =
        error_of([] { parse_trajectory("frame,x,y,yaw\n0,0,0,0\n1,0.4,0,0\n1,0.8,0,0\n", "v"); });
    EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
    EXPECT_THROW(parse_trajectory("frame,x,y,yaw\n0,0,0,0\n0,0.4,0,0\n", "v"), ParseError);
}

TEST(ParseTrajectory, EmptyFileHasNoFrames)
{
    EXPECT_NE(error_of([] { parse_trajectory("", "v"); }).find("no frames"), std::string::npos);
    EXPECT_NE(error_of([] { parse_trajectory("frame,x,y,yaw\n", "v"); }).find("no frames"), std::string::npos);
}

TEST(ParseTrajectory, RejectsMalformedRows)
{
    EXPECT_THROW(parse_trajectory("frame,x,y\n0,abc,0\n", "v"), ParseError);
    EXPECT_THROW(parse_trajectory("frame,x,y\n0,nan,0\n", "v"), ParseError);
    EXPECT_THROW(parse_trajectory("frame,x,y\n0,0\n", "v"), ParseError);
    EXPECT_THROW(parse_trajectory("time,x,y\n0,0,0\n", "v"), ParseError);
    const std::string msg = error_of([] { parse_trajectory("frame,x,y\n0,0,0\n1,inf,0\n", "v"); });
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(ParseTrajectory, RejectsOversizedStep)
{
    EXPECT_THROW(parse_trajectory("frame,x,y\n0,0,0\n1,2,0\n", "v", 0.5), ParseError);
    EXPECT_NO_THROW(parse_trajectory("frame,x,y\n0,0,0\n1,2,0\n", "v", 0.0));
}

TEST(LoadTrajectory, UsesFileStemAsVideoId)
{
    const std::string dir = scene::temp_dir("traj_load");
    scene::write_trajectories(dir, {scene::straight("clip_7", {0, 0}, {2, 0}, 0.5)});
    const Trajectory t = load_trajectory(dir + "/clip_7.csv");
    EXPECT_EQ(t.video_id, "clip_7");
    EXPECT_EQ(t.frames.size(), 5u);
    EXPECT_THROW(load_trajectory(dir + "/missing.csv"), NotFoundError);
    std::filesystem::remove_all(dir);
}

TEST(DetectIntersections, CrossingGivesOneNodeNearOrigin)
{
    const auto trajs = std::vector<Trajectory>{scene::straight("A", {-5, 0}, {5, 0}, 0.5),
                                               scene::straight("B", {0, -5}, {0, 5}, 0.5)};
    const auto nodes = detect_intersections(trajs, 0.6);
    ASSERT_EQ(nodes.size(), 1u);
    EXPECT_LT(std::hypot(nodes[0].position.x, nodes[0].position.y), 0.3);

    // every close pair found by the all-pairs scan lies within epsilon of the node
    const auto pairs = oracle::close_pairs(trajs, 0.6);
    ASSERT_FALSE(pairs.empty());
    for (const auto& p : pairs) {
        const Point2 a = trajs[p.traj_a].frames[p.frame_a].pos;
        const Point2 b = trajs[p.traj_b].frames[p.frame_b].pos;
        EXPECT_LT(distance({(a.x + b.x) / 2, (a.y + b.y) / 2}, nodes[0].position), 0.6);
    }
    for (const auto& m : nodes[0].members) {
        const auto& t = m.video_id == "A" ? trajs[0] : trajs[1];
        EXPECT_LT(distance(t.frames[static_cast<std::size_t>(m.frame)].pos, nodes[0].position), 0.6);
    }
}

TEST(DetectIntersections, ParallelTrajectoriesGiveNothing)
{
    const auto trajs = std::vector<Trajectory>{scene::straight("A", {0, 0}, {10, 0}, 0.5),
                                               scene::straight("B", {0, 5}, {10, 5}, 0.5)};
    EXPECT_TRUE(oracle::close_pairs(trajs, 0.6).empty());
    EXPECT_TRUE(detect_intersections(trajs, 0.6).empty());
}

TEST(DetectIntersections, TinyEpsilonMayFindNothing)
{
    const auto trajs = std::vector<Trajectory>{scene::straight("A", {-5, 0.25}, {5, 0.25}, 0.5),
                                               scene::straight("B", {0.25, -5}, {0.25, 5}, 0.5)};
    const bool oracle_empty = oracle::close_pairs(trajs, 0.1).empty();
    EXPECT_EQ(detect_intersections(trajs, 0.1).empty(), oracle_empty);
}

TEST(DetectIntersections, PermutationInvariant)
{
    std::vector<Trajectory> trajs = scene::cross_trajectories();
    trajs.push_back(scene::straight("C", {-4, -4}, {4, 4}, 0.5));
    const auto base = detect_intersections(trajs, 1.0);
    std::mt19937 rng(3);
    for (int i = 0; i < 10; ++i) {
        std::shuffle(trajs.begin(), trajs.end(), rng);
        const auto again = detect_intersections(trajs, 1.0);
        ASSERT_EQ(again.size(), base.size());
        for (std::size_t k = 0; k < base.size(); ++k) {
            EXPECT_NEAR(again[k].position.x, base[k].position.x, 1e-9);
            EXPECT_NEAR(again[k].position.y, base[k].position.y, 1e-9);
            EXPECT_EQ(again[k].members.size(), base[k].members.size());
        }
    }
}

TEST(DetectIntersections, ThreeVideosAtOnePlazaCollapse)
{
    const std::vector<Trajectory> trajs{scene::straight("A", {-5, 0}, {5, 0}, 0.5),
                                        scene::straight("B", {0, -5}, {0, 5}, 0.5),
                                        scene::straight("C", {-4, -4}, {4, 4}, 0.5)};
    const auto nodes = detect_intersections(trajs, 1.0);
    ASSERT_EQ(nodes.size(), 1u);
    std::set<std::string> videos;
    for (const auto& m : nodes[0].members) {
        videos.insert(m.video_id);
    }
    EXPECT_EQ(videos.size(), 3u);
}

TEST(DetectIntersections, DuplicateVideoIdsAreRejected)
{
    const std::vector<Trajectory> trajs{scene::straight("A", {-5, 0}, {5, 0}, 0.5),
                                        scene::straight("A", {0, -5}, {0, 5}, 0.5)};
    EXPECT_THROW(detect_intersections(trajs, 1.0), ValidationError);
}

TEST(SegmentVideos, CrossingGivesTwoEdgesPerVideo)
{
    const auto trajs = std::vector<Trajectory>{scene::straight("A", {-5, 0}, {5, 0}, 0.5),
                                               scene::straight("B", {0, -5}, {0, 5}, 0.5)};
    const auto nodes = detect_intersections(trajs, 0.6);
    const auto seg = segment_videos(trajs, nodes);
    ASSERT_EQ(seg.edges.size(), 4u);
    for (const auto& e : seg.edges) {
        const bool touches_center = e.from == 0 || e.to == 0;
        const bool touches_terminal = seg.nodes[static_cast<std::size_t>(e.from)].terminal ||
                                      seg.nodes[static_cast<std::size_t>(e.to)].terminal;
        EXPECT_TRUE(touches_center && touches_terminal) << "edge " << e.id;
    }
    // A is cut at x = 0 (frame 10): [0..10] arrives, [11..20] leaves
    EXPECT_EQ(seg.edges[0].frame_start, 0);
    EXPECT_EQ(seg.edges[0].frame_end, 10);
    EXPECT_EQ(seg.edges[1].frame_start, 11);
    EXPECT_EQ(seg.edges[1].frame_end, 20);
    expect_partition(trajs, seg.edges);
}

TEST(SegmentVideos, NoNodesGivesOneEdge)
{
    const std::vector<Trajectory> trajs{scene::straight("A", {0, 0}, {10, 0}, 0.5)};
    const auto seg = segment_videos(trajs, {});
    ASSERT_EQ(seg.edges.size(), 1u);
    EXPECT_EQ(seg.edges[0].frame_start, 0);
    EXPECT_EQ(seg.edges[0].frame_end, 20);
    EXPECT_EQ(seg.nodes.size(), 2u);
}

TEST(SegmentVideos, UShapedPathThroughOneNodeTwiceGivesThreeEdges)
{
    // out along y = 0, a U-turn at x = 5, back along y = 0.8: both passes
    // cross B within epsilon of the same node
    const std::vector<Trajectory> trajs{polyline("U", {{-5, 0}, {5, 0}, {5, 0.8}, {-5, 0.8}}, 0.4),
                                        scene::straight("B", {0.2, -5}, {0.2, 5}, 0.4)};
    const auto nodes = detect_intersections(trajs, 1.0);
    ASSERT_EQ(nodes.size(), 1u);
    const auto seg = segment_videos(trajs, nodes);
    const auto u_edges = std::count_if(seg.edges.begin(), seg.edges.end(), [](const Edge& e) { return e.video_id == "U"; });
    EXPECT_EQ(u_edges, 3);
    expect_partition(trajs, seg.edges);
}

TEST(SegmentVideos, ShortEdgeBetweenIntersectionsIsMerged)
{
    // A crosses two streets 3 m apart: the 6-frame edge between them is absorbed
    const std::vector<Trajectory> trajs{scene::straight("A", {-10, 0}, {10, 0}, 0.5),
                                        scene::straight("B", {0, -5}, {0, 5}, 0.5),
                                        scene::straight("C", {3, -5}, {3, 5}, 0.5)};
    const auto nodes = detect_intersections(trajs, 0.6);
    ASSERT_EQ(nodes.size(), 2u);
    const auto seg = segment_videos(trajs, nodes, 15);
    for (const auto& e : seg.edges) {
        const bool interior = !seg.nodes[static_cast<std::size_t>(e.from)].terminal &&
                              !seg.nodes[static_cast<std::size_t>(e.to)].terminal;
        if (interior) {
            EXPECT_GE(e.frame_count(), 15) << "edge " << e.id;
        }
    }
    expect_partition(trajs, seg.edges);

    const auto unmerged = segment_videos(trajs, nodes, 2);
    EXPECT_GT(unmerged.edges.size(), seg.edges.size());
    expect_partition(trajs, unmerged.edges);
}

TEST(SegmentVideos, RejectsFrameGaps)
{
    Trajectory t = scene::straight("A", {0, 0}, {5, 0}, 0.5);
    t.frames[3].frame = 100;
    for (std::size_t i = 4; i < t.frames.size(); ++i) {
        t.frames[i].frame = 100 + static_cast<int>(i) - 3;
    }
    EXPECT_THROW(segment_videos({t}, {}), ValidationError);
}

TEST(PairReverseEdges, BothDirectionsOnOneStreetPair)
{
    const auto g = build_manifest(scene::street_trajectories(10.0, 0.4, 0.45, 0.2), Config{});
    ASSERT_EQ(g.edges().size(), 2u);
    EXPECT_EQ(g.edges()[0].reverse_edge_id, 1);
    EXPECT_EQ(g.edges()[1].reverse_edge_id, 0);
}

TEST(PairReverseEdges, OneWayCaptureHasNoReverse)
{
    const auto g = build_manifest({scene::straight("A", {0, 0}, {10, 0}, 0.5)}, Config{});
    ASSERT_EQ(g.edges().size(), 1u);
    EXPECT_FALSE(g.edges()[0].reverse_edge_id.has_value());
}

TEST(PairReverseEdges, DistantParallelStreetsAreNotPaired)
{
    // two streets between the same two nodes, 20 m apart
    const Point2 n0{0, 0};
    const Point2 n1{40, 0};
    Edge a;
    a.id = 0;
    a.from = 0;
    a.to = 1;
    for (const auto& f : polyline("a", {n0, {10, 10}, {30, 10}, n1}, 0.5).frames) {
        a.positions.push_back(f.pos);
    }
    Edge b;
    b.id = 1;
    b.from = 1;
    b.to = 0;
    for (const auto& f : polyline("b", {n1, {30, -10}, {10, -10}, n0}, 0.5).frames) {
        b.positions.push_back(f.pos);
    }
    const double corridor = std::max(mean_distance_to_polyline(a.positions, b.positions),
                                     mean_distance_to_polyline(b.positions, a.positions));
    EXPECT_GT(corridor, 2.0);
    std::vector<Edge> edges{a, b};
    pair_reverse_edges(edges);
    EXPECT_FALSE(edges[0].reverse_edge_id.has_value());
    EXPECT_FALSE(edges[1].reverse_edge_id.has_value());
}

TEST(PairReverseEdges, PairingIsMutualAndExclusive)
{
    const auto g = build_manifest(scene::cross_trajectories(), cross_config());
    std::map<int, int> partner;
    for (const auto& e : g.edges()) {
        ASSERT_TRUE(e.reverse_edge_id.has_value()) << "edge " << e.id;
        EXPECT_TRUE(partner.emplace(e.id, *e.reverse_edge_id).second);
        const Edge& r = g.edge(*e.reverse_edge_id);
        EXPECT_EQ(r.reverse_edge_id, e.id);
        EXPECT_EQ(r.from, e.to);
        EXPECT_EQ(r.to, e.from);
    }
}

TEST(ArcLengthTable, UnitSteps)
{
    const std::vector<Point2> pts{{0, 0}, {1, 0}, {2, 0}};
    EXPECT_EQ(arc_length_table(pts), (std::vector<double>{0, 1, 2}));
    const std::vector<Point2> one{{3, 4}};
    EXPECT_EQ(arc_length_table(one), (std::vector<double>{0}));
}

TEST(ArcLengthTable, RandomWalkMatchesIndependentSum)
{
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> step(-0.3, 0.3);
    std::vector<Point2> pts{{0, 0}};
    for (int i = 0; i < 500; ++i) {
        pts.push_back({pts.back().x + step(rng), pts.back().y + step(rng)});
        if (i % 50 == 0) {
            pts.push_back(pts.back());  // a pause
        }
    }
    const auto table = arc_length_table(pts);
    ASSERT_EQ(table.size(), pts.size());
    long double sum = 0.0L;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        EXPECT_GE(table[i], table[i - 1]);
        sum += std::sqrt(static_cast<long double>(pts[i].x - pts[i - 1].x) * (pts[i].x - pts[i - 1].x) +
                         static_cast<long double>(pts[i].y - pts[i - 1].y) * (pts[i].y - pts[i - 1].y));
    }
    EXPECT_NEAR(table.back(), static_cast<double>(sum), 1e-9);
}

TEST(NearestFrame, ForcedArgmin)
{
    Edge fwd;
    Edge rev;
    for (int i = 0; i <= 10; ++i) {
        fwd.positions.push_back({static_cast<double>(i), 0});
        rev.positions.push_back({static_cast<double>(10 - i), 0});
    }
    EXPECT_EQ(nearest_frame(fwd, {3.2, 0}), 3);
    EXPECT_EQ(nearest_frame(rev, {3.2, 0}), 7);
    EXPECT_EQ(nearest_frame(fwd, {3.5, 0}), 3);  // tie goes low
}

TEST(NearestFrame, MatchesLinearScan)
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> coord(-10.0, 10.0);
    Edge e;
    for (int i = 0; i < 200; ++i) {
        e.positions.push_back({coord(rng), coord(rng)});
    }
    for (int q = 0; q < 1000; ++q) {
        const Point2 p{coord(rng), coord(rng)};
        int best = 0;
        for (int i = 1; i < 200; ++i) {
            const double di = std::pow(e.positions[i].x - p.x, 2) + std::pow(e.positions[i].y - p.y, 2);
            const double db = std::pow(e.positions[best].x - p.x, 2) + std::pow(e.positions[best].y - p.y, 2);
            if (di < db) {
                best = i;
            }
        }
        EXPECT_EQ(nearest_frame(e, p), best);
    }
}

TEST(BuildManifest, CrossingCounts)
{
    const auto g = build_manifest(scene::cross_trajectories(), cross_config());
    const auto interior = std::count_if(g.nodes().begin(), g.nodes().end(), [](const Node& n) { return !n.terminal; });
    const auto terminal = std::count_if(g.nodes().begin(), g.nodes().end(), [](const Node& n) { return n.terminal; });
    EXPECT_EQ(interior, 1);
    EXPECT_EQ(terminal, 4);
    EXPECT_EQ(g.edges().size(), 8u);
    EXPECT_LT(std::hypot(g.node(0).pos.x, g.node(0).pos.y), 0.3);
    EXPECT_EQ(g.outgoing(0).size(), 4u);
    expect_partition(scene::cross_trajectories(), g.edges());
}

TEST(BuildManifest, SingleVideoGivesTwoTerminalsAndOneEdge)
{
    const auto g = build_manifest({scene::straight("solo", {0, 0}, {10, 0}, 0.5)}, Config{});
    EXPECT_EQ(g.nodes().size(), 2u);
    EXPECT_EQ(g.edges().size(), 1u);
    EXPECT_TRUE(g.nodes()[0].terminal && g.nodes()[1].terminal);
}

TEST(BuildManifest, IdsFollowVideoAndFrameOrder)
{
    const auto g = build_manifest(scene::cross_trajectories(), cross_config());
    for (std::size_t i = 1; i < g.edges().size(); ++i) {
        const auto& a = g.edges()[i - 1];
        const auto& b = g.edges()[i];
        EXPECT_EQ(a.id + 1, b.id);
        EXPECT_TRUE(std::tie(a.video_id, a.frame_start) < std::tie(b.video_id, b.frame_start));
    }
}

TEST(BuildManifest, Deterministic)
{
    auto trajs = scene::cross_trajectories();
    const std::string first = manifest_text(build_manifest(trajs, cross_config()));
    std::reverse(trajs.begin(), trajs.end());
    EXPECT_EQ(manifest_text(build_manifest(trajs, cross_config())), first);
}

TEST(BuildManifest, NoTrajectories) { EXPECT_THROW(build_manifest({}, Config{}), ValidationError); }

TEST(BuildManifest, ResourceUris)
{
    Config c = cross_config();
    c.with_video = true;
    const auto g = build_manifest(scene::cross_trajectories(), c);
    const Edge& e = g.edges().front();
    EXPECT_EQ(e.frames_uri, "frames/a_fwd");
    EXPECT_EQ(e.walkmap_uri, "walkmaps/a_fwd.json");
    EXPECT_EQ(e.video_uri, "videos/a_fwd.mp4");
    EXPECT_FALSE(build_manifest(scene::cross_trajectories(), cross_config()).edges()[0].video_uri.has_value());
}

TEST(Manifest, JsonRoundTrip)
{
    const auto g = build_manifest(scene::cross_trajectories(), cross_config());
    const std::string text = manifest_text(g);
    const auto back = manifest_from_json(parse_json(text));
    EXPECT_NO_THROW(validate(back));
    EXPECT_EQ(manifest_text(back), text);
    EXPECT_EQ(back.nodes().size(), g.nodes().size());
    EXPECT_EQ(back.node(1).terminal, true);
}

TEST(Manifest, SchemaKeys)
{
    const Json j = parse_json(manifest_text(build_manifest(scene::cross_trajectories(), cross_config())));
    for (const char* key : {"config", "nodes", "edges"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    for (const char* key : {"id", "from", "to", "video_id", "frame_start", "frame_end", "reverse_edge_id", "arclen",
                            "frames_uri", "video_uri", "walkmap_uri"}) {
        EXPECT_TRUE(j["edges"][0].contains(key)) << key;
    }
    for (const char* key : {"id", "x", "y"}) {
        EXPECT_TRUE(j["nodes"][0].contains(key)) << key;
    }
}

TEST(Validate, DanglingEndpointNamesTheEdge)
{
    Json j = parse_json(manifest_text(build_manifest(scene::cross_trajectories(), cross_config())));
    j["edges"][3]["to"] = 99;
    const std::string msg = error_of([&] { validate(manifest_from_json(j)); });
    EXPECT_NE(msg.find("edge 3"), std::string::npos) << msg;
}

TEST(Validate, ArclenMustMatchPositions)
{
    Json j = parse_json(manifest_text(build_manifest(scene::cross_trajectories(), cross_config())));
    j["edges"][2]["arclen"][4] = 17.0;
    EXPECT_THROW(validate(manifest_from_json(j)), ValidationError);
}

TEST(Validate, ReversePairsMustBeMutual)
{
    Json j = parse_json(manifest_text(build_manifest(scene::cross_trajectories(), cross_config())));
    const int r = j["edges"][0]["reverse_edge_id"].get<int>();
    j["edges"][static_cast<std::size_t>(r)]["reverse_edge_id"] = nullptr;
    EXPECT_THROW(validate(manifest_from_json(j)), ValidationError);
}

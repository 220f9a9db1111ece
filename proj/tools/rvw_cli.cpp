#include "rvw/completion.hpp"
#include "rvw/error.hpp"
#include "rvw/navigation.hpp"
#include "rvw/service.hpp"
#include "rvw/trajectory_graph.hpp"
#include "rvw/walkability.hpp"

#include <CLI11.hpp>

#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace rvw;

namespace {

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kRuntime = 3 };

std::vector<fs::path> files_with_extension(const std::string& dir, const std::string& ext)
{
    if (!fs::is_directory(dir)) {
        throw NotFoundError("not a directory: " + dir);
    }
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ext) {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// --- build-graph -----------------------------------------------------------

struct BuildGraphArgs {
    std::string trajectories;
    std::string out;
    std::string config;
    std::optional<double> epsilon;
    std::optional<int> min_frames;
    bool with_video = false;
};

int build_graph(const BuildGraphArgs& a)
{
    Config config = a.config.empty() ? Config{} : config_from_json(parse_json(read_file(a.config)));
    if (a.epsilon) {
        config.epsilon = *a.epsilon;
    }
    if (a.min_frames) {
        config.min_frames = *a.min_frames;
    }
    config.with_video = config.with_video || a.with_video;
    config.validate();

    std::vector<graph::Trajectory> trajs;
    for (const auto& path : files_with_extension(a.trajectories, ".csv")) {
        trajs.push_back(graph::load_trajectory(path.string(), config.max_trajectory_step));
    }
    if (trajs.empty()) {
        throw ValidationError("no trajectories in " + a.trajectories);
    }
    const graph::WorldGraph g = graph::build_manifest(trajs, config);
    write_file(a.out, graph::manifest_text(g));
    std::size_t interior = 0;
    for (const auto& n : g.nodes()) {
        interior += n.terminal ? 0 : 1;
    }
    std::cout << "trajectories " << trajs.size() << ", nodes " << g.nodes().size() << " (" << interior
              << " intersections), edges " << g.edges().size() << "\n";
    return kOk;
}

// --- build-maps ------------------------------------------------------------

struct BuildMapsArgs {
    std::string classmaps;
    std::string classes;
    std::string labels;
    std::string out;
    int downsample = 1;
};

int build_maps(const BuildMapsArgs& a)
{
    const walk::LabelSet labels =
        a.labels.empty() ? walk::LabelSet::cityscapes() : walk::LabelSet::parse(read_file(a.labels));
    const std::set<int> walkable = labels.ids(walk::parse_class_list(read_file(a.classes)));

    const auto files = files_with_extension(a.classmaps, ".png");
    if (files.empty()) {
        throw ValidationError("no class maps in " + a.classmaps);
    }
    std::optional<walk::WalkMap> wm;
    for (const auto& path : files) {
        const std::string stem = path.stem().string();
        std::size_t used = 0;
        int frame = 0;
        try {
            frame = std::stoi(stem, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != stem.size()) {
            throw ValidationError("class map name is not a frame index: " + path.filename().string());
        }
        const ErpImage img = read_png(path.string());
        if (img.channels != 1) {
            throw ValidationError(path.filename().string() + ": class maps must be single-channel");
        }
        walk::ClassMap cm{img.width, img.height, std::vector<std::uint16_t>(img.data.begin(), img.data.end())};
        const walk::Raster raster = walk::downsample(walk::binarize(cm, walkable, labels.size()), a.downsample);
        if (!wm) {
            wm.emplace(raster.width, raster.height);
        }
        wm->add_frame(frame, raster);
    }
    write_file(a.out, wm->to_text());
    const walk::WalkMapStats s = walk::walkmap_stats(*wm);
    std::printf("frames %zu  size %dx%d  dense %zu bytes  rle %zu bytes  ratio %.6f\n", s.frames, wm->width(),
                wm->height(), s.raw_bytes, s.encoded_bytes, s.ratio);
    return kOk;
}

// --- complete --------------------------------------------------------------

struct CompleteArgs {
    std::string frames;
    std::string mask;
    std::string inpainter = "diffusion";
    std::string command;
    std::string out;
    int blend = 3;
    bool no_rotation = false;
};

completion::MaskSpec parse_mask(const std::string& spec)
{
    if (spec.rfind("band:", 0) == 0) {
        std::size_t used = 0;
        double deg = 0.0;
        try {
            deg = std::stod(spec.substr(5), &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != spec.size() - 5) {
            throw ValidationError("bad band mask '" + spec + "'");
        }
        return completion::MaskSpec::band(geo::deg_to_rad(deg));
    }
    if (spec.rfind("raster:", 0) == 0) {
        return completion::MaskSpec::raster(completion::load_sequence(spec.substr(7)).frames);
    }
    throw ValidationError("mask must be band:<latitude deg> or raster:<dir>");
}

int complete(const CompleteArgs& a)
{
    const completion::FrameSequence seq = completion::load_sequence(a.frames);
    completion::CompletionJob job;
    job.mask = parse_mask(a.mask);
    job.blend_width = a.blend;
    job.use_rotation = !a.no_rotation;
    if (a.inpainter == "external") {
        if (a.command.empty()) {
            throw ValidationError("--inpainter external needs --command");
        }
        job.inpainter = completion::InpainterKind::external;
        job.command = a.command;
    } else if (a.inpainter != "diffusion") {
        throw ValidationError("unknown inpainter '" + a.inpainter + "'");
    }
    const auto out = completion::complete_video(seq.frames, job);
    completion::write_sequence(a.out, seq.names, out);
    std::cout << "completed " << out.size() << " frames\n";
    return kOk;
}

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
    std::string manifest;
    std::string assets;
    std::string script;
    std::string trace;
    std::optional<int> spawn;
};

int simulate(const SimulateArgs& a)
{
    const std::string assets = a.assets.empty() ? fs::path(a.manifest).parent_path().string() : a.assets;
    const nav::World world = nav::World::load(a.manifest, assets);

    // parse the whole script first so a bad line fails before any output
    std::vector<nav::StepInput> inputs;
    std::istringstream script(read_file(a.script));
    std::string line;
    int line_no = 0;
    while (std::getline(script, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            inputs.push_back(nav::step_input_from_json(parse_json(line)));
        } catch (const Error& e) {
            throw ParseError(std::string("script: ") + e.what(), line_no);
        }
    }

    nav::SessionState state = nav::create_session(world, service::format_session_id(1), a.spawn);
    std::string trace = canonical_dump(nav::to_json(nav::snapshot(state, world))) + "\n";
    for (const auto& input : inputs) {
        try {
            const nav::StepResult r = nav::step(state, input, world, input.dt.value_or(nav::kDefaultDt));
            state = r.state;
            trace += canonical_dump(nav::to_json(r)) + "\n";
        } catch (const Error& e) {
            trace += canonical_dump(Json{{"error", {{"code", error_code(e)}, {"message", e.what()}}}}) + "\n";
        }
    }
    write_file(a.trace, trace);
    std::cout << "steps " << inputs.size() << ", final edge " << state.edge_id << " frame " << state.current_frame
              << "\n";
    return kOk;
}

// --- serve -----------------------------------------------------------------

struct ServeArgs {
    std::string manifest;
    std::string assets;
    std::string host = "127.0.0.1";
    int port = 8080;
    double ttl = 300.0;
};

int serve(const ServeArgs& a)
{
    // block termination signals in every thread; a dedicated thread waits for them
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    service::ServiceOptions options;
    options.ttl = std::chrono::milliseconds(static_cast<long long>(a.ttl * 1000.0));
    const auto svc = service::WorldService::open(a.manifest, a.assets, options);
    const int port = svc->bind(a.host, a.port);
    std::cout << "listening on http://" << a.host << ":" << port << std::endl;

    std::thread waiter([&svc, signals] {
        int sig = 0;
        sigwait(&signals, &sig);
        svc->stop();
    });
    svc->run();
    // run() also returns if the server fails; wake the waiter either way
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    std::cout << "stopped" << std::endl;
    return kOk;
}

// --- inspect ---------------------------------------------------------------

struct InspectArgs {
    std::string manifest;
    std::optional<int> edge;
};

void print_edge(const graph::Edge& e)
{
    std::printf("edge %d: %d -> %d  video %s  frames %d..%d (%d)  length %.3f m  reverse %s\n", e.id, e.from, e.to,
                e.video_id.c_str(), e.frame_start, e.frame_end, e.frame_count(), e.length(),
                e.reverse_edge_id ? std::to_string(*e.reverse_edge_id).c_str() : "-");
}

int inspect(const InspectArgs& a)
{
    const graph::WorldGraph g = graph::load_manifest(a.manifest);
    graph::validate(g);
    if (a.edge) {
        const graph::Edge& e = g.edge(*a.edge);
        print_edge(e);
        std::printf("  frames_uri %s\n  walkmap_uri %s\n  video_uri %s\n", e.frames_uri.c_str(),
                    e.walkmap_uri.c_str(), e.video_uri ? e.video_uri->c_str() : "-");
        for (int i = 0; i < e.frame_count(); ++i) {
            std::printf("  %6d  (%.3f, %.3f)  yaw %.4f  s %.4f\n", e.frame_start + i, e.positions[i].x,
                        e.positions[i].y, e.yaw[i], e.arclen[i]);
        }
        return kOk;
    }
    std::printf("nodes %zu, edges %zu\n", g.nodes().size(), g.edges().size());
    for (const auto& n : g.nodes()) {
        std::printf("node %d: (%.3f, %.3f)%s  out [", n.id, n.pos.x, n.pos.y, n.terminal ? " terminal" : "");
        const auto out = g.outgoing(n.id);
        for (std::size_t i = 0; i < out.size(); ++i) {
            std::printf("%s%d", i ? " " : "", out[i]);
        }
        std::printf("]\n");
    }
    for (const auto& e : g.edges()) {
        print_edge(e);
    }
    std::printf("ok\n");
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Walk-through world builder and server for 360-degree street videos"};
    app.require_subcommand(1);

    BuildGraphArgs bg;
    auto* cmd_bg = app.add_subcommand("build-graph", "Build the world manifest from trajectory CSV files");
    cmd_bg->add_option("--trajectories", bg.trajectories, "Directory of <video>.csv files")->required();
    cmd_bg->add_option("--out", bg.out, "Manifest output path")->required();
    cmd_bg->add_option("--config", bg.config, "Config JSON");
    cmd_bg->add_option("--epsilon", bg.epsilon, "Intersection distance (m)");
    cmd_bg->add_option("--min-frames", bg.min_frames, "Shortest edge between two intersections");
    cmd_bg->add_flag("--with-video", bg.with_video, "Reference videos/<video>.mp4 in the manifest");

    BuildMapsArgs bm;
    auto* cmd_bm = app.add_subcommand("build-maps", "Encode per-frame walkability maps from class maps");
    cmd_bm->add_option("--classmaps", bm.classmaps, "Directory of <frame>.png 8-bit class maps")->required();
    cmd_bm->add_option("--classes", bm.classes, "Walkable class names, one per line")->required();
    cmd_bm->add_option("--labels", bm.labels, "Label names by class id (default Cityscapes)");
    cmd_bm->add_option("--out", bm.out, "Walkmap output path")->required();
    cmd_bm->add_option("--downsample", bm.downsample, "Block factor")->check(CLI::PositiveNumber);

    CompleteArgs cp;
    auto* cmd_cp = app.add_subcommand("complete", "Remove the videographer from a frame sequence");
    cmd_cp->add_option("--frames", cp.frames, "Directory of ERP frames (*.png)")->required();
    cmd_cp->add_option("--mask", cp.mask, "band:<latitude deg> or raster:<dir>")->required();
    cmd_cp->add_option("--inpainter", cp.inpainter, "diffusion or external");
    cmd_cp->add_option("--command", cp.command, "External inpainter executable");
    cmd_cp->add_option("--out", cp.out, "Output directory")->required();
    cmd_cp->add_option("--blend", cp.blend, "Blend ring width (px)")->check(CLI::NonNegativeNumber);
    cmd_cp->add_flag("--no-rotation", cp.no_rotation, "Fill the mask in place without recentering");

    SimulateArgs sm;
    auto* cmd_sm = app.add_subcommand("simulate", "Replay a StepInput script through the navigation engine");
    cmd_sm->add_option("--manifest", sm.manifest, "Manifest path")->required();
    cmd_sm->add_option("--assets", sm.assets, "Assets root (default: the manifest's directory)");
    cmd_sm->add_option("--script", sm.script, "One StepInput JSON per line")->required();
    cmd_sm->add_option("--trace", sm.trace, "Trace output path")->required();
    cmd_sm->add_option("--spawn", sm.spawn, "Spawn node id");

    ServeArgs sv;
    auto* cmd_sv = app.add_subcommand("serve", "Serve the world over HTTP");
    cmd_sv->add_option("--manifest", sv.manifest, "Manifest path")->required();
    cmd_sv->add_option("--assets", sv.assets, "Assets root")->required();
    cmd_sv->add_option("--host", sv.host, "Bind address");
    cmd_sv->add_option("--port", sv.port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
    cmd_sv->add_option("--ttl", sv.ttl, "Idle session lifetime (s)")->check(CLI::PositiveNumber);

    InspectArgs in;
    auto* cmd_in = app.add_subcommand("inspect", "Summarize and validate a manifest");
    cmd_in->add_option("--manifest", in.manifest, "Manifest path")->required();
    cmd_in->add_option("--edge", in.edge, "Print one edge in detail");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kOk : kUsage;
    }

    try {
        if (*cmd_bg) {
            return build_graph(bg);
        }
        if (*cmd_bm) {
            return build_maps(bm);
        }
        if (*cmd_cp) {
            return complete(cp);
        }
        if (*cmd_sm) {
            return simulate(sm);
        }
        if (*cmd_sv) {
            return serve(sv);
        }
        if (*cmd_in) {
            return inspect(in);
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const NotFoundError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}

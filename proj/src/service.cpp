#include "rvw/service.hpp"

#include "rvw/error.hpp"

// many viewers connect at once; the library default backlog of 5 drops them
#define CPPHTTPLIB_LISTEN_BACKLOG 128
#include <httplib.h>
#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>

namespace rvw::service {

namespace fs = std::filesystem;
using steady = std::chrono::steady_clock;

std::string gzip_compress(std::string_view data)
{
    z_stream zs{};
    if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
        throw Error("deflateInit2 failed");
    }
    std::string out(deflateBound(&zs, static_cast<uLong>(data.size())) + 32, '\0');
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) {
        throw Error("gzip compression failed");
    }
    out.resize(zs.total_out);
    return out;
}

std::string gzip_decompress(std::string_view data)
{
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 16) != Z_OK) {
        throw Error("inflateInit2 failed");
    }
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    std::string out;
    char buf[16384];
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = reinterpret_cast<Bytef*>(buf);
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw ParseError("gzip: corrupt stream");
        }
        out.append(buf, sizeof(buf) - zs.avail_out);
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw ParseError("gzip: truncated stream");
        }
    }
    inflateEnd(&zs);
    return out;
}

Json to_json(const std::vector<PresenceEntry>& presence)
{
    Json list = Json::array();
    for (const auto& p : presence) {
        list.push_back({{"session_id", p.session_id},
                        {"edge_id", p.edge_id},
                        {"current_frame", p.current_frame},
                        {"avatar_pos", {p.avatar_pos.x, p.avatar_pos.y}},
                        {"avatar_yaw", p.avatar_yaw}});
    }
    return Json{{"sessions", list}};
}

std::string format_session_id(std::uint64_t n)
{
    char id[32];
    std::snprintf(id, sizeof(id), "s%06llu", static_cast<unsigned long long>(n));
    return id;
}

Json asset_links(const graph::Edge& edge)
{
    const std::string base = "/api/edges/" + std::to_string(edge.id);
    return Json{{"edge_id", edge.id},
                {"frames", base + "/frames/{n}"},
                {"walkmap", base + "/walkmap"},
                {"video", edge.video_uri ? Json(base + "/video") : Json(nullptr)}};
}

SessionRegistry::SessionRegistry(const nav::World& world, std::chrono::milliseconds ttl, Clock clock)
    : world_(world), ttl_(ttl), clock_(clock ? std::move(clock) : Clock([] { return steady::now(); }))
{
}

bool SessionRegistry::expired(const Slot& slot, steady::time_point now) const { return now - slot.last_seen > ttl_; }

void SessionRegistry::evict_locked(steady::time_point now)
{
    for (auto it = slots_.begin(); it != slots_.end();) {
        bool stale = false;
        {
            std::lock_guard slot_lock(it->second->mutex);
            stale = expired(*it->second, now);
        }
        it = stale ? slots_.erase(it) : std::next(it);
    }
}

nav::StepResult SessionRegistry::create(std::optional<int> spawn_node)
{
    std::unique_lock lock(mutex_);
    const auto now = clock_();
    evict_locked(now);
    const std::string id = format_session_id(next_id_);
    auto slot = std::make_unique<Slot>();
    slot->state = nav::create_session(world_, id, spawn_node);
    slot->last_seen = now;
    ++next_id_;
    nav::StepResult snapshot = nav::snapshot(slot->state, world_);
    slots_.emplace(id, std::move(slot));
    return snapshot;
}

nav::StepResult SessionRegistry::input(const std::string& session_id, const nav::StepInput& input)
{
    std::shared_lock lock(mutex_);
    const auto it = slots_.find(session_id);
    if (it == slots_.end()) {
        throw NotFoundError("unknown session '" + session_id + "'");
    }
    Slot& slot = *it->second;
    std::lock_guard slot_lock(slot.mutex);
    const auto now = clock_();
    if (expired(slot, now)) {
        throw NotFoundError("session '" + session_id + "' expired");
    }
    slot.last_seen = now;
    nav::StepResult result = nav::step(slot.state, input, world_, input.dt.value_or(nav::kDefaultDt));
    slot.state = result.state;
    return result;
}

nav::SessionState SessionRegistry::state(const std::string& session_id)
{
    std::shared_lock lock(mutex_);
    const auto it = slots_.find(session_id);
    if (it == slots_.end()) {
        throw NotFoundError("unknown session '" + session_id + "'");
    }
    std::lock_guard slot_lock(it->second->mutex);
    if (expired(*it->second, clock_())) {
        throw NotFoundError("session '" + session_id + "' expired");
    }
    return it->second->state;
}

bool SessionRegistry::remove(const std::string& session_id)
{
    std::unique_lock lock(mutex_);
    return slots_.erase(session_id) != 0;
}

std::vector<PresenceEntry> SessionRegistry::presence()
{
    std::unique_lock lock(mutex_);
    evict_locked(clock_());
    std::vector<PresenceEntry> out;
    for (const auto& [id, slot] : slots_) {
        const nav::SessionState& st = slot->state;
        out.push_back({id, st.edge_id, st.current_frame, st.avatar_pos, st.avatar_yaw});
    }
    return out;
}

std::size_t SessionRegistry::evict_expired()
{
    std::unique_lock lock(mutex_);
    const std::size_t before = slots_.size();
    evict_locked(clock_());
    return before - slots_.size();
}

std::size_t SessionRegistry::size()
{
    std::shared_lock lock(mutex_);
    return slots_.size();
}

WorldService::WorldService(nav::World world, std::string assets_root, ServiceOptions options)
    : world_(std::move(world)),
      assets_root_(std::move(assets_root)),
      manifest_text_(graph::manifest_text(world_.graph())),
      registry_(world_, options.ttl, std::move(options.clock)),
      server_(std::make_unique<httplib::Server>())
{
    for (const auto& e : world_.graph().edges()) {
        if (!fs::is_directory(fs::path(assets_root_) / e.frames_uri)) {
            throw NotFoundError("missing asset '" + e.frames_uri + "'");
        }
        if (e.video_uri && !fs::is_regular_file(fs::path(assets_root_) / *e.video_uri)) {
            throw NotFoundError("missing asset '" + *e.video_uri + "'");
        }
        if (walkmap_gz_.count(e.walkmap_uri) == 0) {
            walkmap_gz_.emplace(e.walkmap_uri, gzip_compress(world_.walkmap(e).to_text()));
        }
    }
    routes();
}

WorldService::~WorldService() { stop(); }

std::unique_ptr<WorldService> WorldService::open(const std::string& manifest_path, const std::string& assets_root,
                                                 ServiceOptions options)
{
    auto svc = std::make_unique<WorldService>(nav::World::load(manifest_path, assets_root), assets_root,
                                              std::move(options));
    svc->manifest_text_ = read_file(manifest_path);
    return svc;
}

namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const Json& body)
{
    res.status = status;
    res.set_content(canonical_dump(body), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message)
{
    send_json(res, status, Json{{"error", {{"code", code}, {"message", message}}}});
}

// Runs a handler, mapping library errors onto HTTP statuses.
template <typename F>
void guarded(httplib::Response& res, F&& handler)
{
    try {
        handler();
    } catch (const std::exception& e) {
        const std::string code = error_code(e);
        const int status = code == "bad_request" || code == "invalid" ? 400
                           : code == "not_found"                      ? 404
                           : code == "conflict"                       ? 409
                                                                      : 500;
        send_error(res, status, code, e.what());
    }
}

int path_int(const httplib::Request& req, std::size_t i)
{
    const std::string& text = req.matches[static_cast<long>(i)];
    try {
        std::size_t used = 0;
        const int v = std::stoi(text, &used);
        if (used == text.size()) {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw NotFoundError("bad id '" + text + "'");
}

Json parse_body(const httplib::Request& req)
{
    if (req.body.empty()) {
        return Json::object();
    }
    return parse_json(req.body);
}

}  // namespace

void WorldService::routes()
{
    httplib::Server& svr = *server_;

    svr.Get("/api/manifest", [this](const httplib::Request&, httplib::Response& res) {
        res.status = 200;
        res.set_content(manifest_text_, kJson);
    });

    svr.Get(R"(/api/edges/(-?\d+)/frames/(-?\d+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const graph::Edge& e = world_.graph().edge(path_int(req, 1));
            const int frame = path_int(req, 2);
            if (frame < e.frame_start || frame > e.frame_end) {
                throw NotFoundError("frame " + std::to_string(frame) + " outside edge " + std::to_string(e.id));
            }
            char name[32];
            std::snprintf(name, sizeof(name), "%06d.png", frame);
            const fs::path path = fs::path(assets_root_) / e.frames_uri / name;
            if (!fs::is_regular_file(path)) {
                throw NotFoundError("missing frame '" + e.frames_uri + "/" + name + "'");
            }
            res.status = 200;
            res.set_header("Cache-Control", "public, max-age=31536000, immutable");
            res.set_content(read_file(path.string()), "image/png");
        });
    });

    svr.Get(R"(/api/edges/(-?\d+)/walkmap)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const graph::Edge& e = world_.graph().edge(path_int(req, 1));
            res.status = 200;
            res.set_header("Content-Encoding", "gzip");
            res.set_header("Cache-Control", "public, max-age=31536000, immutable");
            res.set_content(walkmap_gz_.at(e.walkmap_uri), kJson);
        });
    });

    svr.Get(R"(/api/edges/(-?\d+)/video)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const graph::Edge& e = world_.graph().edge(path_int(req, 1));
            if (!e.video_uri) {
                throw NotFoundError("edge " + std::to_string(e.id) + " has no video");
            }
            const fs::path path = fs::path(assets_root_) / *e.video_uri;
            std::error_code ec;
            const auto size = fs::file_size(path, ec);
            if (ec) {
                throw NotFoundError("missing asset '" + *e.video_uri + "'");
            }
            // status left unset so the server applies Range (206 / 416)
            res.set_header("Accept-Ranges", "bytes");
            res.set_content_provider(static_cast<std::size_t>(size), "video/mp4",
                                     [path](std::size_t offset, std::size_t length, httplib::DataSink& sink) {
                                         std::ifstream in(path, std::ios::binary);
                                         in.seekg(static_cast<std::streamoff>(offset));
                                         std::string chunk(std::min<std::size_t>(length, 1 << 16), '\0');
                                         in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
                                         if (in.gcount() <= 0) {
                                             return false;
                                         }
                                         return sink.write(chunk.data(), static_cast<std::size_t>(in.gcount()));
                                     });
        });
    });

    svr.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const Json body = parse_body(req);
            if (!body.is_object()) {
                throw ParseError("request body must be an object");
            }
            std::optional<int> spawn;
            if (body.contains("spawn") && !body["spawn"].is_null()) {
                if (!body["spawn"].is_number_integer()) {
                    throw ParseError("spawn must be a node id");
                }
                spawn = body["spawn"].get<int>();
            }
            const nav::StepResult r = registry_.create(spawn);
            send_json(res, 201,
                      Json{{"session_id", r.state.session_id},
                           {"state", nav::to_json(r.state)},
                           {"camera", nav::to_json(r.camera)},
                           {"preload_hints", r.preload_hints},
                           {"assets", asset_links(world_.graph().edge(r.state.edge_id))}});
        });
    });

    svr.Post(R"(/api/sessions/([^/]+)/input)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const nav::StepInput input = nav::step_input_from_json(parse_body(req));
            const nav::StepResult r = registry_.input(req.matches[1], input);
            Json body = nav::to_json(r);
            if (std::find(r.events.begin(), r.events.end(), nav::Event::edge_changed) != r.events.end()) {
                body["assets"] = asset_links(world_.graph().edge(r.state.edge_id));
            }
            send_json(res, 200, body);
        });
    });

    svr.Get(R"(/api/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const nav::StepResult r = nav::snapshot(registry_.state(req.matches[1]), world_);
            send_json(res, 200, Json{{"session_id", r.state.session_id},
                                     {"state", nav::to_json(r.state)},
                                     {"camera", nav::to_json(r.camera)},
                                     {"preload_hints", r.preload_hints}});
        });
    });

    svr.Delete(R"(/api/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            if (!registry_.remove(req.matches[1])) {
                throw NotFoundError("unknown session '" + std::string(req.matches[1]) + "'");
            }
            res.status = 204;
        });
    });

    svr.Get("/api/presence", [this](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, to_json(registry_.presence())); });
    });

    svr.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty() && res.status == 404) {
            send_error(res, 404, "not_found", "no such endpoint");
        } else if (res.body.empty() && res.status == 416) {
            send_error(res, 416, "range_not_satisfiable", "requested range is outside the resource");
        }
    });
}

int WorldService::bind(const std::string& host, int port)
{
    int bound = 0;
    if (port == 0) {
        bound = server_->bind_to_any_port(host);
    } else if (server_->bind_to_port(host, port)) {
        bound = port;
    } else {
        bound = -1;
    }
    if (bound <= 0) {
        throw Error("cannot bind " + host + ":" + std::to_string(port));
    }
    return bound;
}

void WorldService::run() { server_->listen_after_bind(); }

int WorldService::start(const std::string& host, int port)
{
    const int bound = bind(host, port);
    thread_ = std::thread([this] { run(); });
    server_->wait_until_ready();
    return bound;
}

void WorldService::stop()
{
    if (server_) {
        server_->stop();
    }
    if (thread_.joinable()) {
        thread_.join();
    }
}

}  // namespace rvw::service

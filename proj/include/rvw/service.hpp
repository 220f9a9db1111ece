#pragma once

#include "rvw/navigation.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace rvw::service {

using Clock = std::function<std::chrono::steady_clock::time_point()>;

struct PresenceEntry {
    std::string session_id;
    int edge_id = 0;
    int current_frame = 0;
    graph::Point2 avatar_pos;
    double avatar_yaw = 0.0;
};

Json to_json(const std::vector<PresenceEntry>& presence);

// Session ids are issued sequentially: s000001, s000002, ...
std::string format_session_id(std::uint64_t n);

// Live navigation sessions. Inputs to one session are serialized by its own
// mutex; the registry lock is held shared while stepping and exclusively for
// creation, eviction and presence snapshots.
class SessionRegistry {
public:
    SessionRegistry(const nav::World& world, std::chrono::milliseconds ttl, Clock clock);

    // NotFoundError for an unknown spawn node.
    nav::StepResult create(std::optional<int> spawn_node);
    // NotFoundError for unknown or expired sessions.
    nav::StepResult input(const std::string& session_id, const nav::StepInput& input);
    nav::SessionState state(const std::string& session_id);
    bool remove(const std::string& session_id);

    std::vector<PresenceEntry> presence();
    std::size_t evict_expired();
    std::size_t size();

private:
    struct Slot {
        std::mutex mutex;
        nav::SessionState state;
        std::chrono::steady_clock::time_point last_seen;
    };

    bool expired(const Slot& slot, std::chrono::steady_clock::time_point now) const;
    void evict_locked(std::chrono::steady_clock::time_point now);

    const nav::World& world_;
    std::chrono::milliseconds ttl_;
    Clock clock_;
    std::shared_mutex mutex_;
    std::map<std::string, std::unique_ptr<Slot>> slots_;
    std::uint64_t next_id_ = 1;
};

struct ServiceOptions {
    std::chrono::milliseconds ttl{std::chrono::seconds(300)};
    Clock clock;  // steady_clock::now when empty
};

class WorldService {
public:
    // Checks that every referenced frame directory and video exists below
    // `assets_root`; NotFoundError names the missing URI.
    WorldService(nav::World world, std::string assets_root, ServiceOptions options = {});
    ~WorldService();

    WorldService(const WorldService&) = delete;
    WorldService& operator=(const WorldService&) = delete;

    // The manifest is served byte-for-byte as read from `manifest_path`.
    static std::unique_ptr<WorldService> open(const std::string& manifest_path, const std::string& assets_root,
                                              ServiceOptions options = {});

    // Binds the listening socket; port 0 picks a free port. Returns the port.
    int bind(const std::string& host, int port);
    // Serves until stop(); call after bind().
    void run();
    // bind() + run() on a background thread.
    int start(const std::string& host, int port);
    void stop();

    const nav::World& world() const { return world_; }
    SessionRegistry& sessions() { return registry_; }
    const std::string& manifest_text() const { return manifest_text_; }

private:
    void routes();

    nav::World world_;
    std::string assets_root_;
    std::string manifest_text_;
    std::map<std::string, std::string> walkmap_gz_;  // by walkmap_uri
    SessionRegistry registry_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

std::string gzip_compress(std::string_view data);
std::string gzip_decompress(std::string_view data);

// Relative API paths of an edge's assets.
Json asset_links(const graph::Edge& edge);

}  // namespace rvw::service

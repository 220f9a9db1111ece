#pragma once

#include "rvw/canonical_json.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace rvw::walk {

// Names of the segmentation classes, indexed by class id.
class LabelSet {
public:
    explicit LabelSet(std::vector<std::string> names);

    // Cityscapes label ids (0 unlabeled ... 33 bicycle), the label space of the
    // street-scene segmentation models this pipeline consumes.
    static LabelSet cityscapes();
    // One name per line; blank lines and '#' comments skipped.
    static LabelSet parse(const std::string& text);

    std::size_t size() const { return names_.size(); }
    const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
    // Throws ValidationError for an unknown name.
    int id(const std::string& name) const;
    std::set<int> ids(const std::vector<std::string>& names) const;

private:
    std::vector<std::string> names_;
};

// Whitelist file: one class name per line, '#' comments.
std::vector<std::string> parse_class_list(const std::string& text);

struct ClassMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> classes;  // row-major
};

// 0 = non-walkable, 1 = walkable; row-major.
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    friend bool operator==(const Raster&, const Raster&) = default;
};

Raster binarize(const ClassMap& cm, const std::set<int>& walkable, std::size_t label_count);

// Flattened row-major runs alternating 0-valued / 1-valued, starting with a
// (possibly empty) 0-valued run.
using Runs = std::vector<std::uint32_t>;

Runs rle_encode(const Raster& raster);
Raster rle_decode(std::span<const std::uint32_t> runs, int width, int height);

// Majority vote over factor x factor blocks; ties are non-walkable.
Raster downsample(const Raster& raster, int factor);

// Per-frame walkability rasters of one video, stored as runs. Immutable once
// built; the per-frame prefix index is created on first query.
class WalkMap {
public:
    WalkMap(int width, int height);
    WalkMap(WalkMap&&) noexcept = default;
    WalkMap& operator=(WalkMap&&) noexcept = default;

    int width() const { return width_; }
    int height() const { return height_; }

    void add_frame(int frame, Runs runs);
    void add_frame(int frame, const Raster& raster);

    bool has_frame(int frame) const { return frames_.count(frame) != 0; }
    std::vector<int> frame_indices() const;
    const Runs& runs(int frame) const;
    Raster decode(int frame) const;

    // Pixel lookup at the foot's latitude/longitude; NotFoundError for a
    // missing frame.
    bool is_walkable(int frame, double lat, double lon) const;
    // Raster cell used for (lat, lon).
    std::pair<int, int> cell(double lat, double lon) const;

    Json to_json() const;
    std::string to_text() const;
    static WalkMap from_json(const Json& j);
    static WalkMap load(const std::string& path);

private:
    struct FrameData {
        Runs runs;
        mutable std::once_flag index_once;
        mutable std::vector<std::uint64_t> run_ends;  // cumulative, built lazily
    };
    const FrameData& frame_data(int frame) const;

    int width_;
    int height_;
    std::map<int, std::unique_ptr<FrameData>> frames_;
};

struct WalkMapStats {
    std::size_t frames = 0;
    std::size_t raw_bytes = 0;      // dense per-pixel JSON
    std::size_t encoded_bytes = 0;  // run-length JSON
    double ratio = 0.0;             // encoded / raw
};

// Dense form: {"frames":{"<frame>":[p0,p1,...]},"h":h,"w":w}, same serializer.
std::string dense_json_text(const WalkMap& wm);
WalkMapStats walkmap_stats(const WalkMap& wm);

}  // namespace rvw::walk

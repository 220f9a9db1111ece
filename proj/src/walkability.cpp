#include "rvw/walkability.hpp"

#include "rvw/error.hpp"
#include "rvw/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rvw::walk {

LabelSet::LabelSet(std::vector<std::string> names) : names_(std::move(names))
{
    if (names_.empty()) {
        throw ValidationError("label set is empty");
    }
}

LabelSet LabelSet::cityscapes()
{
    return LabelSet({"unlabeled", "ego vehicle", "rectification border", "out of roi", "static", "dynamic", "ground",
                     "road", "sidewalk", "parking", "rail track", "building", "wall", "fence", "guard rail", "bridge",
                     "tunnel", "pole", "polegroup", "traffic light", "traffic sign", "vegetation", "terrain", "sky",
                     "person", "rider", "car", "truck", "bus", "caravan", "trailer", "train", "motorcycle",
                     "bicycle"});
}

std::vector<std::string> parse_class_list(const std::string& text)
{
    std::vector<std::string> names;
    std::stringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        const auto last = line.find_last_not_of(" \t\r");
        names.push_back(line.substr(first, last - first + 1));
    }
    return names;
}

LabelSet LabelSet::parse(const std::string& text) { return LabelSet(parse_class_list(text)); }

int LabelSet::id(const std::string& name) const
{
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) {
        throw ValidationError("unknown class '" + name + "'");
    }
    return static_cast<int>(it - names_.begin());
}

std::set<int> LabelSet::ids(const std::vector<std::string>& names) const
{
    std::set<int> out;
    for (const auto& n : names) {
        out.insert(id(n));
    }
    return out;
}

Raster binarize(const ClassMap& cm, const std::set<int>& walkable, std::size_t label_count)
{
    if (walkable.empty()) {
        throw ValidationError("walkable class whitelist is empty");
    }
    if (cm.width <= 0 || cm.height <= 0 ||
        cm.classes.size() != static_cast<std::size_t>(cm.width) * static_cast<std::size_t>(cm.height)) {
        throw ValidationError("class map dimensions are inconsistent");
    }
    std::vector<std::uint8_t> lut(label_count, 0);
    for (const int c : walkable) {
        if (c < 0 || static_cast<std::size_t>(c) >= label_count) {
            throw ValidationError("whitelisted class " + std::to_string(c) + " outside the label set");
        }
        lut[static_cast<std::size_t>(c)] = 1;
    }
    Raster out{cm.width, cm.height, std::vector<std::uint8_t>(cm.classes.size())};
    for (std::size_t i = 0; i < cm.classes.size(); ++i) {
        const std::size_t c = cm.classes[i];
        if (c >= label_count) {
            throw ValidationError("class index " + std::to_string(c) + " at pixel " + std::to_string(i) +
                                  " outside the label set of size " + std::to_string(label_count));
        }
        out.pixels[i] = lut[c];
    }
    return out;
}

Runs rle_encode(const Raster& raster)
{
    if (raster.pixels.empty()) {
        throw ValidationError("rle_encode: empty raster");
    }
    Runs runs;
    std::uint8_t current = 0;
    std::uint32_t length = 0;
    for (const std::uint8_t p : raster.pixels) {
        const std::uint8_t bit = p ? 1 : 0;
        if (bit != current) {
            runs.push_back(length);  // a leading 0-length run when the first pixel is 1
            current = bit;
            length = 0;
        }
        ++length;
    }
    runs.push_back(length);
    return runs;
}

Raster rle_decode(std::span<const std::uint32_t> runs, int width, int height)
{
    if (width <= 0 || height <= 0) {
        throw ValidationError("rle_decode: dimensions must be positive");
    }
    const std::uint64_t total = static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (runs[i] == 0 && i != 0) {
            throw ValidationError("rle_decode: empty run at position " + std::to_string(i));
        }
        sum += runs[i];
    }
    if (sum != total) {
        throw ValidationError("rle_decode: runs cover " + std::to_string(sum) + " pixels, expected " +
                              std::to_string(total));
    }
    Raster out{width, height, {}};
    out.pixels.reserve(total);
    for (std::size_t i = 0; i < runs.size(); ++i) {
        out.pixels.insert(out.pixels.end(), runs[i], static_cast<std::uint8_t>(i % 2));
    }
    return out;
}

Raster downsample(const Raster& raster, int factor)
{
    if (factor < 1) {
        throw ValidationError("downsample factor must be >= 1");
    }
    if (factor == 1) {
        return raster;
    }
    const int w = raster.width / factor;
    const int h = raster.height / factor;
    if (w < 1 || h < 1) {
        throw ValidationError("downsample factor larger than the raster");
    }
    Raster out{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h)};
    const int block = factor * factor;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int ones = 0;
            for (int dy = 0; dy < factor; ++dy) {
                for (int dx = 0; dx < factor; ++dx) {
                    ones += raster.pixels[static_cast<std::size_t>(y * factor + dy) * raster.width + x * factor + dx];
                }
            }
            out.pixels[static_cast<std::size_t>(y) * w + x] = 2 * ones > block ? 1 : 0;
        }
    }
    return out;
}

WalkMap::WalkMap(int width, int height) : width_(width), height_(height)
{
    if (width <= 0 || height <= 0) {
        throw ValidationError("walkmap dimensions must be positive");
    }
}

void WalkMap::add_frame(int frame, Runs runs)
{
    // decoding validates the sum and the alternation
    (void)rle_decode(runs, width_, height_);
    auto data = std::make_unique<FrameData>();
    data->runs = std::move(runs);
    if (!frames_.emplace(frame, std::move(data)).second) {
        throw ValidationError("walkmap already has frame " + std::to_string(frame));
    }
}

void WalkMap::add_frame(int frame, const Raster& raster)
{
    if (raster.width != width_ || raster.height != height_) {
        throw ValidationError("raster dimensions differ from the walkmap");
    }
    add_frame(frame, rle_encode(raster));
}

std::vector<int> WalkMap::frame_indices() const
{
    std::vector<int> out;
    for (const auto& [frame, data] : frames_) {
        out.push_back(frame);
    }
    return out;
}

const WalkMap::FrameData& WalkMap::frame_data(int frame) const
{
    const auto it = frames_.find(frame);
    if (it == frames_.end()) {
        throw NotFoundError("walkmap has no frame " + std::to_string(frame));
    }
    return *it->second;
}

const Runs& WalkMap::runs(int frame) const { return frame_data(frame).runs; }

Raster WalkMap::decode(int frame) const { return rle_decode(runs(frame), width_, height_); }

std::pair<int, int> WalkMap::cell(double lat, double lon) const
{
    const double pi = geo::kPi;
    const auto u_raw = static_cast<long long>(std::floor((lon + pi) / (2.0 * pi) * width_));
    long long u = u_raw % width_;
    if (u < 0) {
        u += width_;
    }
    const auto v_raw = static_cast<long long>(std::floor((pi / 2.0 - lat) / pi * height_));
    const long long v = std::clamp<long long>(v_raw, 0, height_ - 1);
    return {static_cast<int>(u), static_cast<int>(v)};
}

bool WalkMap::is_walkable(int frame, double lat, double lon) const
{
    if (!std::isfinite(lat) || !std::isfinite(lon)) {
        throw ValidationError("is_walkable: non-finite angle");
    }
    const FrameData& data = frame_data(frame);
    std::call_once(data.index_once, [&data] {
        data.run_ends.resize(data.runs.size());
        std::uint64_t end = 0;
        for (std::size_t i = 0; i < data.runs.size(); ++i) {
            end += data.runs[i];
            data.run_ends[i] = end;
        }
    });
    const auto [u, v] = cell(lat, lon);
    const std::uint64_t pos = static_cast<std::uint64_t>(v) * width_ + u;
    // first run whose end lies beyond pos
    const auto it = std::upper_bound(data.run_ends.begin(), data.run_ends.end(), pos);
    return (it - data.run_ends.begin()) % 2 == 1;
}

Json WalkMap::to_json() const
{
    Json frames = Json::object();
    for (const auto& [frame, data] : frames_) {
        frames[std::to_string(frame)] = data->runs;
    }
    return Json{{"w", width_}, {"h", height_}, {"frames", frames}};
}

std::string WalkMap::to_text() const { return canonical_dump(to_json()); }

WalkMap WalkMap::from_json(const Json& j)
{
    try {
        WalkMap wm(j.at("w").get<int>(), j.at("h").get<int>());
        for (auto it = j.at("frames").begin(); it != j.at("frames").end(); ++it) {
            std::size_t consumed = 0;
            const int frame = std::stoi(it.key(), &consumed);
            if (consumed != it.key().size()) {
                throw ParseError("walkmap: bad frame key '" + it.key() + "'");
            }
            wm.add_frame(frame, it.value().get<Runs>());
        }
        return wm;
    } catch (const Json::exception& e) {
        throw ParseError(std::string("walkmap: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw ParseError("walkmap: frame keys must be integers");
    } catch (const std::out_of_range&) {
        throw ParseError("walkmap: frame key out of range");
    }
}

WalkMap WalkMap::load(const std::string& path) { return from_json(parse_json(read_file(path))); }

std::string dense_json_text(const WalkMap& wm)
{
    Json frames = Json::object();
    for (const int f : wm.frame_indices()) {
        frames[std::to_string(f)] = wm.decode(f).pixels;
    }
    return canonical_dump(Json{{"w", wm.width()}, {"h", wm.height()}, {"frames", frames}});
}

WalkMapStats walkmap_stats(const WalkMap& wm)
{
    WalkMapStats s;
    s.frames = wm.frame_indices().size();
    s.raw_bytes = dense_json_text(wm).size();
    s.encoded_bytes = wm.to_text().size();
    s.ratio = static_cast<double>(s.encoded_bytes) / static_cast<double>(s.raw_bytes);
    return s;
}

}  // namespace rvw::walk

#include "rvw/completion.hpp"

#include "rvw/canonical_json.hpp"
#include "rvw/error.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>

extern char** environ;

namespace rvw::completion {

namespace fs = std::filesystem;

MaskSpec MaskSpec::band(double lat_top)
{
    MaskSpec spec;
    spec.lat_top_ = lat_top;
    return spec;
}

MaskSpec MaskSpec::raster(std::vector<ErpImage> masks)
{
    MaskSpec spec;
    spec.rasters_ = std::move(masks);
    return spec;
}

void MaskSpec::validate(std::size_t frame_count, int w, int h) const
{
    if (lat_top_) {
        if (!(*lat_top_ > -geo::kPi / 2.0) || !(*lat_top_ < 0.0)) {
            throw ValidationError("band mask latitude must be in (-90, 0) degrees");
        }
        return;
    }
    if (rasters_.size() != frame_count) {
        throw ValidationError("expected " + std::to_string(frame_count) + " masks, got " +
                              std::to_string(rasters_.size()));
    }
    for (const auto& m : rasters_) {
        if (m.width != w || m.height != h || m.channels != 1) {
            throw ValidationError("mask dimensions differ from the frames");
        }
    }
}

ErpImage band_mask(int w, int h, double lat_top)
{
    ErpImage mask(w, h, 1);
    for (int y = 0; y < h; ++y) {
        const double lat = geo::kPi / 2.0 - geo::kPi * (y + 0.5) / h;
        if (lat <= lat_top) {
            std::fill_n(mask.data.begin() + static_cast<long>(mask.index(0, y)), w, std::uint8_t{255});
        }
    }
    return mask;
}

ErpImage MaskSpec::mask_for(std::size_t i, int w, int h) const
{
    if (lat_top_) {
        return band_mask(w, h, *lat_top_);
    }
    return rasters_.at(i);
}

geo::Direction mask_centroid(const ErpImage& mask)
{
    geo::Vec3 sum = geo::Vec3::Zero();
    std::size_t count = 0;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (is_masked(mask, x, y)) {
                sum += geo::pixel_to_dir({static_cast<double>(x), static_cast<double>(y)}, mask.width, mask.height).vec();
                ++count;
            }
        }
    }
    if (count == 0) {
        throw ValidationError("mask_centroid: mask is empty");
    }
    if (sum.norm() < 1e-9 * static_cast<double>(count)) {
        throw ValidationError("mask_centroid: mask directions cancel out");
    }
    return geo::Direction::from_vector(sum);
}

ErpImage dilate(const ErpImage& mask, int radius)
{
    ErpImage out = mask;
    const int w = mask.width;
    const int h = mask.height;
    for (int step = 0; step < radius; ++step) {
        const ErpImage src = out;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (is_masked(src, x, y)) {
                    continue;
                }
                bool hit = false;
                for (int dy = -1; dy <= 1 && !hit; ++dy) {
                    const int yy = y + dy;
                    if (yy < 0 || yy >= h) {
                        continue;
                    }
                    for (int dx = -1; dx <= 1 && !hit; ++dx) {
                        hit = is_masked(src, (x + dx + w) % w, yy);
                    }
                }
                if (hit) {
                    out.at(x, y) = 255;
                }
            }
        }
    }
    return out;
}

namespace {

void check_sequence(const std::vector<ErpImage>& frames, const std::vector<ErpImage>& masks)
{
    if (frames.empty()) {
        throw ValidationError("empty frame sequence");
    }
    if (masks.size() != frames.size()) {
        throw ValidationError("frame and mask counts differ");
    }
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (frames[i].empty() || frames[i].width != frames[0].width || frames[i].height != frames[0].height ||
            frames[i].channels != frames[0].channels) {
            throw ValidationError("frame " + std::to_string(i) + " has inconsistent dimensions");
        }
        if (masks[i].width != frames[0].width || masks[i].height != frames[0].height || masks[i].channels != 1) {
            throw ValidationError("mask " + std::to_string(i) + " does not match the frame dimensions");
        }
    }
}

}  // namespace

Recentered recenter(const std::vector<ErpImage>& frames, const std::vector<ErpImage>& masks, Interp interp)
{
    check_sequence(frames, masks);
    Recentered out;
    out.rotation = geo::rotation_to_center(mask_centroid(masks.front()));
    for (std::size_t i = 0; i < frames.size(); ++i) {
        out.frames.push_back(warp_erp(frames[i], out.rotation, interp));
        out.masks.push_back(dilate(warp_erp(masks[i], out.rotation, Interp::nearest), 1));
    }
    return out;
}

ErpImage inpaint_diffusion(const ErpImage& frame, const ErpImage& mask, int max_iters, double tol)
{
    if (frame.empty() || mask.width != frame.width || mask.height != frame.height || mask.channels != 1) {
        throw ValidationError("inpaint_diffusion: mask does not match the frame");
    }
    const int w = frame.width;
    const int h = frame.height;
    const int channels = frame.channels;

    std::vector<int> holes;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (is_masked(mask, x, y)) {
                holes.push_back(y * w + x);
            }
        }
    }
    if (holes.size() == static_cast<std::size_t>(w) * h) {
        throw ValidationError("inpaint_diffusion: mask covers the entire frame");
    }
    if (holes.empty()) {
        return frame;
    }

    std::vector<double> values(frame.data.begin(), frame.data.end());

    // Start from the mean of the known pixels bordering the hole.
    std::vector<double> seed(static_cast<std::size_t>(channels), 0.0);
    std::size_t seed_count = 0;
    for (const int p : holes) {
        const int x = p % w;
        const int y = p / w;
        const int nx[4] = {(x + w - 1) % w, (x + 1) % w, x, x};
        const int ny[4] = {y, y, y - 1, y + 1};
        for (int k = 0; k < 4; ++k) {
            if (ny[k] < 0 || ny[k] >= h || is_masked(mask, nx[k], ny[k])) {
                continue;
            }
            for (int c = 0; c < channels; ++c) {
                seed[static_cast<std::size_t>(c)] += frame.at(nx[k], ny[k], c);
            }
            ++seed_count;
        }
    }
    for (const int p : holes) {
        for (int c = 0; c < channels; ++c) {
            values[static_cast<std::size_t>(p) * channels + c] = seed[static_cast<std::size_t>(c)] / static_cast<double>(seed_count);
        }
    }

    constexpr double kOmega = 1.9;
    for (int iter = 0; iter < max_iters; ++iter) {
        double max_change = 0.0;
        for (const int p : holes) {
            const int x = p % w;
            const int y = p / w;
            int neighbors[4];
            int n = 0;
            neighbors[n++] = y * w + (x + w - 1) % w;
            neighbors[n++] = y * w + (x + 1) % w;
            if (y > 0) {
                neighbors[n++] = p - w;
            }
            if (y + 1 < h) {
                neighbors[n++] = p + w;
            }
            for (int c = 0; c < channels; ++c) {
                double sum = 0.0;
                for (int k = 0; k < n; ++k) {
                    sum += values[static_cast<std::size_t>(neighbors[k]) * channels + c];
                }
                double& v = values[static_cast<std::size_t>(p) * channels + c];
                const double delta = kOmega * (sum / n - v);
                v += delta;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        if (max_change < tol) {
            break;
        }
    }

    ErpImage out = frame;
    for (const int p : holes) {
        for (int c = 0; c < channels; ++c) {
            const double v = values[static_cast<std::size_t>(p) * channels + c];
            out.data[static_cast<std::size_t>(p) * channels + c] =
                static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
    return out;
}

namespace {

std::string frame_name(std::size_t i)
{
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%06zu.png", i);
    return buffer;
}

std::string tail(const std::string& text, std::size_t max_chars)
{
    return text.size() <= max_chars ? text : "..." + text.substr(text.size() - max_chars);
}

// Removes the directory on scope exit when it was created here.
struct ScratchDir {
    fs::path path;
    bool owned = false;
    ~ScratchDir()
    {
        if (owned) {
            std::error_code ec;
            fs::remove_all(path, ec);
        }
    }
};

}  // namespace

std::vector<ErpImage> inpaint_external(const std::vector<ErpImage>& frames, const std::vector<ErpImage>& masks,
                                       const std::string& command, const std::string& work_dir)
{
    check_sequence(frames, masks);
    if (command.empty()) {
        throw ValidationError("external inpainter command is empty");
    }
    ScratchDir scratch;
    if (work_dir.empty()) {
        std::string pattern = (fs::temp_directory_path() / "rvw-inpaint-XXXXXX").string();
        if (!mkdtemp(pattern.data())) {
            throw Error("cannot create a temporary directory");
        }
        scratch.path = pattern;
        scratch.owned = true;
    } else {
        scratch.path = work_dir;
    }
    const fs::path in_frames = scratch.path / "in_frames";
    const fs::path in_masks = scratch.path / "in_masks";
    const fs::path out_frames = scratch.path / "out_frames";
    const fs::path log_path = scratch.path / "inpainter.log";
    for (const auto& dir : {in_frames, in_masks, out_frames}) {
        fs::create_directories(dir);
    }
    for (std::size_t i = 0; i < frames.size(); ++i) {
        write_png((in_frames / frame_name(i)).string(), frames[i]);
        write_png((in_masks / frame_name(i)).string(), masks[i]);
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
    std::vector<std::string> args{command, in_frames.string(), in_masks.string(), out_frames.string()};
    std::vector<char*> argv;
    for (auto& a : args) {
        argv.push_back(a.data());
    }
    argv.push_back(nullptr);
    pid_t pid = 0;
    const int spawn_rc = posix_spawnp(&pid, command.c_str(), &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (spawn_rc != 0) {
        throw Error("cannot start external inpainter '" + command + "': " + std::strerror(spawn_rc));
    }
    int status = 0;
    while (waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) {
            throw Error("waitpid failed for external inpainter");
        }
    }
    std::string log;
    try {
        log = read_file(log_path.string());
    } catch (const Error&) {
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
        throw Error("external inpainter exited with code " + std::to_string(code) + ": " + tail(log, 2000));
    }

    std::vector<ErpImage> out;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const fs::path file = out_frames / frame_name(i);
        if (!fs::exists(file)) {
            throw Error("external inpainter produced no " + file.filename().string() + ": " + tail(log, 2000));
        }
        ErpImage img = read_png(file.string());
        if (img.width != frames[i].width || img.height != frames[i].height || img.channels != frames[i].channels) {
            throw ValidationError("external inpainter dimension mismatch on " + file.filename().string() + ": got " +
                                  std::to_string(img.width) + "x" + std::to_string(img.height) + "x" +
                                  std::to_string(img.channels) + ", expected " + std::to_string(frames[i].width) +
                                  "x" + std::to_string(frames[i].height) + "x" + std::to_string(frames[i].channels));
        }
        out.push_back(std::move(img));
    }
    return out;
}

std::vector<ErpImage> complete_video(const std::vector<ErpImage>& frames, const CompletionJob& job)
{
    if (frames.empty()) {
        throw ValidationError("complete_video: no frames");
    }
    const int w = frames.front().width;
    const int h = frames.front().height;
    job.mask.validate(frames.size(), w, h);
    if (job.blend_width < 0) {
        throw ValidationError("blend width must be >= 0");
    }
    std::vector<ErpImage> masks;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        masks.push_back(job.mask.mask_for(i, w, h));
    }

    Recentered work;
    if (job.use_rotation) {
        work = recenter(frames, masks);
    } else {
        check_sequence(frames, masks);
        work.frames = frames;
        for (const auto& m : masks) {
            work.masks.push_back(dilate(m, 1));
        }
    }

    std::vector<ErpImage> filled;
    if (job.inpainter == InpainterKind::external) {
        filled = inpaint_external(work.frames, work.masks, job.command);
    } else {
        for (std::size_t i = 0; i < frames.size(); ++i) {
            filled.push_back(inpaint_diffusion(work.frames[i], work.masks[i], job.max_iters, job.tol));
        }
    }

    const geo::Rotation back = work.rotation.inverse();
    std::vector<ErpImage> out;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const ErpImage restored = job.use_rotation ? warp_erp(filled[i], back, Interp::bilinear) : filled[i];
        const ErpImage region = dilate(masks[i], 1);
        ErpImage result = frames[i];
        // ring k holds pixels at chessboard distance k from the region
        ErpImage reached = region;
        for (int k = 0; k <= job.blend_width; ++k) {
            const ErpImage next = k == 0 ? region : dilate(reached, 1);
            const double alpha = 1.0 - static_cast<double>(k) / (job.blend_width + 1);
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const bool in_ring = k == 0 ? is_masked(region, x, y)
                                                : is_masked(next, x, y) && !is_masked(reached, x, y);
                    if (!in_ring) {
                        continue;
                    }
                    for (int c = 0; c < result.channels; ++c) {
                        const double v = alpha * restored.at(x, y, c) + (1.0 - alpha) * frames[i].at(x, y, c);
                        result.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
                    }
                }
            }
            reached = next;
        }
        out.push_back(std::move(result));
    }
    return out;
}

FrameSequence load_sequence(const std::string& dir)
{
    if (!fs::is_directory(dir)) {
        throw NotFoundError("not a directory: " + dir);
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    FrameSequence seq;
    for (const auto& f : files) {
        seq.names.push_back(f.filename().string());
        seq.frames.push_back(read_png(f.string()));
    }
    if (seq.frames.empty()) {
        throw NotFoundError("no PNG frames in " + dir);
    }
    return seq;
}

void write_sequence(const std::string& dir, const std::vector<std::string>& names, const std::vector<ErpImage>& frames)
{
    fs::create_directories(dir);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        write_png((fs::path(dir) / names.at(i)).string(), frames[i]);
    }
}

}  // namespace rvw::completion

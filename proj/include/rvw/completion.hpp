#pragma once

#include "rvw/geometry.hpp"
#include "rvw/image.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

// Videographer removal: rotate the masked region to the image center, fill it,
// rotate back and composite only the masked pixels.
namespace rvw::completion {

// Masks are single-channel images; any value >= 128 marks a pixel to fill.
inline bool is_masked(const ErpImage& mask, int x, int y) { return mask.at(x, y) >= 128; }

class MaskSpec {
public:
    // Every pixel whose center latitude is <= lat_top (radians, in (-pi/2, 0)).
    static MaskSpec band(double lat_top);
    // One mask per frame, matching the frame dimensions.
    static MaskSpec raster(std::vector<ErpImage> masks);

    bool is_band() const { return lat_top_.has_value(); }
    double lat_top() const { return *lat_top_; }

    // Mask for frame `i` of a w x h sequence.
    ErpImage mask_for(std::size_t i, int w, int h) const;
    void validate(std::size_t frame_count, int w, int h) const;

private:
    std::optional<double> lat_top_;
    std::vector<ErpImage> rasters_;
};

ErpImage band_mask(int w, int h, double lat_top);

// Normalized sum of the directions of all masked pixel centers.
geo::Direction mask_centroid(const ErpImage& mask);

// Chessboard dilation by `radius` pixels, wrapping in longitude.
ErpImage dilate(const ErpImage& mask, int radius);

struct Recentered {
    std::vector<ErpImage> frames;
    std::vector<ErpImage> masks;  // nearest-neighbor warped, dilated by one pixel
    geo::Rotation rotation;       // maps the first mask's centroid to forward
};

// One rotation for the whole sequence, taken from the first frame's mask.
Recentered recenter(const std::vector<ErpImage>& frames, const std::vector<ErpImage>& masks,
                    Interp interp = Interp::bilinear);

// Harmonic fill of the masked pixels by successive over-relaxation of the
// four-neighbor average (longitude wraps). Stops when the largest per-sweep
// change drops below `tol` (8-bit units) or after `max_iters` sweeps.
ErpImage inpaint_diffusion(const ErpImage& frame, const ErpImage& mask, int max_iters = 20000, double tol = 1e-3);

// Runs `command <in_frames_dir> <in_masks_dir> <out_frames_dir>` on the
// sequence written as %06d.png files and reads the completed frames back.
// `work_dir` empty means a fresh temporary directory, removed afterwards.
std::vector<ErpImage> inpaint_external(const std::vector<ErpImage>& frames, const std::vector<ErpImage>& masks,
                                       const std::string& command, const std::string& work_dir = {});

enum class InpainterKind { diffusion, external };

struct CompletionJob {
    MaskSpec mask = MaskSpec::band(-1.0);
    InpainterKind inpainter = InpainterKind::diffusion;
    std::string command;  // external inpainter executable
    int blend_width = 3;  // px
    int max_iters = 20000;
    double tol = 1e-3;
    bool use_rotation = true;  // false fills the mask in place, for comparison
};

std::vector<ErpImage> complete_video(const std::vector<ErpImage>& frames, const CompletionJob& job);

// Frame sequences on disk: every *.png in `dir`, sorted by file name.
struct FrameSequence {
    std::vector<std::string> names;
    std::vector<ErpImage> frames;
};
FrameSequence load_sequence(const std::string& dir);
void write_sequence(const std::string& dir, const std::vector<std::string>& names, const std::vector<ErpImage>& frames);

}  // namespace rvw::completion

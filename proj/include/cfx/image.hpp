#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cfx/tensor.hpp"

namespace cfx {

// Grayscale image with intensities in [0,1]. Also used for soft masks.
struct Grid {
    int h = 0, w = 0;
    std::vector<double> px;

    Grid() = default;
    Grid(int h_, int w_, double fill = 0.0) : h(h_), w(w_), px(static_cast<size_t>(h_) * w_, fill) {}

    double& at(int i, int j) { return px[static_cast<size_t>(i) * w + j]; }
    double at(int i, int j) const { return px[static_cast<size_t>(i) * w + j]; }
    size_t numel() const { return px.size(); }

    Tensor to_tensor() const { return Tensor({1, h, w}, px); }          // (1,H,W)
    Tensor to_tensor_hw() const { return Tensor({h, w}, px); }          // (H,W)
    static Grid from_tensor(const Tensor& t);                           // accepts (H,W) or (1,H,W)
};

using SoftMask = Grid;

// Binary mask; foreground pixels are 1.
struct BinaryMask {
    int h = 0, w = 0;
    std::vector<uint8_t> fg;

    BinaryMask() = default;
    BinaryMask(int h_, int w_, uint8_t fill = 0) : h(h_), w(w_), fg(static_cast<size_t>(h_) * w_, fill) {}

    uint8_t& at(int i, int j) { return fg[static_cast<size_t>(i) * w + j]; }
    uint8_t at(int i, int j) const { return fg[static_cast<size_t>(i) * w + j]; }
    size_t area() const;
    bool empty_fg() const { return area() == 0; }
    Tensor to_tensor_hw() const;
};

BinaryMask threshold_ge(const Grid& g, double t);
BinaryMask dilate(const BinaryMask& m, int radius);  // 8-neighbourhood chebyshev dilation
BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);
bool masks_intersect(const BinaryMask& a, const BinaryMask& b);

// Quantize to the 16-bit grid used by the PNG files, so in-memory pixels and
// files round-trip bit exactly.
void quantize16(Grid& g);

// ---- PNG I/O ----
void save_png16(const std::filesystem::path& path, const Grid& img);
Grid load_png16(const std::filesystem::path& path);
void save_mask_png(const std::filesystem::path& path, const BinaryMask& m);  // 8-bit, fg=255
BinaryMask load_mask_png(const std::filesystem::path& path);
// Soft masks are persisted as 16-bit PNG on the same quantization grid.
void save_rgb_png(const std::filesystem::path& path, int h, int w, const std::vector<uint8_t>& rgb);

// Mask alpha-blended in red over the grayscale image.
void save_overlay_png(const std::filesystem::path& path, const Grid& img, const Grid& soft,
                      double alpha = 0.45);

// Minimal polyline plot (used for ROC curves); series drawn over [0,1]^2 axes.
struct PlotSeries {
    std::vector<double> x, y;
    uint8_t r = 0, g = 0, b = 0;
};
void save_plot_png(const std::filesystem::path& path, const std::vector<PlotSeries>& series,
                   int size = 360);

}  // namespace cfx

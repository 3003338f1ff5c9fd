#include "cfx/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cfx/errors.hpp"

namespace cfx {

Grid Grid::from_tensor(const Tensor& t) {
    Grid g;
    if (t.ndim() == 2) {
        g.h = t.dim(0);
        g.w = t.dim(1);
    } else if (t.ndim() == 3 && t.dim(0) == 1) {
        g.h = t.dim(1);
        g.w = t.dim(2);
    } else {
        throw ContractError("Grid::from_tensor: expects (H,W) or (1,H,W)");
    }
    g.px.assign(t.data(), t.data() + t.numel());
    return g;
}

size_t BinaryMask::area() const {
    size_t n = 0;
    for (uint8_t v : fg) n += v ? 1 : 0;
    return n;
}

Tensor BinaryMask::to_tensor_hw() const {
    Tensor t({h, w});
    for (size_t i = 0; i < fg.size(); ++i) t[i] = fg[i] ? 1.0 : 0.0;
    return t;
}

BinaryMask threshold_ge(const Grid& g, double t) {
    BinaryMask m(g.h, g.w);
    for (size_t i = 0; i < g.px.size(); ++i) m.fg[i] = g.px[i] >= t ? 1 : 0;
    return m;
}

BinaryMask dilate(const BinaryMask& m, int radius) {
    BinaryMask out(m.h, m.w);
    for (int i = 0; i < m.h; ++i)
        for (int j = 0; j < m.w; ++j) {
            if (!m.at(i, j)) continue;
            for (int di = -radius; di <= radius; ++di)
                for (int dj = -radius; dj <= radius; ++dj) {
                    int ii = i + di, jj = j + dj;
                    if (ii >= 0 && ii < m.h && jj >= 0 && jj < m.w) out.at(ii, jj) = 1;
                }
        }
    return out;
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
    BinaryMask out(a.h, a.w);
    for (size_t i = 0; i < out.fg.size(); ++i) out.fg[i] = (a.fg[i] || b.fg[i]) ? 1 : 0;
    return out;
}

bool masks_intersect(const BinaryMask& a, const BinaryMask& b) {
    for (size_t i = 0; i < a.fg.size(); ++i)
        if (a.fg[i] && b.fg[i]) return true;
    return false;
}

void quantize16(Grid& g) {
    for (auto& v : g.px) {
        double c = std::min(1.0, std::max(0.0, v));
        v = std::round(c * 65535.0) / 65535.0;
    }
}

// ---- PNG I/O ----

namespace {

struct PngWriter {
    FILE* f = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (f) std::fclose(f);
    }
};

struct PngReader {
    FILE* f = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (f) std::fclose(f);
    }
};

void png_write_gray(const std::filesystem::path& path, int h, int w, int bit_depth,
                    const std::vector<png_bytep>& rows, int color_type = PNG_COLOR_TYPE_GRAY) {
    PngWriter s;
    s.f = std::fopen(path.string().c_str(), "wb");
    if (!s.f) throw PersistenceError("cannot open for writing: " + path.string());
    s.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    s.info = png_create_info_struct(s.png);
    if (setjmp(png_jmpbuf(s.png))) throw PersistenceError("png write failed: " + path.string());
    png_init_io(s.png, s.f);
    png_set_IHDR(s.png, s.info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(s.png, s.info);
    png_write_image(s.png, const_cast<png_bytepp>(rows.data()));
    png_write_end(s.png, nullptr);
}

}  // namespace

void save_png16(const std::filesystem::path& path, const Grid& img) {
    std::vector<uint16_t> buf(img.px.size());
    for (size_t i = 0; i < img.px.size(); ++i) {
        double c = std::min(1.0, std::max(0.0, img.px[i]));
        uint16_t v = static_cast<uint16_t>(std::lround(c * 65535.0));
        buf[i] = static_cast<uint16_t>((v >> 8) | (v << 8));  // big-endian per PNG spec
    }
    std::vector<png_bytep> rows(static_cast<size_t>(img.h));
    for (int i = 0; i < img.h; ++i)
        rows[static_cast<size_t>(i)] = reinterpret_cast<png_bytep>(buf.data() + static_cast<size_t>(i) * img.w);
    png_write_gray(path, img.h, img.w, 16, rows);
}

Grid load_png16(const std::filesystem::path& path) {
    PngReader s;
    s.f = std::fopen(path.string().c_str(), "rb");
    if (!s.f) throw PersistenceError("cannot open for reading: " + path.string());
    s.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    s.info = png_create_info_struct(s.png);
    if (setjmp(png_jmpbuf(s.png))) throw PersistenceError("png read failed: " + path.string());
    png_init_io(s.png, s.f);
    png_read_info(s.png, s.info);
    int w = static_cast<int>(png_get_image_width(s.png, s.info));
    int h = static_cast<int>(png_get_image_height(s.png, s.info));
    if (png_get_color_type(s.png, s.info) != PNG_COLOR_TYPE_GRAY ||
        png_get_bit_depth(s.png, s.info) != 16)
        throw PersistenceError("expected 16-bit grayscale png: " + path.string());
    std::vector<uint16_t> buf(static_cast<size_t>(h) * w);
    std::vector<png_bytep> rows(static_cast<size_t>(h));
    for (int i = 0; i < h; ++i)
        rows[static_cast<size_t>(i)] = reinterpret_cast<png_bytep>(buf.data() + static_cast<size_t>(i) * w);
    png_read_image(s.png, rows.data());
    Grid g(h, w);
    for (size_t i = 0; i < buf.size(); ++i) {
        uint16_t be = buf[i];
        uint16_t v = static_cast<uint16_t>((be >> 8) | (be << 8));
        g.px[i] = static_cast<double>(v) / 65535.0;
    }
    return g;
}

void save_mask_png(const std::filesystem::path& path, const BinaryMask& m) {
    std::vector<uint8_t> buf(m.fg.size());
    for (size_t i = 0; i < m.fg.size(); ++i) buf[i] = m.fg[i] ? 255 : 0;
    std::vector<png_bytep> rows(static_cast<size_t>(m.h));
    for (int i = 0; i < m.h; ++i) rows[static_cast<size_t>(i)] = buf.data() + static_cast<size_t>(i) * m.w;
    png_write_gray(path, m.h, m.w, 8, rows);
}

BinaryMask load_mask_png(const std::filesystem::path& path) {
    PngReader s;
    s.f = std::fopen(path.string().c_str(), "rb");
    if (!s.f) throw PersistenceError("cannot open for reading: " + path.string());
    s.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    s.info = png_create_info_struct(s.png);
    if (setjmp(png_jmpbuf(s.png))) throw PersistenceError("png read failed: " + path.string());
    png_init_io(s.png, s.f);
    png_read_info(s.png, s.info);
    int w = static_cast<int>(png_get_image_width(s.png, s.info));
    int h = static_cast<int>(png_get_image_height(s.png, s.info));
    if (png_get_color_type(s.png, s.info) != PNG_COLOR_TYPE_GRAY ||
        png_get_bit_depth(s.png, s.info) != 8)
        throw PersistenceError("expected 8-bit grayscale png: " + path.string());
    std::vector<uint8_t> buf(static_cast<size_t>(h) * w);
    std::vector<png_bytep> rows(static_cast<size_t>(h));
    for (int i = 0; i < h; ++i) rows[static_cast<size_t>(i)] = buf.data() + static_cast<size_t>(i) * w;
    png_read_image(s.png, rows.data());
    BinaryMask m(h, w);
    for (size_t i = 0; i < buf.size(); ++i) m.fg[i] = buf[i] >= 128 ? 1 : 0;
    return m;
}

void save_rgb_png(const std::filesystem::path& path, int h, int w, const std::vector<uint8_t>& rgb) {
    if (rgb.size() != static_cast<size_t>(h) * w * 3) throw ContractError("save_rgb_png: buffer size");
    std::vector<png_bytep> rows(static_cast<size_t>(h));
    for (int i = 0; i < h; ++i)
        rows[static_cast<size_t>(i)] = const_cast<png_bytep>(rgb.data() + static_cast<size_t>(i) * w * 3);
    png_write_gray(path, h, w, 8, rows, PNG_COLOR_TYPE_RGB);
}

void save_overlay_png(const std::filesystem::path& path, const Grid& img, const Grid& soft,
                      double alpha) {
    std::vector<uint8_t> rgb(static_cast<size_t>(img.h) * img.w * 3);
    for (int i = 0; i < img.h; ++i)
        for (int j = 0; j < img.w; ++j) {
            double g = std::min(1.0, std::max(0.0, img.at(i, j)));
            double a = alpha * std::min(1.0, std::max(0.0, soft.at(i, j)));
            double r = (1.0 - a) * g + a * 1.0;
            double gg = (1.0 - a) * g;
            double bb = (1.0 - a) * g;
            size_t off = (static_cast<size_t>(i) * img.w + j) * 3;
            rgb[off] = static_cast<uint8_t>(std::lround(r * 255.0));
            rgb[off + 1] = static_cast<uint8_t>(std::lround(gg * 255.0));
            rgb[off + 2] = static_cast<uint8_t>(std::lround(bb * 255.0));
        }
    save_rgb_png(path, img.h, img.w, rgb);
}

void save_plot_png(const std::filesystem::path& path, const std::vector<PlotSeries>& series, int size) {
    int m = 24;  // margin
    std::vector<uint8_t> rgb(static_cast<size_t>(size) * size * 3, 255);
    auto put = [&](int i, int j, uint8_t r, uint8_t g, uint8_t b) {
        if (i < 0 || i >= size || j < 0 || j >= size) return;
        size_t off = (static_cast<size_t>(i) * size + j) * 3;
        rgb[off] = r;
        rgb[off + 1] = g;
        rgb[off + 2] = b;
    };
    // axes + diagonal
    for (int k = m; k < size - m; ++k) {
        put(size - m, k, 0, 0, 0);
        put(k, m, 0, 0, 0);
    }
    for (int k = 0; k < size - 2 * m; ++k)
        put(size - m - k, m + k, 200, 200, 200);  // chance diagonal
    auto to_px = [&](double x, double y, int& i, int& j) {
        j = m + static_cast<int>(std::lround(x * (size - 2 * m - 1)));
        i = size - m - static_cast<int>(std::lround(y * (size - 2 * m - 1)));
    };
    for (const auto& s : series) {
        for (size_t k = 0; k + 1 < s.x.size(); ++k) {
            int i0, j0, i1, j1;
            to_px(s.x[k], s.y[k], i0, j0);
            to_px(s.x[k + 1], s.y[k + 1], i1, j1);
            int steps = std::max(std::abs(i1 - i0), std::abs(j1 - j0)) + 1;
            for (int t = 0; t <= steps; ++t) {
                double a = static_cast<double>(t) / steps;
                put(static_cast<int>(std::lround(i0 + a * (i1 - i0))),
                    static_cast<int>(std::lround(j0 + a * (j1 - j0))), s.r, s.g, s.b);
            }
        }
    }
    save_rgb_png(path, size, size, rgb);
}

}  // namespace cfx

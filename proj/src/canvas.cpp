#include "doodle/canvas.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include "doodle/errors.hpp"

namespace doodle {

Canvas::Canvas(int side, MediaType media)
    : side_(side), channels_(media_channels(media)), media_(media) {
    if (side < 16) throw std::invalid_argument("canvas side must be >= 16, got " + std::to_string(side));
    px_.assign(static_cast<std::size_t>(side) * side * channels_, 255);
}

std::vector<std::pair<int, int>> line_pixels(int x0, int y0, int x1, int y1) {
    // Integer Bresenham, all octants, endpoints inclusive.
    std::vector<std::pair<int, int>> out;
    int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    int x = x0, y = y0;
    while (true) {
        out.emplace_back(x, y);
        if (x == x1 && y == y1) break;
        int e2 = 2 * err;
        if (e2 >= dy) { err += dy; x += sx; }
        if (e2 <= dx) { err += dx; y += sy; }
    }
    return out;
}

namespace {

struct Rgb {
    std::uint8_t r, g, b;
};

Rgb mode_color(PenMode mode) {
    switch (mode) {
        case PenMode::DownRed: return {255, 0, 0};
        case PenMode::DownGreen: return {0, 255, 0};
        case PenMode::DownBlue: return {0, 0, 255};
        default: return {0, 0, 0};
    }
}

void check_mode(MediaType media, PenMode mode) {
    // PenMode::Down aliases DownRed; for Sketch only values 0/1 are meaningful.
    int v = static_cast<int>(mode);
    if (v < 0 || v >= pen_mode_count(media))
        throw std::invalid_argument("pen mode invalid for this medium");
}

void paint_hard(Canvas& canvas, int cx, int cy, const Rgb& color, int width) {
    int r = (width - 1) / 2;
    for (int oy = -r; oy <= r; ++oy) {
        for (int ox = -r; ox <= r; ++ox) {
            int x = cx + ox, y = cy + oy;
            if (!canvas.contains(x, y)) continue;
            if (canvas.channels() == 1) {
                canvas.at(x, y, 0) = 0;
            } else {
                canvas.at(x, y, 0) = color.r;
                canvas.at(x, y, 1) = color.g;
                canvas.at(x, y, 2) = color.b;
            }
        }
    }
}

void paint_stamp(Canvas& canvas, int cx, int cy, const Rgb& color, const BrushParams& brush) {
    // Gaussian alpha profile; softness 0 degenerates to the center pixel only.
    int radius = brush.softness > 0.0
                     ? static_cast<int>(std::ceil(3.0 * brush.softness)) + (brush.width - 1) / 2
                     : 0;
    double two_sigma_sq = 2.0 * brush.softness * brush.softness;
    for (int oy = -radius; oy <= radius; ++oy) {
        for (int ox = -radius; ox <= radius; ++ox) {
            int x = cx + ox, y = cy + oy;
            if (!canvas.contains(x, y)) continue;
            double d2 = double(ox) * ox + double(oy) * oy;
            double a = (d2 == 0.0) ? brush.opacity
                       : (two_sigma_sq > 0.0) ? brush.opacity * std::exp(-d2 / two_sigma_sq)
                                              : 0.0;
            if (a <= 0.0) continue;
            std::uint8_t rgb[3] = {color.r, color.g, color.b};
            for (int c = 0; c < canvas.channels(); ++c) {
                double old = canvas.at(x, y, c);
                double mixed = old * (1.0 - a) + rgb[c] * a;
                canvas.at(x, y, c) = static_cast<std::uint8_t>(
                    std::clamp(std::lround(mixed), 0L, 255L));
            }
        }
    }
}

}  // namespace

void render_segment(Canvas& canvas, int x0, int y0, int x1, int y1, PenMode mode,
                    const BrushParams& brush) {
    if (!canvas.contains(x0, y0) || !canvas.contains(x1, y1))
        throw std::invalid_argument("segment endpoint off canvas");
    check_mode(canvas.media(), mode);
    if (mode == PenMode::Up) return;

    Rgb color = canvas.media() == MediaType::Sketch ? Rgb{0, 0, 0} : mode_color(mode);
    for (auto [x, y] : line_pixels(x0, y0, x1, y1)) {
        if (canvas.media() == MediaType::Watercolor)
            paint_stamp(canvas, x, y, color, brush);
        else
            paint_hard(canvas, x, y, color, brush.width);
    }
}

std::vector<std::uint8_t> crop_patch(const Canvas& canvas, int cx, int cy, int size) {
    if (size % 2 == 0) throw std::invalid_argument("patch size must be odd");
    int half = size / 2;
    std::vector<std::uint8_t> patch(static_cast<std::size_t>(size) * size * canvas.channels(), 255);
    for (int py = 0; py < size; ++py) {
        for (int px = 0; px < size; ++px) {
            int x = cx - half + px, y = cy - half + py;
            if (!canvas.contains(x, y)) continue;
            for (int c = 0; c < canvas.channels(); ++c)
                patch[static_cast<std::size_t>((py * size + px) * canvas.channels() + c)] =
                    canvas.at(x, y, c);
        }
    }
    return patch;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void save_image(const Canvas& canvas, const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png write failed: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, canvas.side(), canvas.side(), 8,
                 canvas.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::size_t stride = static_cast<std::size_t>(canvas.side()) * canvas.channels();
    for (int y = 0; y < canvas.side(); ++y)
        png_write_row(png, const_cast<png_bytep>(canvas.pixels().data() + y * stride));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Canvas load_image(const std::string& path, MediaType media) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open for reading: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataFormatError("png read failed: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    if (w != h) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataFormatError("expected square image: " + path);
    }
    // Normalize everything to 8-bit gray or RGB matching the requested medium.
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_packing(png);
    int color_type = png_get_color_type(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (media_channels(media) == 3) {
        if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
            png_set_gray_to_rgb(png);
    } else {
        if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_GRAY_ALPHA)
            png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
    png_read_update_info(png, info);

    Canvas canvas(static_cast<int>(w), media);
    std::size_t stride = static_cast<std::size_t>(canvas.side()) * canvas.channels();
    if (png_get_rowbytes(png, info) != stride) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataFormatError("unexpected row size in " + path);
    }
    for (int y = 0; y < canvas.side(); ++y)
        png_read_row(png, canvas.pixels().data() + y * stride, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return canvas;
}

}  // namespace doodle

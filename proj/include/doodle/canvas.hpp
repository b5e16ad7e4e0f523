#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace doodle {

enum class MediaType : std::uint8_t {
    Sketch,       // 1 channel, hard black line
    ColorSketch,  // 3 channels, hard RGB line
    Watercolor,   // 3 channels, soft blended stamps
};

inline int media_channels(MediaType m) { return m == MediaType::Sketch ? 1 : 3; }

enum class PenMode : std::uint8_t {
    Up = 0,
    Down = 1,      // Sketch only: black ink
    DownRed = 1,   // color media share the numbering of the color map
    DownGreen = 2,
    DownBlue = 3,
};

// Grayscale media use {Up, Down}; color media use {Up, DownRed, DownGreen, DownBlue}.
inline int pen_mode_count(MediaType m) { return m == MediaType::Sketch ? 2 : 4; }

struct PenState {
    int x = 0;
    int y = 0;
    PenMode mode = PenMode::Up;
};

struct BrushParams {
    int width = 1;           // pixels
    double opacity = 1.0;    // (0, 1]
    double softness = 0.0;   // Gaussian radius in pixels, watercolor only

    static BrushParams defaults_for(MediaType m) {
        if (m == MediaType::Watercolor) return BrushParams{3, 0.5, 1.5};
        return BrushParams{1, 1.0, 0.0};
    }
};

// L x L x channels pixel grid, white (255) background, row-major (y, x, channel).
class Canvas {
  public:
    Canvas() = default;
    // side >= 16; throws std::invalid_argument below that.
    Canvas(int side, MediaType media);

    int side() const { return side_; }
    int channels() const { return channels_; }
    MediaType media() const { return media_; }

    std::uint8_t at(int x, int y, int c = 0) const {
        return px_[static_cast<std::size_t>((y * side_ + x) * channels_ + c)];
    }
    std::uint8_t& at(int x, int y, int c = 0) {
        return px_[static_cast<std::size_t>((y * side_ + x) * channels_ + c)];
    }
    bool contains(int x, int y) const { return x >= 0 && x < side_ && y >= 0 && y < side_; }

    const std::vector<std::uint8_t>& pixels() const { return px_; }
    std::vector<std::uint8_t>& pixels() { return px_; }

    bool operator==(const Canvas& other) const = default;

  private:
    int side_ = 0;
    int channels_ = 0;
    MediaType media_ = MediaType::Sketch;
    std::vector<std::uint8_t> px_;
};

// Integer discrete line between two points, both endpoints included.
std::vector<std::pair<int, int>> line_pixels(int x0, int y0, int x1, int y1);

// Paints one pen segment. Up is a no-op; Sketch paints 0, ColorSketch the pure RGB
// primary, Watercolor composites a Gaussian stamp at every line pixel.
// Throws std::invalid_argument for off-canvas endpoints or a mode/medium mismatch.
void render_segment(Canvas& canvas, int x0, int y0, int x1, int y1, PenMode mode,
                    const BrushParams& brush);

// size x size x channels window centered at (cx, cy); off-canvas cells read 255.
// size must be odd.
std::vector<std::uint8_t> crop_patch(const Canvas& canvas, int cx, int cy, int size);

// 8-bit PNG round trip. Throw IoError on failure, DataFormatError on bad pixel data.
void save_image(const Canvas& canvas, const std::string& path);
Canvas load_image(const std::string& path, MediaType media);

}  // namespace doodle

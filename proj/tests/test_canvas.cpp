#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "doodle/canvas.hpp"
#include "doodle/errors.hpp"
#include "oracles.hpp"

using namespace doodle;

namespace {

Canvas sketch(int side = 84) { return Canvas(side, MediaType::Sketch); }

bool all_value(const Canvas& c, std::uint8_t v) {
    for (auto p : c.pixels())
        if (p != v) return false;
    return true;
}

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("new canvas is all white with the medium's channel count") {
    Canvas g = sketch();
    CHECK(g.side() == 84);
    CHECK(g.channels() == 1);
    CHECK(all_value(g, 255));

    Canvas c(84, MediaType::ColorSketch);
    CHECK(c.channels() == 3);
    CHECK(all_value(c, 255));

    CHECK_THROWS_AS(Canvas(8, MediaType::Sketch), std::invalid_argument);
}

TEST_CASE("pen-up segment is a no-op") {
    Canvas c = sketch();
    Canvas before = c;
    render_segment(c, 2, 2, 2, 2, PenMode::Up, BrushParams{});
    render_segment(c, 0, 0, 40, 70, PenMode::Up, BrushParams{});
    CHECK(c == before);
}

TEST_CASE("horizontal sketch segment paints the enumerated pixels") {
    Canvas c = sketch();
    render_segment(c, 0, 0, 3, 0, PenMode::Down, BrushParams{});
    auto painted = oracles::painted_pixels(c);
    CHECK(painted == oracles::line_set(0, 0, 3, 0));
    for (int x = 0; x <= 3; ++x) CHECK(c.at(x, 0) == 0);
}

TEST_CASE("diagonal segment matches the rasterization oracle") {
    Canvas c = sketch();
    render_segment(c, 0, 0, 5, 5, PenMode::Down, BrushParams{});
    CHECK(oracles::painted_pixels(c) == oracles::line_set(0, 0, 5, 5));
}

TEST_CASE("random segments match the rasterization oracle") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> coord(0, 83);
    for (int trial = 0; trial < 500; ++trial) {
        int x0 = coord(rng), y0 = coord(rng), x1 = coord(rng), y1 = coord(rng);
        Canvas c = sketch();
        render_segment(c, x0, y0, x1, y1, PenMode::Down, BrushParams{});
        CAPTURE(x0); CAPTURE(y0); CAPTURE(x1); CAPTURE(y1);
        REQUIRE(oracles::painted_pixels(c) == oracles::line_set(x0, y0, x1, y1));
    }
}

TEST_CASE("segment endpoints always painted, rendering deterministic and idempotent") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> coord(0, 83);
    for (int trial = 0; trial < 100; ++trial) {
        int x0 = coord(rng), y0 = coord(rng), x1 = coord(rng), y1 = coord(rng);
        Canvas a(84, MediaType::ColorSketch);
        render_segment(a, x0, y0, x1, y1, PenMode::DownGreen, BrushParams{});
        CHECK(a.at(x0, y0, 1) == 255);
        CHECK(a.at(x0, y0, 0) == 0);
        CHECK(a.at(x1, y1, 0) == 0);
        Canvas b(84, MediaType::ColorSketch);
        render_segment(b, x0, y0, x1, y1, PenMode::DownGreen, BrushParams{});
        CHECK(a == b);  // deterministic
        render_segment(b, x0, y0, x1, y1, PenMode::DownGreen, BrushParams{});
        CHECK(a == b);  // idempotent
    }
}

TEST_CASE("off-canvas endpoints rejected") {
    Canvas c = sketch();
    CHECK_THROWS_AS(render_segment(c, -1, 0, 5, 5, PenMode::Down, BrushParams{}),
                    std::invalid_argument);
    CHECK_THROWS_AS(render_segment(c, 0, 0, 84, 5, PenMode::Down, BrushParams{}),
                    std::invalid_argument);
}

TEST_CASE("watercolor compositing stays in range for any stamp sequence") {
    Canvas c(84, MediaType::Watercolor);
    BrushParams brush = BrushParams::defaults_for(MediaType::Watercolor);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> coord(0, 83);
    std::uniform_int_distribution<int> mode(1, 3);
    for (int i = 0; i < 200; ++i) {
        render_segment(c, coord(rng), coord(rng), coord(rng), coord(rng),
                       static_cast<PenMode>(mode(rng)), brush);
    }
    // uint8 storage guarantees the range; check mixing happened (non-primary values)
    bool mixed = false;
    for (auto p : c.pixels())
        if (p != 0 && p != 255) mixed = true;
    CHECK(mixed);
}

TEST_CASE("crop patch centers, pads with white, reflects paint") {
    Canvas c = sketch();
    auto patch = crop_patch(c, 42, 42, 11);
    CHECK(patch.size() == 11 * 11);
    for (auto v : patch) CHECK(v == 255);

    auto corner = crop_patch(c, 0, 0, 11);
    // top-left 5x5 region lies off canvas -> padding
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) CHECK(corner[y * 11 + x] == 255);

    c.at(42, 42) = 0;
    auto centered = crop_patch(c, 42, 42, 11);
    CHECK(centered[5 * 11 + 5] == 0);

    CHECK_THROWS_AS(crop_patch(c, 0, 0, 10), std::invalid_argument);
}

TEST_CASE("png round trip is bit exact") {
    Canvas c(84, MediaType::ColorSketch);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> coord(0, 83);
    for (int i = 0; i < 10; ++i)
        render_segment(c, coord(rng), coord(rng), coord(rng), coord(rng), PenMode::DownRed,
                       BrushParams{});
    auto path = temp_file("doodle_test_rt.png");
    save_image(c, path.string());
    Canvas back = load_image(path.string(), MediaType::ColorSketch);
    CHECK(back.pixels() == c.pixels());
    std::filesystem::remove(path);

    Canvas white = sketch();
    save_image(white, temp_file("doodle_test_white.png").string());
    Canvas wback = load_image(temp_file("doodle_test_white.png").string(), MediaType::Sketch);
    CHECK(all_value(wback, 255));
    std::filesystem::remove(temp_file("doodle_test_white.png"));

    CHECK_THROWS_AS(save_image(white, "/nonexistent_dir_zz/x.png"), IoError);
}

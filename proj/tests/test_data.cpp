#include <doctest.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doodle/data.hpp"
#include "doodle/errors.hpp"
#include "doodle/replay.hpp"

using namespace doodle;

TEST_CASE("quickdraw parsing: simplified ndjson records") {
    std::istringstream in(
        R"({"word":"line","drawing":[[[0,10],[0,0]]]})"
        "\n"
        R"({"word":"三","drawing":[[[0,5],[0,0]],[[0,5],[3,3]],[[0,5],[6,6]]]})"
        "\n"
        R"(truncated {"word": )"
        "\n");
    ParseStats stats;
    auto drawings = parse_quickdraw(in, &stats);
    REQUIRE(drawings.size() == 2);
    CHECK(stats.parsed == 2);
    CHECK(stats.skipped == 1);

    CHECK(drawings[0].class_label == "line");
    REQUIRE(drawings[0].strokes.size() == 1);
    REQUIRE(drawings[0].strokes[0].size() == 2);
    CHECK(drawings[0].strokes[0][0] == std::pair{0, 0});
    CHECK(drawings[0].strokes[0][1] == std::pair{10, 0});

    CHECK(drawings[1].strokes.size() == 3);
}

TEST_CASE("quickdraw parsing: all lines malformed raises empty-dataset") {
    std::istringstream in("not json\n{\"word\":1}\n");
    CHECK_THROWS_AS(parse_quickdraw(in), DataFormatError);
    CHECK_THROWS_AS(parse_quickdraw_file("/nonexistent/file.ndjson"), IoError);
}

TEST_CASE("normalize_drawing: fits, centers, idempotent") {
    VectorDrawing big;
    big.strokes = {{{0, 0}, {1000, 250}}, {{100, 100}, {500, 900}}};

    VectorDrawing n = normalize_drawing(big, 84);
    int minx = 1000, miny = 1000, maxx = -1, maxy = -1;
    for (const auto& s : n.strokes)
        for (auto [x, y] : s) {
            minx = std::min(minx, x); maxx = std::max(maxx, x);
            miny = std::min(miny, y); maxy = std::max(maxy, y);
        }
    CHECK(minx >= 2);
    CHECK(miny >= 2);
    CHECK(maxx <= 81);
    CHECK(maxy <= 81);
    CHECK(std::max(maxx - minx, maxy - miny) == 79);  // always rescaled to fill

    VectorDrawing twice = normalize_drawing(n, 84);
    CHECK(twice.strokes == n.strokes);

    VectorDrawing point;
    point.strokes = {{{7, 7}, {7, 7}}};
    VectorDrawing np = normalize_drawing(point, 84);
    CHECK(np.strokes[0][0] == std::pair{42, 42});
}

TEST_CASE("normalize_drawing: idempotent on random drawings") {
    std::mt19937_64 rng(53);
    std::uniform_int_distribution<int> coord(-500, 1500);
    for (int trial = 0; trial < 50; ++trial) {
        VectorDrawing d;
        for (int s = 0; s < 3; ++s) {
            std::vector<std::pair<int, int>> stroke;
            for (int i = 0; i < 5; ++i) stroke.emplace_back(coord(rng), coord(rng));
            d.strokes.push_back(stroke);
        }
        VectorDrawing once = normalize_drawing(d, 84);
        CHECK(normalize_drawing(once, 84).strokes == once.strokes);
    }
}

TEST_CASE("rasterize_reference: empty, deterministic, shares the segment rasterizer") {
    VectorDrawing empty;
    Canvas blank = rasterize_reference(empty, 84, MediaType::Sketch);
    for (auto p : blank.pixels()) CHECK(p == 255);

    VectorDrawing line;
    line.strokes = {{{10, 20}, {40, 20}}};
    Canvas a = rasterize_reference(line, 84, MediaType::Sketch);
    Canvas b(84, MediaType::Sketch);
    render_segment(b, 10, 20, 40, 20, PenMode::Down, BrushParams::defaults_for(MediaType::Sketch));
    CHECK(a == b);
    CHECK(rasterize_reference(line, 84, MediaType::Sketch) == a);
}

TEST_CASE("chunk_move: greedy max-step decomposition") {
    auto three = chunk_move(13, 0, PenMode::Up);
    REQUIRE(three.size() == 3);
    CHECK(three[0].dx == 5);
    CHECK(three[1].dx == 5);
    CHECK(three[2].dx == 3);

    auto collinear = chunk_move(5, 0, PenMode::Down);
    REQUIRE(collinear.size() == 1);
    CHECK(collinear[0].dx == 5);

    CHECK(chunk_move(0, 0, PenMode::Up).empty());

    auto diag = chunk_move(-7, 12, PenMode::Down);
    int sx = 0, sy = 0;
    for (const auto& a : diag) {
        CHECK(std::abs(a.dx) <= 5);
        CHECK(std::abs(a.dy) <= 5);
        sx += a.dx;
        sy += a.dy;
    }
    CHECK(sx == -7);
    CHECK(sy == 12);
}

TEST_CASE("synthesized demo episodes replay to their reference exactly") {
    std::mt19937_64 rng(59);
    auto bank = procedural_stroke_bank(84, 50, rng);
    DemoSynthConfig cfg;
    for (int trial = 0; trial < 30; ++trial) {
        cfg.media = trial % 2 ? MediaType::ColorSketch : MediaType::Sketch;
        DemoEpisode ep = synthesize_demo_episode(bank, cfg, rng);
        REQUIRE_FALSE(ep.actions.empty());

        // every action respects the offset bound
        ActionSpec spec{ep.media};
        for (auto idx : ep.actions) {
            Action a = decode_action(idx, spec);
            CHECK(std::abs(a.dx) <= 5);
            CHECK(std::abs(a.dy) <= 5);
        }

        CHECK(rebuild_reference(ep) == ep.reference);

        // replaying samples step-by-step reproduces each next state
        auto samples = materialize_samples(ep);
        REQUIRE(samples.size() == ep.actions.size());
        CHECK(samples.front().current == Canvas(ep.side, ep.media));
    }
}

TEST_CASE("three collinear points five px apart give two down actions") {
    std::vector<std::vector<std::pair<int, int>>> bank = {{{10, 10}, {15, 10}, {20, 10}}};
    DemoSynthConfig cfg;
    cfg.n_strokes = 1;
    std::mt19937_64 rng(61);
    DemoEpisode ep = synthesize_demo_episode(bank, cfg, rng);
    ActionSpec spec{cfg.media};
    int down = 0;
    for (auto idx : ep.actions) {
        Action a = decode_action(idx, spec);
        if (a.mode != PenMode::Up) {
            ++down;
            CHECK(std::max(std::abs(a.dx), std::abs(a.dy)) == 5);
        }
    }
    CHECK(down == 2);
}

TEST_CASE("sum tree: sums, ring overwrite, floor rule") {
    SumTree tree(4);
    tree.set_leaf(0, 1.0);
    CHECK(tree.total() == 1.0);
    tree.set_leaf(1, 2.0);
    tree.set_leaf(2, 3.0);
    tree.set_leaf(3, 4.0);
    CHECK(tree.total() == 10.0);
    tree.set_leaf(0, 5.0);
    CHECK(tree.total() == 14.0);

    PerConfig cfg;
    cfg.capacity = 2;
    cfg.alpha = 1.0;
    cfg.epsilon = 0.0;
    ReplayBuffer<int> buf(cfg);
    buf.insert(100, 1.0);
    buf.insert(200, 2.0);
    buf.insert(300, 3.0);  // overwrites oldest slot
    CHECK(buf.size() == 2);
    CHECK(buf.item(0) == 300);
    CHECK(buf.item(1) == 200);

    PerConfig floored;
    floored.capacity = 2;
    floored.epsilon = 0.01;
    ReplayBuffer<int> fbuf(floored);
    std::size_t slot = fbuf.insert(1, 1.0);
    fbuf.set_priority(slot, 0.0);
    CHECK(fbuf.tree().leaf(slot) == doctest::Approx(std::pow(0.01, 0.6)));
    CHECK(fbuf.tree().leaf(slot) > 0.0);
}

TEST_CASE("sum tree root matches brute-force sum after random update sequences") {
    std::mt19937_64 rng(67);
    SumTree tree(1000);
    std::uniform_int_distribution<std::size_t> idx(0, 999);
    std::uniform_real_distribution<double> pri(0.0, 10.0);
    for (int i = 0; i < 1000; ++i) tree.set_leaf(idx(rng), pri(rng));
    double brute = 0.0;
    for (std::size_t i = 0; i < 1000; ++i) brute += tree.leaf(i);
    CHECK(tree.total() == doctest::Approx(brute).epsilon(1e-9));
}

TEST_CASE("proportional sampling frequencies match priorities") {
    PerConfig cfg;
    cfg.capacity = 4;
    cfg.alpha = 1.0;
    cfg.epsilon = 0.0;
    ReplayBuffer<int> buf(cfg);
    for (int i = 0; i < 4; ++i) buf.insert(i, double(i + 1));
    CHECK(buf.tree().leaf(3) / buf.tree().total() == doctest::Approx(0.4));

    std::mt19937_64 rng(71);
    std::array<std::int64_t, 4> counts{};
    const int rounds = 25000;  // 4 draws per round -> 1e5 samples
    for (int r = 0; r < rounds; ++r)
        for (const auto& s : buf.sample(4, 0.4, rng)) counts[s.index]++;
    for (int i = 0; i < 4; ++i) {
        double freq = double(counts[i]) / (4.0 * rounds);
        CHECK(freq == doctest::Approx(0.1 * (i + 1)).epsilon(0.1));
        CHECK(std::abs(freq - 0.1 * (i + 1)) < 0.01);
    }
}

TEST_CASE("equal priorities give unit importance weights") {
    PerConfig cfg;
    cfg.capacity = 8;
    ReplayBuffer<int> buf(cfg);
    for (int i = 0; i < 8; ++i) buf.insert(i, 1.0);
    std::mt19937_64 rng(73);
    for (const auto& s : buf.sample(8, 0.7, rng)) CHECK(s.weight == doctest::Approx(1.0));
}

TEST_CASE("sampling never returns an unfilled or zero-priority slot") {
    PerConfig cfg;
    cfg.capacity = 64;
    ReplayBuffer<int> buf(cfg);
    for (int i = 0; i < 10; ++i) buf.insert(i, 0.5 + i);
    std::mt19937_64 rng(79);
    for (int r = 0; r < 2000; ++r)
        for (const auto& s : buf.sample(16, 1.0, rng)) {
            CHECK(s.index < 10);
            CHECK(buf.tree().leaf(s.index) > 0.0);
        }
}

TEST_CASE("fresh insert at max priority is sampled quickly") {
    PerConfig cfg;
    cfg.capacity = 256;
    ReplayBuffer<int> buf(cfg);
    std::mt19937_64 rng(83);
    for (int i = 0; i < 256; ++i) buf.insert(i, 0.05);
    int hits = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        std::size_t slot = buf.insert(1000 + t, buf.max_priority());
        int rounds_needed = (256 + 31) / 32;  // ceil(N / batch)
        bool seen = false;
        for (int r = 0; r < rounds_needed && !seen; ++r)
            for (const auto& s : buf.sample(32, 1.0, rng))
                if (s.index == slot) { seen = true; break; }
        if (seen) ++hits;
        buf.set_priority(slot, 0.05);
    }
    CHECK(double(hits) / trials > 0.99);
}

TEST_CASE("demo dataset container round trip") {
    std::mt19937_64 rng(89);
    auto bank = procedural_stroke_bank(84, 20, rng);
    DemoSynthConfig cfg;
    std::vector<DemoEpisode> eps;
    for (int i = 0; i < 5; ++i) eps.push_back(synthesize_demo_episode(bank, cfg, rng));

    auto path = (std::filesystem::temp_directory_path() / "doodle_demo_test.sdqd").string();
    save_demo_dataset(eps, path);
    auto back = load_demo_dataset(path);
    REQUIRE(back.size() == eps.size());
    for (std::size_t i = 0; i < eps.size(); ++i) {
        CHECK(back[i].actions == eps[i].actions);
        CHECK(back[i].reference == eps[i].reference);
    }
    std::filesystem::remove(path);

    // corrupt magic
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPE garbage";
    }
    CHECK_THROWS_AS(load_demo_dataset(path), DataFormatError);
    std::filesystem::remove(path);
}

TEST_CASE("replay snapshot container round trip") {
    StoredTransition t;
    t.ref_id = 3;
    t.canvas_before = Canvas(28, MediaType::Sketch);
    t.canvas_after = Canvas(28, MediaType::Sketch);
    t.canvas_after.at(5, 5) = 0;
    t.pen_x_before = 14;
    t.pen_y_before = 14;
    t.pen_x_after = 5;
    t.pen_y_after = 5;
    t.action = 42;
    t.reward = -1.5;
    t.terminal = true;

    auto path = (std::filesystem::temp_directory_path() / "doodle_replay_test.sdqd").string();
    save_replay_snapshot({t}, path);
    auto back = load_replay_snapshot(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0].ref_id == 3);
    CHECK(back[0].canvas_after == t.canvas_after);
    CHECK(back[0].reward == -1.5);
    CHECK(back[0].terminal);
    std::filesystem::remove(path);
}

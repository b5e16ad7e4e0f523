#include "doodle/data.hpp"

#include <array>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "doodle/binio.hpp"
#include "doodle/errors.hpp"

namespace doodle {

namespace {

bool parse_record(const std::string& line, VectorDrawing& out) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("drawing") || !j["drawing"].is_array())
        return false;
    VectorDrawing d;
    d.class_label = j.value("word", "");
    for (const auto& stroke : j["drawing"]) {
        if (!stroke.is_array() || stroke.size() < 2) return false;
        const auto& xs = stroke[0];
        const auto& ys = stroke[1];
        if (!xs.is_array() || !ys.is_array() || xs.size() != ys.size()) return false;
        if (xs.size() < 2) continue;  // degenerate stroke, drop it
        std::vector<std::pair<int, int>> pts;
        pts.reserve(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!xs[i].is_number() || !ys[i].is_number()) return false;
            pts.emplace_back(xs[i].get<int>(), ys[i].get<int>());
        }
        d.strokes.push_back(std::move(pts));
    }
    if (d.strokes.empty()) return false;
    out = std::move(d);
    return true;
}

}  // namespace

std::vector<VectorDrawing> parse_quickdraw(std::istream& stream, ParseStats* stats) {
    if (!stream) throw IoError("unreadable quickdraw stream");
    std::vector<VectorDrawing> out;
    ParseStats local;
    std::string line;
    while (std::getline(stream, line)) {
        if (line.empty()) continue;
        VectorDrawing d;
        if (parse_record(line, d)) {
            out.push_back(std::move(d));
            ++local.parsed;
        } else {
            ++local.skipped;
        }
    }
    if (stats) *stats = local;
    if (out.empty()) throw DataFormatError("no parsable quickdraw records");
    return out;
}

std::vector<VectorDrawing> parse_quickdraw_file(const std::string& path, ParseStats* stats) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open quickdraw file: " + path);
    return parse_quickdraw(in, stats);
}

VectorDrawing normalize_drawing(const VectorDrawing& d, int side, int margin) {
    int minx = INT32_MAX, miny = INT32_MAX, maxx = INT32_MIN, maxy = INT32_MIN;
    for (const auto& stroke : d.strokes)
        for (auto [x, y] : stroke) {
            minx = std::min(minx, x);
            maxx = std::max(maxx, x);
            miny = std::min(miny, y);
            maxy = std::max(maxy, y);
        }
    VectorDrawing out;
    out.class_label = d.class_label;
    if (minx > maxx) return out;  // empty drawing

    int target = side - 1 - 2 * margin;
    int w = maxx - minx, h = maxy - miny;
    if (w == 0 && h == 0) {
        // Single point: place at the canvas center.
        for (const auto& stroke : d.strokes)
            out.strokes.emplace_back(stroke.size(), std::pair{side / 2, side / 2});
        return out;
    }
    double scale = double(target) / std::max(w, h);
    // Integer centering offsets keep repeated normalization a fixed point.
    int sw = static_cast<int>(std::lround(w * scale));
    int sh = static_cast<int>(std::lround(h * scale));
    int ox = margin + (target - sw) / 2;
    int oy = margin + (target - sh) / 2;
    for (const auto& stroke : d.strokes) {
        std::vector<std::pair<int, int>> pts;
        pts.reserve(stroke.size());
        for (auto [x, y] : stroke)
            pts.emplace_back(ox + static_cast<int>(std::lround((x - minx) * scale)),
                             oy + static_cast<int>(std::lround((y - miny) * scale)));
        out.strokes.push_back(std::move(pts));
    }
    return out;
}

Canvas rasterize_reference(const VectorDrawing& d, int side, MediaType media,
                           const std::vector<PenMode>& stroke_modes) {
    Canvas canvas(side, media);
    BrushParams brush = BrushParams::defaults_for(media);
    const PenMode cycle[3] = {PenMode::DownRed, PenMode::DownGreen, PenMode::DownBlue};
    for (std::size_t s = 0; s < d.strokes.size(); ++s) {
        PenMode mode = s < stroke_modes.size()
                           ? stroke_modes[s]
                           : (media == MediaType::Sketch ? PenMode::Down : cycle[s % 3]);
        const auto& stroke = d.strokes[s];
        for (std::size_t i = 0; i + 1 < stroke.size(); ++i) {
            auto clampp = [&](std::pair<int, int> p) {
                return std::pair{std::clamp(p.first, 0, side - 1),
                                 std::clamp(p.second, 0, side - 1)};
            };
            auto [x0, y0] = clampp(stroke[i]);
            auto [x1, y1] = clampp(stroke[i + 1]);
            render_segment(canvas, x0, y0, x1, y1, mode, brush);
        }
    }
    return canvas;
}

std::vector<Action> chunk_move(int dx, int dy, PenMode mode) {
    std::vector<Action> out;
    while (dx != 0 || dy != 0) {
        int sx = std::clamp(dx, -kOffsetRange, kOffsetRange);
        int sy = std::clamp(dy, -kOffsetRange, kOffsetRange);
        out.push_back(Action{sx, sy, mode});
        dx -= sx;
        dy -= sy;
    }
    return out;
}

DemoEpisode synthesize_demo_episode(const std::vector<std::vector<std::pair<int, int>>>& bank,
                                    const DemoSynthConfig& cfg, std::mt19937_64& rng) {
    if (bank.empty()) throw std::invalid_argument("stroke bank is empty");
    if (cfg.n_strokes < 1) throw std::invalid_argument("n_strokes must be >= 1");

    DemoEpisode ep;
    ep.media = cfg.media;
    ep.side = cfg.side;
    ep.start_x = cfg.side / 2;
    ep.start_y = cfg.side / 2;

    ActionSpec spec{cfg.media};
    std::uniform_int_distribution<std::size_t> pick(0, bank.size() - 1);
    const PenMode colors[3] = {PenMode::DownRed, PenMode::DownGreen, PenMode::DownBlue};

    int pen_x = ep.start_x, pen_y = ep.start_y;
    for (int s = 0; s < cfg.n_strokes; ++s) {
        const auto& stroke = bank[pick(rng)];
        int minx = INT32_MAX, miny = INT32_MAX, maxx = INT32_MIN, maxy = INT32_MIN;
        for (auto [x, y] : stroke) {
            minx = std::min(minx, x);
            maxx = std::max(maxx, x);
            miny = std::min(miny, y);
            maxy = std::max(maxy, y);
        }
        if (maxx - minx >= cfg.side || maxy - miny >= cfg.side) continue;  // cannot fit

        // Random translation drawn from the range that keeps the stroke on canvas.
        // With max_hop set, the stroke start is instead placed one compass hop
        // from the pen so pen-up moves stay short, regular, and predictable.
        int lox = -minx, hix = cfg.side - 1 - maxx;
        int loy = -miny, hiy = cfg.side - 1 - maxy;
        int tx, ty;
        if (cfg.max_hop > 0) {
            static constexpr int kCompass[8][2] = {{1, 0},  {1, 1},   {0, 1},  {-1, 1},
                                                   {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
            std::array<int, 8> order;
            for (int i = 0; i < 8; ++i) order[i] = i;
            std::shuffle(order.begin(), order.end(), rng);
            tx = std::clamp(pen_x - stroke.front().first, lox, hix);
            ty = std::clamp(pen_y - stroke.front().second, loy, hiy);
            for (int d : order) {
                int cx = pen_x + kCompass[d][0] * cfg.max_hop - stroke.front().first;
                int cy = pen_y + kCompass[d][1] * cfg.max_hop - stroke.front().second;
                if (cx >= lox && cx <= hix && cy >= loy && cy <= hiy) {
                    tx = cx;
                    ty = cy;
                    break;
                }
            }
        } else {
            tx = std::uniform_int_distribution<int>(lox, hix)(rng);
            ty = std::uniform_int_distribution<int>(loy, hiy)(rng);
        }

        PenMode draw_mode = cfg.media == MediaType::Sketch
                                ? PenMode::Down
                                : colors[std::uniform_int_distribution<int>(0, 2)(rng)];

        std::vector<std::pair<int, int>> pts;
        pts.reserve(stroke.size());
        for (auto [x, y] : stroke) pts.emplace_back(x + tx, y + ty);
        // Start at the endpoint nearest the pen, so demonstrations follow a
        // policy that is predictable from the observation alone.
        auto d2 = [&](std::pair<int, int> p) {
            long dx = p.first - pen_x, dy = p.second - pen_y;
            return dx * dx + dy * dy;
        };
        if (cfg.max_hop == 0 && d2(pts.back()) < d2(pts.front()))
            std::reverse(pts.begin(), pts.end());

        auto emit = [&](int dx, int dy, PenMode mode) {
            for (const Action& a : chunk_move(dx, dy, mode)) {
                ep.actions.push_back(static_cast<std::uint16_t>(encode_action(a, spec)));
                pen_x += a.dx;
                pen_y += a.dy;
            }
        };
        emit(pts.front().first - pen_x, pts.front().second - pen_y, PenMode::Up);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
            emit(pts[i + 1].first - pts[i].first, pts[i + 1].second - pts[i].second, draw_mode);
    }

    // Teach the policy to stand still once the drawing is complete: a stationary
    // pen-up step is reward-neutral, so a greedy imitator that has finished the
    // reference can idle instead of scribbling for the rest of the episode.
    std::uint16_t idle = static_cast<std::uint16_t>(encode_action(Action{0, 0, PenMode::Up}, spec));
    for (int i = 0; i < cfg.idle_tail; ++i) ep.actions.push_back(idle);

    ep.reference = rebuild_reference(ep);
    return ep;
}

Canvas rebuild_reference(const DemoEpisode& episode) {
    Canvas canvas(episode.side, episode.media);
    BrushParams brush = BrushParams::defaults_for(episode.media);
    ActionSpec spec{episode.media};
    int x = episode.start_x, y = episode.start_y;
    for (std::uint16_t idx : episode.actions) {
        Action a = decode_action(idx, spec);
        int nx = std::clamp(x + a.dx, 0, episode.side - 1);
        int ny = std::clamp(y + a.dy, 0, episode.side - 1);
        if (a.mode != PenMode::Up) render_segment(canvas, x, y, nx, ny, a.mode, brush);
        x = nx;
        y = ny;
    }
    return canvas;
}

std::vector<DemoSample> materialize_samples(const DemoEpisode& episode) {
    std::vector<DemoSample> samples;
    samples.reserve(episode.actions.size());
    Canvas canvas(episode.side, episode.media);
    BrushParams brush = BrushParams::defaults_for(episode.media);
    ActionSpec spec{episode.media};
    PenState pen{episode.start_x, episode.start_y, PenMode::Up};
    PenMode last_mode = PenMode::Up;
    for (std::uint16_t idx : episode.actions) {
        DemoSample s;
        s.reference = &episode.reference;
        s.current = canvas;
        s.pen = pen;
        s.last_mode = last_mode;
        s.action = idx;
        samples.push_back(std::move(s));

        Action a = decode_action(idx, spec);
        int nx = std::clamp(pen.x + a.dx, 0, episode.side - 1);
        int ny = std::clamp(pen.y + a.dy, 0, episode.side - 1);
        if (a.mode != PenMode::Up) render_segment(canvas, pen.x, pen.y, nx, ny, a.mode, brush);
        pen = PenState{nx, ny, a.mode};
        last_mode = a.mode;
    }
    return samples;
}

std::vector<std::vector<std::pair<int, int>>> procedural_stroke_bank(int side, std::size_t count,
                                                                     std::mt19937_64& rng) {
    std::vector<std::vector<std::pair<int, int>>> bank;
    bank.reserve(count);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int max_len = std::max(10, side / 2);
    while (bank.size() < count) {
        double theta = unit(rng) * 2.0 * std::numbers::pi;
        double len = 8.0 + unit(rng) * (max_len - 8.0);
        bool arc = unit(rng) < 0.5;
        double curvature = arc ? (unit(rng) - 0.5) * 2.0 / len : 0.0;
        std::vector<std::pair<int, int>> pts;
        double x = 0.0, y = 0.0, dir = theta;
        pts.emplace_back(0, 0);
        // Points roughly one pen step (5 px) apart along a straight or curved path.
        int steps = std::max(2, static_cast<int>(len / 5.0));
        for (int i = 0; i < steps; ++i) {
            x += 5.0 * std::cos(dir);
            y += 5.0 * std::sin(dir);
            dir += curvature * 5.0;
            pts.emplace_back(static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y)));
        }
        // Dedup consecutive repeats caused by rounding.
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        if (pts.size() >= 2) bank.push_back(std::move(pts));
    }
    return bank;
}

std::vector<std::vector<std::pair<int, int>>> stroke_bank_from_drawings(
    const std::vector<VectorDrawing>& drawings, int side) {
    std::vector<std::vector<std::pair<int, int>>> bank;
    for (const auto& d : drawings) {
        VectorDrawing n = normalize_drawing(d, side);
        for (auto& stroke : n.strokes)
            if (stroke.size() >= 2) bank.push_back(std::move(stroke));
    }
    return bank;
}

// ---- SDQD container ----

namespace {

constexpr char kDataMagic[5] = "SDQD";
constexpr std::uint16_t kDataVersion = 1;
constexpr std::uint16_t kRecordDemoEpisode = 1;
constexpr std::uint16_t kRecordTransition = 2;

void write_canvas(std::ostream& out, const Canvas& c) {
    binio::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(c.media()));
    binio::write_pod<std::int32_t>(out, c.side());
    binio::write_bytes(out, c.pixels());
}

Canvas read_canvas(std::istream& in) {
    auto media = static_cast<MediaType>(binio::read_pod<std::uint8_t>(in));
    auto side = binio::read_pod<std::int32_t>(in);
    Canvas c(side, media);
    auto bytes = binio::read_bytes(in);
    if (bytes.size() != c.pixels().size()) throw DataFormatError("canvas pixel count mismatch");
    c.pixels() = std::move(bytes);
    return c;
}

std::ofstream open_container(const std::string& path, std::uint16_t record_type,
                             std::uint32_t count) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kDataMagic, 4);
    binio::write_pod(out, kDataVersion);
    binio::write_pod(out, record_type);
    binio::write_pod(out, count);
    return out;
}

std::pair<std::ifstream, std::uint32_t> read_container(const std::string& path,
                                                       std::uint16_t expected_type) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    binio::expect_magic(in, kDataMagic, "SDQD container");
    auto version = binio::read_pod<std::uint16_t>(in);
    if (version != kDataVersion)
        throw DataFormatError("unsupported container version " + std::to_string(version));
    auto type = binio::read_pod<std::uint16_t>(in);
    if (type != expected_type) throw DataFormatError("unexpected record type in container");
    auto count = binio::read_pod<std::uint32_t>(in);
    return {std::move(in), count};
}

}  // namespace

void save_demo_dataset(const std::vector<DemoEpisode>& episodes, const std::string& path) {
    auto out = open_container(path, kRecordDemoEpisode,
                              static_cast<std::uint32_t>(episodes.size()));
    for (const auto& ep : episodes) {
        binio::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(ep.media));
        binio::write_pod<std::int32_t>(out, ep.side);
        binio::write_pod<std::int32_t>(out, ep.start_x);
        binio::write_pod<std::int32_t>(out, ep.start_y);
        binio::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ep.actions.size()));
        for (std::uint16_t a : ep.actions) binio::write_pod(out, a);
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<DemoEpisode> load_demo_dataset(const std::string& path) {
    auto [in, count] = read_container(path, kRecordDemoEpisode);
    std::vector<DemoEpisode> episodes;
    episodes.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        DemoEpisode ep;
        ep.media = static_cast<MediaType>(binio::read_pod<std::uint8_t>(in));
        ep.side = binio::read_pod<std::int32_t>(in);
        ep.start_x = binio::read_pod<std::int32_t>(in);
        ep.start_y = binio::read_pod<std::int32_t>(in);
        auto n = binio::read_pod<std::uint32_t>(in);
        ep.actions.resize(n);
        for (auto& a : ep.actions) a = binio::read_pod<std::uint16_t>(in);
        ep.reference = rebuild_reference(ep);
        episodes.push_back(std::move(ep));
    }
    return episodes;
}

void save_replay_snapshot(const std::vector<StoredTransition>& transitions,
                          const std::string& path) {
    auto out = open_container(path, kRecordTransition,
                              static_cast<std::uint32_t>(transitions.size()));
    for (const auto& t : transitions) {
        binio::write_pod(out, t.ref_id);
        write_canvas(out, t.canvas_before);
        binio::write_pod(out, t.pen_x_before);
        binio::write_pod(out, t.pen_y_before);
        binio::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(t.last_mode_before));
        binio::write_pod(out, t.action);
        binio::write_pod(out, t.reward);
        write_canvas(out, t.canvas_after);
        binio::write_pod(out, t.pen_x_after);
        binio::write_pod(out, t.pen_y_after);
        binio::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(t.last_mode_after));
        binio::write_pod<std::uint8_t>(out, t.terminal ? 1 : 0);
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<StoredTransition> load_replay_snapshot(const std::string& path) {
    auto [in, count] = read_container(path, kRecordTransition);
    std::vector<StoredTransition> transitions;
    transitions.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        StoredTransition t;
        t.ref_id = binio::read_pod<std::uint32_t>(in);
        t.canvas_before = read_canvas(in);
        t.pen_x_before = binio::read_pod<std::int16_t>(in);
        t.pen_y_before = binio::read_pod<std::int16_t>(in);
        t.last_mode_before = static_cast<PenMode>(binio::read_pod<std::uint8_t>(in));
        t.action = binio::read_pod<std::uint16_t>(in);
        t.reward = binio::read_pod<double>(in);
        t.canvas_after = read_canvas(in);
        t.pen_x_after = binio::read_pod<std::int16_t>(in);
        t.pen_y_after = binio::read_pod<std::int16_t>(in);
        t.last_mode_after = static_cast<PenMode>(binio::read_pod<std::uint8_t>(in));
        t.terminal = binio::read_pod<std::uint8_t>(in) != 0;
        transitions.push_back(std::move(t));
    }
    return transitions;
}

}  // namespace doodle

#pragma once

#include <cstdint>
#include <istream>
#include <random>
#include <string>
#include <vector>

#include "doodle/canvas.hpp"
#include "doodle/env.hpp"
#include "doodle/replay.hpp"

namespace doodle {

struct VectorDrawing {
    std::vector<std::vector<std::pair<int, int>>> strokes;  // polylines, >= 2 points each
    std::string class_label;
};

struct ParseStats {
    std::size_t parsed = 0;
    std::size_t skipped = 0;
};

// Line-delimited JSON in the QuickDraw simplified-drawing layout:
//   {"word": "...", "drawing": [[[x0,x1,...],[y0,y1,...]], ...]}
// Malformed lines are skipped and counted. Throws EmptyDataset (DataFormatError)
// when nothing parses.
std::vector<VectorDrawing> parse_quickdraw(std::istream& stream, ParseStats* stats = nullptr);
std::vector<VectorDrawing> parse_quickdraw_file(const std::string& path,
                                                ParseStats* stats = nullptr);

// Uniform scale + translation: bounding box fits centered in [margin, side-1-margin]^2,
// aspect preserved, integer coordinates. A degenerate (single point) drawing lands at
// the center.
VectorDrawing normalize_drawing(const VectorDrawing& d, int side, int margin = 2);

// Renders every polyline segment-by-segment onto a blank canvas. `stroke_modes`
// (optional) gives a pen mode per stroke for color media; default is black /
// cycling primaries.
Canvas rasterize_reference(const VectorDrawing& d, int side, MediaType media,
                           const std::vector<PenMode>& stroke_modes = {});

// One supervised pretraining episode: the reference equals the canvas obtained by
// replaying `actions` from the start state, so the ground-truth labels reproduce
// the reference pixel-exactly by construction.
struct DemoEpisode {
    MediaType media = MediaType::Sketch;
    int side = 84;
    int start_x = 0, start_y = 0;
    std::vector<std::uint16_t> actions;  // encoded action indices
    Canvas reference;                    // derived; rebuilt on load
};

// A single (state, action) supervision pair materialized from a DemoEpisode.
struct DemoSample {
    const Canvas* reference = nullptr;
    Canvas current;
    PenState pen;
    PenMode last_mode = PenMode::Up;
    std::uint16_t action = 0;
};

// Greedy action chunking: every emitted step moves max(|dx|,|dy|) <= 5 toward the
// target, largest step first.
std::vector<Action> chunk_move(int dx, int dy, PenMode mode);

struct DemoSynthConfig {
    int side = 84;
    MediaType media = MediaType::Sketch;
    int n_strokes = 2;
    // When > 0, each stroke is placed so its start lies within this Chebyshev
    // distance of the pen (falling back to the nearest on-canvas placement), so
    // every pen-up hop is short and visible in the local patch.
    int max_hop = 0;
    // Number of stationary pen-up actions appended after the last stroke, teaching
    // the imitation policy to idle (reward-neutral) once the drawing is complete.
    int idle_tail = 0;
};

// Randomly places `n_strokes` bank strokes on the canvas and replays them
// point-to-point into ground-truth actions (pen-up repositioning between strokes).
DemoEpisode synthesize_demo_episode(const std::vector<std::vector<std::pair<int, int>>>& bank,
                                    const DemoSynthConfig& cfg, std::mt19937_64& rng);

// Replays the episode's action list, emitting one DemoSample per step.
// `episode.reference` must be populated (see rebuild_reference).
std::vector<DemoSample> materialize_samples(const DemoEpisode& episode);

// Replays actions on a blank canvas to reconstruct the reference image.
Canvas rebuild_reference(const DemoEpisode& episode);

// Procedural stroke bank: straight lines and shallow arcs of assorted lengths.
std::vector<std::vector<std::pair<int, int>>> procedural_stroke_bank(int side, std::size_t count,
                                                                     std::mt19937_64& rng);

// Polyline bank extracted from normalized QuickDraw drawings.
std::vector<std::vector<std::pair<int, int>>> stroke_bank_from_drawings(
    const std::vector<VectorDrawing>& drawings, int side);

// ---- SDQD container (magic "SDQD", version u16, record-type u16, records) ----

void save_demo_dataset(const std::vector<DemoEpisode>& episodes, const std::string& path);
std::vector<DemoEpisode> load_demo_dataset(const std::string& path);

void save_replay_snapshot(const std::vector<StoredTransition>& transitions,
                          const std::string& path);
std::vector<StoredTransition> load_replay_snapshot(const std::string& path);

}  // namespace doodle

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "doodle/canvas.hpp"

namespace doodle {

inline constexpr int kOffsetRange = 5;                         // max |dx|, |dy|
inline constexpr int kMoveGrid = 2 * kOffsetRange + 1;         // 11
inline constexpr int kPositionChoices = kMoveGrid * kMoveGrid; // 121
inline constexpr int kPatchSize = kMoveGrid;                   // local patch = movement range

struct ActionSpec {
    MediaType media = MediaType::Sketch;

    int pen_modes() const { return pen_mode_count(media); }
    int total() const { return kPositionChoices * pen_modes(); }  // 242 or 484
};

struct Action {
    int dx = 0;
    int dy = 0;
    PenMode mode = PenMode::Up;
};

// index = mode * 121 + (dy + 5) * 11 + (dx + 5)
int encode_action(const Action& a, const ActionSpec& spec);
Action decode_action(int index, const ActionSpec& spec);

// Global stream: [canvas (c ch), reference (c ch), distance map, color map], each L x L.
// Local stream: [canvas patch, reference patch], each 11 x 11 x c.
// Channel-major storage (channel, y, x); canvas/reference intensities scaled to [0, 1].
struct Observation {
    int side = 0;
    int canvas_channels = 0;
    std::vector<double> global;  // (2c + 2) * L * L
    std::vector<double> local;   // 2c * 11 * 11

    int global_channels() const { return 2 * canvas_channels + 2; }
    int local_channels() const { return 2 * canvas_channels; }
};

struct RewardParams {
    double step_penalty = -1.0;   // P_step, <= 0
    double color_penalty = -5.0;  // P_color, <= 0
    int min_draw_step = 5;        // Chebyshev pixels
    // End the episode as soon as the canvas matches the reference exactly.
    // Useful in training so completed drawings do not linger as dead frames.
    bool terminate_on_match = false;
};

// D(x, y) = sqrt((x - xo)^2 + (y - yo)^2) / L over the whole grid.
std::vector<double> distance_map(int pen_x, int pen_y, int side);

// Spatially constant channel encoding the pen mode: gray 0/1, color 0/1/2/3.
std::vector<double> color_map(PenMode mode, MediaType media, int side);

// s = sum_ij sum_c (P_ijc - P_ijc_ref)^2 / L^2, pixel values in 0..255 units.
double similarity(const Canvas& canvas, const Canvas& reference);

// Assembles the two-stream observation for an arbitrary canvas/pen snapshot.
Observation make_observation(const Canvas& canvas, const Canvas& reference, int pen_x, int pen_y,
                             PenMode last_mode);

struct StepResult {
    Observation obs;
    double reward = 0.0;
    double reward_pixel = 0.0;    // s_k - s_{k+1} component alone
    bool terminal = false;
};

// One drawing episode: blank canvas vs. a fixed reference, pen stepped by discrete actions.
class Episode {
  public:
    // Pen starts Up at `start` (canvas center by default); brush defaults to the
    // medium's standard brush.
    explicit Episode(Canvas reference, RewardParams params = {}, int max_steps = 100,
                     std::optional<std::pair<int, int>> start = std::nullopt,
                     std::optional<BrushParams> brush = std::nullopt);

    StepResult step(const Action& action);
    Observation observe() const;

    // True iff the last 4 pen positions are identical or form an A,B,A,B cycle.
    bool is_stuck() const;

    const Canvas& canvas() const { return canvas_; }
    const Canvas& reference() const { return reference_; }
    const PenState& pen() const { return pen_; }
    PenMode last_mode() const { return last_mode_; }
    int step_index() const { return step_index_; }
    int max_steps() const { return max_steps_; }
    bool done() const { return step_index_ >= max_steps_; }
    double current_similarity() const { return similarity_; }
    ActionSpec action_spec() const { return ActionSpec{reference_.media()}; }
    const std::array<std::pair<int, int>, 4>& position_history() const { return history_; }

  private:
    Canvas canvas_;
    Canvas reference_;
    PenState pen_;
    PenMode last_mode_ = PenMode::Up;
    RewardParams params_;
    BrushParams brush_;
    int max_steps_ = 100;
    int step_index_ = 0;
    double similarity_ = 0.0;
    std::array<std::pair<int, int>, 4> history_{};
    int history_len_ = 0;

    void push_history(int x, int y);
};

// Supremum of accumulated pixel reward: similarity(blank, reference).
double max_reward(const Canvas& reference);

}  // namespace doodle

#include "doodle/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "doodle/errors.hpp"

namespace doodle {

int encode_action(const Action& a, const ActionSpec& spec) {
    if (std::abs(a.dx) > kOffsetRange || std::abs(a.dy) > kOffsetRange)
        throw std::invalid_argument("action offset out of [-5,5] range");
    int mode = static_cast<int>(a.mode);
    if (mode < 0 || mode >= spec.pen_modes())
        throw std::invalid_argument("pen mode invalid for this medium");
    return mode * kPositionChoices + (a.dy + kOffsetRange) * kMoveGrid + (a.dx + kOffsetRange);
}

Action decode_action(int index, const ActionSpec& spec) {
    if (index < 0 || index >= spec.total())
        throw std::invalid_argument("action index out of range");
    Action a;
    a.mode = static_cast<PenMode>(index / kPositionChoices);
    int pos = index % kPositionChoices;
    a.dy = pos / kMoveGrid - kOffsetRange;
    a.dx = pos % kMoveGrid - kOffsetRange;
    return a;
}

std::vector<double> distance_map(int pen_x, int pen_y, int side) {
    if (pen_x < 0 || pen_x >= side || pen_y < 0 || pen_y >= side)
        throw std::invalid_argument("pen position off canvas");
    std::vector<double> map(static_cast<std::size_t>(side) * side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            map[static_cast<std::size_t>(y) * side + x] =
                std::sqrt(double(x - pen_x) * (x - pen_x) + double(y - pen_y) * (y - pen_y)) / side;
    return map;
}

std::vector<double> color_map(PenMode mode, MediaType media, int side) {
    int v = static_cast<int>(mode);
    if (v < 0 || v >= pen_mode_count(media))
        throw std::invalid_argument("pen mode invalid for this medium");
    return std::vector<double>(static_cast<std::size_t>(side) * side, static_cast<double>(v));
}

double similarity(const Canvas& canvas, const Canvas& reference) {
    if (canvas.side() != reference.side() || canvas.channels() != reference.channels())
        throw std::invalid_argument("similarity: shape mismatch");
    double sum = 0.0;
    const auto& a = canvas.pixels();
    const auto& b = reference.pixels();
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = double(a[i]) - double(b[i]);
        sum += d * d;
    }
    return sum / (double(canvas.side()) * canvas.side());
}

double max_reward(const Canvas& reference) {
    Canvas blank(reference.side(), reference.media());
    return similarity(blank, reference);
}

Episode::Episode(Canvas reference, RewardParams params, int max_steps,
                 std::optional<std::pair<int, int>> start, std::optional<BrushParams> brush)
    : canvas_(reference.side(), reference.media()),
      reference_(std::move(reference)),
      params_(params),
      brush_(brush.value_or(BrushParams::defaults_for(reference_.media()))),
      max_steps_(max_steps) {
    auto [sx, sy] = start.value_or(std::pair{canvas_.side() / 2, canvas_.side() / 2});
    if (!canvas_.contains(sx, sy)) throw std::invalid_argument("start position off canvas");
    pen_ = PenState{sx, sy, PenMode::Up};
    similarity_ = similarity(canvas_, reference_);
    push_history(sx, sy);
}

void Episode::push_history(int x, int y) {
    if (history_len_ < 4) {
        history_[history_len_++] = {x, y};
    } else {
        for (int i = 0; i < 3; ++i) history_[i] = history_[i + 1];
        history_[3] = {x, y};
    }
}

bool Episode::is_stuck() const {
    if (history_len_ < 4) return false;
    bool all_same = history_[0] == history_[1] && history_[1] == history_[2] &&
                    history_[2] == history_[3];
    bool two_cycle = history_[0] == history_[2] && history_[1] == history_[3] &&
                     history_[0] != history_[1];
    return all_same || two_cycle;
}

namespace {

// Nearest primary for a non-background reference pixel; -1 for background.
int color_class(const Canvas& ref, int x, int y) {
    int r = ref.at(x, y, 0), g = ref.at(x, y, 1), b = ref.at(x, y, 2);
    if (std::abs(r - 255) + std::abs(g - 255) + std::abs(b - 255) <= 30) return -1;
    const int primaries[3][3] = {{255, 0, 0}, {0, 255, 0}, {0, 0, 255}};
    int best = 0;
    long best_d = -1;
    for (int k = 0; k < 3; ++k) {
        long d = 0;
        d += long(r - primaries[k][0]) * (r - primaries[k][0]);
        d += long(g - primaries[k][1]) * (g - primaries[k][1]);
        d += long(b - primaries[k][2]) * (b - primaries[k][2]);
        if (best_d < 0 || d < best_d) { best_d = d; best = k; }
    }
    return best;
}

}  // namespace

StepResult Episode::step(const Action& action) {
    if (done()) throw InvalidState("episode already terminal");
    ActionSpec spec = action_spec();
    (void)encode_action(action, spec);  // validates offsets and mode

    int tx = std::clamp(pen_.x + action.dx, 0, canvas_.side() - 1);
    int ty = std::clamp(pen_.y + action.dy, 0, canvas_.side() - 1);
    int moved_x = tx - pen_.x, moved_y = ty - pen_.y;
    int cheb = std::max(std::abs(moved_x), std::abs(moved_y));

    bool drew = action.mode != PenMode::Up;
    if (drew) render_segment(canvas_, pen_.x, pen_.y, tx, ty, action.mode, brush_);

    double new_similarity = drew ? similarity(canvas_, reference_) : similarity_;
    double r_pixel = similarity_ - new_similarity;
    double reward = r_pixel;

    if (drew ? (cheb < params_.min_draw_step) : (moved_x != 0 || moved_y != 0))
        reward += params_.step_penalty;

    if (drew && reference_.media() != MediaType::Sketch) {
        // Color is "incorrect" when no reference pixel under the segment matches the class.
        int wanted = static_cast<int>(action.mode) - 1;  // 0 red, 1 green, 2 blue
        bool found = false;
        for (auto [x, y] : line_pixels(pen_.x, pen_.y, tx, ty)) {
            if (color_class(reference_, x, y) == wanted) { found = true; break; }
        }
        if (!found) reward += params_.color_penalty;
    }

    pen_.x = tx;
    pen_.y = ty;
    pen_.mode = action.mode;
    last_mode_ = action.mode;
    similarity_ = new_similarity;
    push_history(tx, ty);
    ++step_index_;

    StepResult result;
    result.reward = reward;
    result.reward_pixel = r_pixel;
    result.terminal = done() || (params_.terminate_on_match && similarity_ == 0.0);
    result.obs = observe();
    return result;
}

Observation make_observation(const Canvas& canvas, const Canvas& reference, int pen_x, int pen_y,
                             PenMode last_mode) {
    Observation obs;
    obs.side = canvas.side();
    obs.canvas_channels = canvas.channels();

    int side = canvas.side(), c = canvas.channels();
    std::size_t plane = static_cast<std::size_t>(side) * side;
    obs.global.resize(plane * (2 * c + 2));
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) {
                obs.global[ch * plane + y * side + x] = canvas.at(x, y, ch) / 255.0;
                obs.global[(c + ch) * plane + y * side + x] = reference.at(x, y, ch) / 255.0;
            }
    auto dist = distance_map(pen_x, pen_y, side);
    std::copy(dist.begin(), dist.end(), obs.global.begin() + 2 * c * plane);
    auto cmap = color_map(last_mode, canvas.media(), side);
    std::copy(cmap.begin(), cmap.end(), obs.global.begin() + (2 * c + 1) * plane);

    auto canvas_patch = crop_patch(canvas, pen_x, pen_y, kPatchSize);
    auto ref_patch = crop_patch(reference, pen_x, pen_y, kPatchSize);
    std::size_t patch_plane = kPatchSize * kPatchSize;
    obs.local.resize(patch_plane * 2 * c);
    // Patches arrive interleaved (y, x, channel); observation is channel-major.
    for (int ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < patch_plane; ++i) {
            obs.local[ch * patch_plane + i] = canvas_patch[i * c + ch] / 255.0;
            obs.local[(c + ch) * patch_plane + i] = ref_patch[i * c + ch] / 255.0;
        }
    return obs;
}

Observation Episode::observe() const {
    return make_observation(canvas_, reference_, pen_.x, pen_.y, last_mode_);
}

}  // namespace doodle

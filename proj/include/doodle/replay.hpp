#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "doodle/canvas.hpp"
#include "doodle/env.hpp"

namespace doodle {

// Complete binary tree over leaf priorities; internal nodes hold child sums so
// proportional sampling is a log-time prefix descent.
class SumTree {
  public:
    explicit SumTree(std::size_t capacity);

    std::size_t capacity() const { return capacity_; }
    double total() const { return nodes_[0]; }
    double leaf(std::size_t index) const;
    void set_leaf(std::size_t index, double priority);

    // Leaf index whose prefix-sum interval contains `value` in [0, total()).
    std::size_t find_prefix(double value) const;

  private:
    std::size_t capacity_;
    std::size_t leaf_base_;      // index of first leaf in nodes_
    std::vector<double> nodes_;
};

struct PerConfig {
    std::size_t capacity = 20000;
    double alpha = 0.6;
    double epsilon = 0.01;   // priority floor added to |TD error|
};

struct PerSample {
    std::size_t index = 0;
    double weight = 1.0;
};

// Prioritized ring buffer: stores payloads of type T, samples proportionally to
// (|priority| + eps)^alpha with stratified draws and importance weights
// (N * P(i))^-beta, normalized by the batch maximum.
template <typename T>
class ReplayBuffer {
  public:
    explicit ReplayBuffer(PerConfig cfg) : cfg_(cfg), tree_(cfg.capacity) {
        items_.reserve(cfg.capacity);
    }

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return cfg_.capacity; }
    double max_priority() const { return max_priority_; }
    const T& item(std::size_t index) const { return items_[index]; }
    const SumTree& tree() const { return tree_; }

    // Ring insert; the leaf gets (|priority| + eps)^alpha.
    std::size_t insert(T item, double priority) {
        std::size_t slot;
        if (items_.size() < cfg_.capacity) {
            slot = items_.size();
            items_.push_back(std::move(item));
        } else {
            slot = next_;
            items_[slot] = std::move(item);
        }
        next_ = (slot + 1) % cfg_.capacity;
        set_priority(slot, priority);
        return slot;
    }

    void set_priority(std::size_t index, double priority) {
        double p = std::abs(priority) + cfg_.epsilon;
        max_priority_ = std::max(max_priority_, p);
        tree_.set_leaf(index, std::pow(p, cfg_.alpha));
    }

    // Stratified proportional sampling of `batch` indices with IS weights.
    std::vector<PerSample> sample(std::size_t batch, double beta, std::mt19937_64& rng) const {
        std::vector<PerSample> out;
        out.reserve(batch);
        double total = tree_.total();
        if (items_.empty() || total <= 0.0) return out;
        double seg = total / static_cast<double>(batch);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double max_w = 0.0;
        double n = static_cast<double>(items_.size());
        for (std::size_t i = 0; i < batch; ++i) {
            double v = (static_cast<double>(i) + unit(rng)) * seg;
            std::size_t idx = tree_.find_prefix(std::min(v, std::nextafter(total, 0.0)));
            double prob = tree_.leaf(idx) / total;
            double w = std::pow(n * prob, -beta);
            max_w = std::max(max_w, w);
            out.push_back(PerSample{idx, w});
        }
        for (auto& s : out) s.weight /= max_w;
        return out;
    }

  private:
    PerConfig cfg_;
    SumTree tree_;
    std::vector<T> items_;
    std::size_t next_ = 0;
    double max_priority_ = 1.0;
};

// Compact stored transition: canvases as 8-bit pixels, observations rebuilt on
// demand against the shared reference image.
struct StoredTransition {
    std::uint32_t ref_id = 0;
    Canvas canvas_before;
    std::int16_t pen_x_before = 0, pen_y_before = 0;
    PenMode last_mode_before = PenMode::Up;
    std::uint16_t action = 0;
    double reward = 0.0;
    Canvas canvas_after;
    std::int16_t pen_x_after = 0, pen_y_after = 0;
    PenMode last_mode_after = PenMode::Up;
    bool terminal = false;
};

}  // namespace doodle

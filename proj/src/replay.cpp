#include "doodle/replay.hpp"

#include <stdexcept>

namespace doodle {

SumTree::SumTree(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("sum tree capacity must be positive");
    leaf_base_ = 1;
    while (leaf_base_ < capacity) leaf_base_ *= 2;
    nodes_.assign(2 * leaf_base_, 0.0);
    --leaf_base_;  // nodes_[leaf_base_ + i] is leaf i (1-based heap layout shifted to 0)
}

double SumTree::leaf(std::size_t index) const {
    if (index >= capacity_) throw std::invalid_argument("sum tree leaf index out of range");
    return nodes_[leaf_base_ + index];
}

void SumTree::set_leaf(std::size_t index, double priority) {
    if (index >= capacity_) throw std::invalid_argument("sum tree leaf index out of range");
    if (priority < 0.0) throw std::invalid_argument("priority must be non-negative");
    std::size_t node = leaf_base_ + index;
    double delta = priority - nodes_[node];
    nodes_[node] = priority;
    while (node > 0) {
        node = (node - 1) / 2;
        nodes_[node] += delta;
    }
}

std::size_t SumTree::find_prefix(double value) const {
    std::size_t node = 0;
    while (node < leaf_base_) {
        std::size_t left = 2 * node + 1;
        // Prefer the left child on exact boundaries when the right subtree is empty,
        // so sampling never lands on a zero-priority leaf.
        if (value < nodes_[left] || nodes_[left + 1] <= 0.0) {
            node = left;
        } else {
            value -= nodes_[left];
            node = left + 1;
        }
    }
    std::size_t index = node - leaf_base_;
    return index < capacity_ ? index : capacity_ - 1;
}

}  // namespace doodle

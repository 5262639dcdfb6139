#pragma once

#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

#include "hwy/highway_env.hpp"

namespace hwy {

struct Transition {
  Observation s;
  int a = 0;
  double r = 0.0;
  Observation s_next;
  bool done = false;
  ActionMask next_mask{true, true, true};
};

/// Fixed-capacity FIFO ring of transitions with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be > 0");
    items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  void push(Transition t) {
    if (t.a < 0 || t.a >= static_cast<int>(kNumActions)) {
      throw std::invalid_argument("transition action out of range");
    }
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }

  /// i-th oldest transition still stored.
  const Transition& at(std::size_t i) const {
    if (i >= items_.size()) throw std::out_of_range("ReplayBuffer::at");
    return items_[(head_ + i) % items_.size()];
  }

  /// Draws batch transitions uniformly with replacement.
  std::vector<const Transition*> sample(std::size_t batch,
                                        std::mt19937_64& rng) const {
    if (batch == 0 || items_.size() < batch) {
      throw std::logic_error("ReplayBuffer::sample: not enough transitions");
    }
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    std::vector<const Transition*> out(batch);
    for (auto& p : out) p = &items_[pick(rng)];
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // oldest element once the buffer is full
  std::vector<Transition> items_;
};

}  // namespace hwy

#pragma once

#include <vector>

#include "crossflow/rl/input.hpp"
#include "crossflow/rng.hpp"

namespace crossflow::rl {

struct Experience {
  CompactState s;
  int action = 0;
  float reward = 0.0f;
  CompactState s_next;
  bool done = false;
};

// Fixed-capacity ring buffer with uniform with-replacement sampling over the
// current contents.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be > 0");
  }

  void push(Experience e) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(e));
    } else {
      items_[write_] = std::move(e);
    }
    write_ = (write_ + 1) % capacity_;
  }

  std::size_t size() const { return items_.size(); }
  const Experience& at(std::size_t i) const { return items_[i]; }

  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const {
    if (items_.empty()) throw std::logic_error("sampling an empty buffer");
    std::vector<std::size_t> out(batch);
    for (std::size_t i = 0; i < batch; ++i) {
      out[i] = static_cast<std::size_t>(rng.uniform_int(items_.size()));
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t write_ = 0;
  std::vector<Experience> items_;
};

}  // namespace crossflow::rl

#pragma once

#include <string>

#include "crossflow/net/network.hpp"

namespace crossflow::net {

// Parameter files: magic, format version, head kind, action count, a shape
// table, raw little-endian float32 tensors, and a trailing FNV-1a checksum.
struct CheckpointInfo {
  Head head = Head::q_values;
  int n_actions = 0;
};

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { io, format, checksum, mismatch };
  CheckpointError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

void save_params(const Parameters<float>& params, Head head, int n_actions,
                 const std::string& path);

// Reads the header only (for action-space validation before loading).
CheckpointInfo read_checkpoint_info(const std::string& path);

// Loads and verifies against the expected network layout.
Parameters<float> load_params(const std::string& path,
                              const NetworkSpec& expected);

}  // namespace crossflow::net

#include "crossflow/net/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace crossflow::net {

namespace {

constexpr char kMagic[8] = {'C', 'F', 'N', 'E', 'T', '\0', '\0', '\0'};
constexpr uint32_t kVersion = 1;

uint64_t fnv1a(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <class T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T take(const std::string& in, std::size_t& at) {
  if (at + sizeof(T) > in.size()) {
    throw CheckpointError(CheckpointError::Kind::format,
                          "checkpoint truncated");
  }
  T value;
  std::memcpy(&value, in.data() + at, sizeof(T));
  at += sizeof(T);
  return value;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CheckpointError(CheckpointError::Kind::io,
                          "cannot open checkpoint: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct Parsed {
  CheckpointInfo info;
  Parameters<float> params;
};

Parsed parse(const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < sizeof(kMagic) + sizeof(uint64_t) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(CheckpointError::Kind::format,
                          "not a parameter checkpoint: " + path);
  }
  const std::string payload = bytes.substr(0, bytes.size() - sizeof(uint64_t));
  std::size_t at = bytes.size() - sizeof(uint64_t);
  const uint64_t stored = take<uint64_t>(bytes, at);
  if (fnv1a(payload) != stored) {
    throw CheckpointError(CheckpointError::Kind::checksum,
                          "checkpoint checksum mismatch (truncated or corrupt)");
  }

  at = sizeof(kMagic);
  if (take<uint32_t>(payload, at) != kVersion) {
    throw CheckpointError(CheckpointError::Kind::format,
                          "unsupported checkpoint version");
  }
  Parsed out;
  out.info.head = static_cast<Head>(take<uint8_t>(payload, at));
  out.info.n_actions = static_cast<int>(take<uint32_t>(payload, at));
  const uint32_t layers = take<uint32_t>(payload, at);
  std::vector<std::pair<uint32_t, uint32_t>> shapes(layers);
  for (auto& [rows, cols] : shapes) {
    rows = take<uint32_t>(payload, at);
    cols = take<uint32_t>(payload, at);
  }
  for (auto [rows, cols] : shapes) {
    MatX<float> w(rows, cols);
    for (uint32_t j = 0; j < cols; ++j) {
      for (uint32_t i = 0; i < rows; ++i) w(i, j) = take<float>(payload, at);
    }
    VecX<float> b(rows);
    for (uint32_t i = 0; i < rows; ++i) b(i) = take<float>(payload, at);
    out.params.w.push_back(std::move(w));
    out.params.b.push_back(std::move(b));
  }
  if (at != payload.size()) {
    throw CheckpointError(CheckpointError::Kind::format,
                          "checkpoint has trailing bytes");
  }
  return out;
}

}  // namespace

void save_params(const Parameters<float>& params, Head head, int n_actions,
                 const std::string& path) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put<uint32_t>(out, kVersion);
  put<uint8_t>(out, static_cast<uint8_t>(head));
  put<uint32_t>(out, static_cast<uint32_t>(n_actions));
  put<uint32_t>(out, static_cast<uint32_t>(params.w.size()));
  for (const auto& w : params.w) {
    put<uint32_t>(out, static_cast<uint32_t>(w.rows()));
    put<uint32_t>(out, static_cast<uint32_t>(w.cols()));
  }
  for (std::size_t l = 0; l < params.w.size(); ++l) {
    const auto& w = params.w[l];
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) put<float>(out, w(i, j));
    }
    for (Eigen::Index i = 0; i < params.b[l].size(); ++i) {
      put<float>(out, params.b[l](i));
    }
  }
  put<uint64_t>(out, fnv1a(out));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f || !f.write(out.data(), static_cast<std::streamsize>(out.size()))) {
    throw CheckpointError(CheckpointError::Kind::io,
                          "cannot write checkpoint: " + path);
  }
}

CheckpointInfo read_checkpoint_info(const std::string& path) {
  return parse(path).info;
}

Parameters<float> load_params(const std::string& path,
                              const NetworkSpec& expected) {
  Parsed parsed = parse(path);
  if (parsed.info.head != expected.head ||
      parsed.info.n_actions != expected.n_actions) {
    std::ostringstream msg;
    msg << "checkpoint head/action mismatch: file has " << parsed.info.n_actions
        << " actions, expected " << expected.n_actions;
    throw CheckpointError(CheckpointError::Kind::mismatch, msg.str());
  }
  const auto shapes = expected.layer_shapes();
  if (shapes.size() != parsed.params.w.size()) {
    throw CheckpointError(CheckpointError::Kind::mismatch,
                          "checkpoint layer count mismatch");
  }
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    if (parsed.params.w[l].rows() != shapes[l].first ||
        parsed.params.w[l].cols() != shapes[l].second) {
      throw CheckpointError(CheckpointError::Kind::mismatch,
                            "checkpoint tensor shape mismatch");
    }
  }
  return std::move(parsed.params);
}

}  // namespace crossflow::net

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "crossflow/rng.hpp"

namespace crossflow::net {

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct ConvSpec {
  int kernel = 1;
  int stride = 1;
  int out_channels = 1;
};

enum class Head { q_values, policy, value };

// Fixed conv+dense stack: valid convolutions with ReLU, flattened output
// concatenated with the signal vector, ReLU dense chain, one head.
struct NetworkSpec {
  int in_channels = 3;
  int in_h = 24;
  int in_w = 60;
  std::vector<ConvSpec> convs{{4, 2, 16}, {2, 1, 32}};
  int side_dim = 12;
  std::vector<int> dense{512, 256, 128, 64};
  Head head = Head::q_values;
  int n_actions = 8;

  struct Dims {
    int c = 0, h = 0, w = 0;
    int count() const { return c * h * w; }
  };

  std::vector<Dims> conv_out_dims() const {
    std::vector<Dims> out;
    Dims cur{in_channels, in_h, in_w};
    for (const ConvSpec& cs : convs) {
      cur = Dims{cs.out_channels, (cur.h - cs.kernel) / cs.stride + 1,
                 (cur.w - cs.kernel) / cs.stride + 1};
      out.push_back(cur);
    }
    return out;
  }
  int flatten_dim() const {
    const auto dims = conv_out_dims();
    return dims.empty() ? in_channels * in_h * in_w : dims.back().count();
  }
  int dense_input_dim() const { return flatten_dim() + side_dim; }
  int head_dim() const { return head == Head::value ? 1 : n_actions; }

  // (rows, cols) of each weight matrix: convs, dense chain, head.
  std::vector<std::pair<int, int>> layer_shapes() const {
    std::vector<std::pair<int, int>> shapes;
    int c = in_channels;
    for (const ConvSpec& cs : convs) {
      shapes.emplace_back(cs.out_channels, c * cs.kernel * cs.kernel);
      c = cs.out_channels;
    }
    int in = dense_input_dim();
    for (int width : dense) {
      shapes.emplace_back(width, in);
      in = width;
    }
    shapes.emplace_back(head_dim(), in);
    return shapes;
  }

  void validate() const {
    if (in_channels <= 0 || in_h <= 0 || in_w <= 0 || side_dim < 0 ||
        n_actions <= 0) {
      throw std::invalid_argument("network spec: nonpositive dimension");
    }
    Dims cur{in_channels, in_h, in_w};
    for (const ConvSpec& cs : convs) {
      if (cs.kernel <= 0 || cs.stride <= 0 || cs.out_channels <= 0 ||
          cur.h < cs.kernel || cur.w < cs.kernel) {
        throw std::invalid_argument("network spec: conv does not fit input");
      }
      cur = Dims{cs.out_channels, (cur.h - cs.kernel) / cs.stride + 1,
                 (cur.w - cs.kernel) / cs.stride + 1};
    }
    for (int width : dense) {
      if (width <= 0) throw std::invalid_argument("network spec: dense width");
    }
  }

  // The intersection controller stack used by every agent in this project.
  static NetworkSpec controller(Head head, int n_actions) {
    NetworkSpec spec;
    spec.head = head;
    spec.n_actions = n_actions;
    return spec;
  }
};

template <class S>
struct Parameters {
  std::vector<MatX<S>> w;
  std::vector<VecX<S>> b;

  static Parameters zeros(const NetworkSpec& spec) {
    Parameters p;
    for (auto [rows, cols] : spec.layer_shapes()) {
      p.w.push_back(MatX<S>::Zero(rows, cols));
      p.b.push_back(VecX<S>::Zero(rows));
    }
    return p;
  }

  // He-uniform weights, zero biases.
  static Parameters he_uniform(const NetworkSpec& spec, Rng& rng) {
    Parameters p = zeros(spec);
    for (std::size_t l = 0; l < p.w.size(); ++l) {
      const double limit = std::sqrt(6.0 / static_cast<double>(p.w[l].cols()));
      for (Eigen::Index j = 0; j < p.w[l].cols(); ++j) {
        for (Eigen::Index i = 0; i < p.w[l].rows(); ++i) {
          p.w[l](i, j) = static_cast<S>(rng.uniform(-limit, limit));
        }
      }
    }
    return p;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& m : w) n += static_cast<std::size_t>(m.size());
    for (const auto& v : b) n += static_cast<std::size_t>(v.size());
    return n;
  }

  template <class T>
  Parameters<T> cast() const {
    Parameters<T> out;
    for (const auto& m : w) out.w.push_back(m.template cast<T>());
    for (const auto& v : b) out.b.push_back(v.template cast<T>());
    return out;
  }

  bool same_shape(const Parameters& o) const {
    if (w.size() != o.w.size()) return false;
    for (std::size_t l = 0; l < w.size(); ++l) {
      if (w[l].rows() != o.w[l].rows() || w[l].cols() != o.w[l].cols() ||
          b[l].size() != o.b[l].size()) {
        return false;
      }
    }
    return true;
  }
};

template <class S>
struct ForwardCache {
  std::vector<MatX<S>> conv_cols;  // per conv: K x (P*B) patches
  std::vector<MatX<S>> conv_pre;   // per conv: C x (P*B) pre-activations
  std::vector<MatX<S>> dense_in;   // input to each dense layer (plus head)
  std::vector<MatX<S>> dense_pre;  // pre-activations of the dense chain
  MatX<S> head_out;
  int batch = 0;
};

namespace detail {

// Gathers valid-convolution patches, k = c*(kk*kk)+dy*kk+dx, p = oy*OW+ox.
template <class S>
void im2col(const MatX<S>& grid, int sample, int C, int H, int W,
            const ConvSpec& cs, int OH, int OW, MatX<S>& col, int col_offset) {
  const int kk = cs.kernel;
  for (int c = 0; c < C; ++c) {
    for (int dy = 0; dy < kk; ++dy) {
      for (int dx = 0; dx < kk; ++dx) {
        const int krow = c * kk * kk + dy * kk + dx;
        for (int oy = 0; oy < OH; ++oy) {
          const int iy = oy * cs.stride + dy;
          for (int ox = 0; ox < OW; ++ox) {
            const int ix = ox * cs.stride + dx;
            col(krow, col_offset + oy * OW + ox) =
                grid(c * H * W + iy * W + ix, sample);
          }
        }
      }
    }
  }
}

template <class S>
void col2im_add(MatX<S>& grid, int sample, int C, int H, int W,
                const ConvSpec& cs, int OH, int OW, const MatX<S>& dcol,
                int col_offset) {
  const int kk = cs.kernel;
  for (int c = 0; c < C; ++c) {
    for (int dy = 0; dy < kk; ++dy) {
      for (int dx = 0; dx < kk; ++dx) {
        const int krow = c * kk * kk + dy * kk + dx;
        for (int oy = 0; oy < OH; ++oy) {
          const int iy = oy * cs.stride + dy;
          for (int ox = 0; ox < OW; ++ox) {
            const int ix = ox * cs.stride + dx;
            grid(c * H * W + iy * W + ix, sample) +=
                dcol(krow, col_offset + oy * OW + ox);
          }
        }
      }
    }
  }
}

template <class S>
MatX<S> softmax_columns(const MatX<S>& z) {
  MatX<S> p = z;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    const S m = p.col(j).maxCoeff();
    p.col(j) = (p.col(j).array() - m).exp();
    p.col(j) /= p.col(j).sum();
  }
  return p;
}

}  // namespace detail

// Batched forward pass; columns are samples. `grid` is (C*H*W) x B with
// channel-major, row-major flattening; `side` is side_dim x B. Returns
// q-values, action probabilities, or state values depending on the head.
template <class S>
MatX<S> forward(const NetworkSpec& spec, const Parameters<S>& params,
                const MatX<S>& grid, const MatX<S>& side,
                ForwardCache<S>* cache = nullptr) {
  const int B = static_cast<int>(grid.cols());
  if (grid.rows() != spec.in_channels * spec.in_h * spec.in_w ||
      side.rows() != spec.side_dim || side.cols() != B) {
    throw std::invalid_argument("forward: input shape mismatch");
  }
  ForwardCache<S> local;
  ForwardCache<S>& cc = cache ? *cache : local;
  cc.batch = B;
  cc.conv_cols.clear();
  cc.conv_pre.clear();
  cc.dense_in.clear();
  cc.dense_pre.clear();

  MatX<S> act = grid;  // (C*H*W) x B between conv layers
  int C = spec.in_channels, H = spec.in_h, W = spec.in_w;
  std::size_t layer = 0;
  for (const ConvSpec& cs : spec.convs) {
    const int OH = (H - cs.kernel) / cs.stride + 1;
    const int OW = (W - cs.kernel) / cs.stride + 1;
    const int P = OH * OW;
    MatX<S> col(C * cs.kernel * cs.kernel, P * B);
    for (int s = 0; s < B; ++s) {
      detail::im2col(act, s, C, H, W, cs, OH, OW, col, s * P);
    }
    MatX<S> pre = params.w[layer] * col;
    pre.colwise() += params.b[layer];
    cc.conv_cols.push_back(std::move(col));
    cc.conv_pre.push_back(pre);
    // ReLU, then repack (C_out x P*B) into the (C*H*W) x B layout.
    MatX<S> next(cs.out_channels * P, B);
    for (int s = 0; s < B; ++s) {
      for (int c = 0; c < cs.out_channels; ++c) {
        for (int p = 0; p < P; ++p) {
          const S v = pre(c, s * P + p);
          next(c * P + p, s) = v > S(0) ? v : S(0);
        }
      }
    }
    act = std::move(next);
    C = cs.out_channels;
    H = OH;
    W = OW;
    ++layer;
  }

  MatX<S> x(spec.dense_input_dim(), B);
  x.topRows(spec.flatten_dim()) = act;
  if (spec.side_dim > 0) x.bottomRows(spec.side_dim) = side;

  for (std::size_t d = 0; d < spec.dense.size(); ++d, ++layer) {
    cc.dense_in.push_back(x);
    MatX<S> pre = params.w[layer] * x;
    pre.colwise() += params.b[layer];
    cc.dense_pre.push_back(pre);
    x = pre.cwiseMax(S(0));
  }
  cc.dense_in.push_back(x);
  MatX<S> z = params.w[layer] * x;
  z.colwise() += params.b[layer];
  cc.head_out = z;
  if (spec.head == Head::policy) return detail::softmax_columns(z);
  return z;
}

// Reverse pass. `dhead` is the loss gradient at the head's linear output
// (logits for the policy head); callers fold the softmax Jacobian themselves.
template <class S>
Parameters<S> backward(const NetworkSpec& spec, const Parameters<S>& params,
                       const ForwardCache<S>& cache, const MatX<S>& dhead) {
  Parameters<S> grads = Parameters<S>::zeros(spec);
  const int B = cache.batch;
  const std::size_t n_conv = spec.convs.size();
  std::size_t layer = params.w.size() - 1;

  // Head and dense chain.
  MatX<S> delta = dhead;
  grads.w[layer] = delta * cache.dense_in.back().transpose();
  grads.b[layer] = delta.rowwise().sum();
  MatX<S> dx = params.w[layer].transpose() * delta;
  for (std::size_t d = spec.dense.size(); d-- > 0;) {
    --layer;
    delta = dx.cwiseProduct(
        (cache.dense_pre[d].array() > S(0)).template cast<S>().matrix());
    grads.w[layer] = delta * cache.dense_in[d].transpose();
    grads.b[layer] = delta.rowwise().sum();
    dx = params.w[layer].transpose() * delta;
  }

  if (n_conv == 0) return grads;

  // Split off the flattened conv part and walk the convs backwards.
  const auto dims = spec.conv_out_dims();
  MatX<S> dact = dx.topRows(spec.flatten_dim());  // (C*H*W) x B layout
  for (std::size_t k = n_conv; k-- > 0;) {
    const ConvSpec& cs = spec.convs[k];
    const NetworkSpec::Dims out = dims[k];
    const int P = out.h * out.w;
    // Repack to (C_out x P*B) and apply the ReLU mask.
    MatX<S> dpre(out.c, P * B);
    for (int s = 0; s < B; ++s) {
      for (int c = 0; c < out.c; ++c) {
        for (int p = 0; p < P; ++p) {
          dpre(c, s * P + p) = cache.conv_pre[k](c, s * P + p) > S(0)
                                   ? dact(c * P + p, s)
                                   : S(0);
        }
      }
    }
    grads.w[k] = dpre * cache.conv_cols[k].transpose();
    grads.b[k] = dpre.rowwise().sum();
    if (k == 0) break;  // input gradient not needed
    const NetworkSpec::Dims in =
        k >= 1 ? dims[k - 1]
               : NetworkSpec::Dims{spec.in_channels, spec.in_h, spec.in_w};
    MatX<S> dcol = params.w[k].transpose() * dpre;
    MatX<S> dprev = MatX<S>::Zero(in.count(), B);
    for (int s = 0; s < B; ++s) {
      detail::col2im_add(dprev, s, in.c, in.h, in.w, cs, out.h, out.w, dcol,
                         s * P);
    }
    dact = std::move(dprev);
  }
  return grads;
}

}  // namespace crossflow::net

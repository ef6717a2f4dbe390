#pragma once

#include <cmath>

#include "crossflow/net/network.hpp"

namespace crossflow::net {

// Multiplicative step decay: the rate starts high and shrinks as training
// settles (applied per episode by the trainers).
struct LrSchedule {
  double initial = 1e-4;
  double decay = 0.9;
  int every_episodes = 100;

  double at(int episode) const {
    return initial * std::pow(decay, episode / every_episodes);
  }
};

template <class S>
struct AdamState {
  S beta1 = S(0.9);
  S beta2 = S(0.999);
  S eps = S(1e-8);
  long t = 0;
  std::vector<MatX<S>> mw, vw;
  std::vector<VecX<S>> mb, vb;

  static AdamState like(const Parameters<S>& p) {
    AdamState st;
    for (const auto& m : p.w) {
      st.mw.push_back(MatX<S>::Zero(m.rows(), m.cols()));
      st.vw.push_back(MatX<S>::Zero(m.rows(), m.cols()));
    }
    for (const auto& v : p.b) {
      st.mb.push_back(VecX<S>::Zero(v.size()));
      st.vb.push_back(VecX<S>::Zero(v.size()));
    }
    return st;
  }
};

template <class S>
void adam_step(Parameters<S>& params, const Parameters<S>& grads,
               AdamState<S>& st, S lr) {
  if (!params.same_shape(grads)) {
    throw std::invalid_argument("adam_step: gradient shape mismatch");
  }
  ++st.t;
  const S c1 = S(1) - std::pow(st.beta1, S(st.t));
  const S c2 = S(1) - std::pow(st.beta2, S(st.t));
  for (std::size_t l = 0; l < params.w.size(); ++l) {
    st.mw[l] = st.beta1 * st.mw[l] + (S(1) - st.beta1) * grads.w[l];
    st.vw[l] =
        st.beta2 * st.vw[l] + (S(1) - st.beta2) * grads.w[l].cwiseAbs2();
    params.w[l].array() -= lr * (st.mw[l].array() / c1) /
                           ((st.vw[l].array() / c2).sqrt() + st.eps);
    st.mb[l] = st.beta1 * st.mb[l] + (S(1) - st.beta1) * grads.b[l];
    st.vb[l] =
        st.beta2 * st.vb[l] + (S(1) - st.beta2) * grads.b[l].cwiseAbs2();
    params.b[l].array() -= lr * (st.mb[l].array() / c1) /
                           ((st.vb[l].array() / c2).sqrt() + st.eps);
  }
}

}  // namespace crossflow::net

#pragma once

#include <string>
#include <vector>

#include "bon/mat.hpp"
#include "bon/nn.hpp"
#include "bon/rng.hpp"

namespace bon {

/// Gated recurrent unit, fixed convention:
///   z    = sigmoid(Wz x + Uz h + bz)
///   r    = sigmoid(Wr x + Ur h + br)
///   hbar = tanh(Wh x + Uh (r o h) + bh)
///   h'   = (1 - z) o h + z o hbar
/// The update gate mixes toward the candidate: all-zero parameters give
/// h' = 0.5 h.
template <typename T>
struct GruParams {
    Param<T> wz, uz, bz;
    Param<T> wr, ur, br;
    Param<T> wh, uh, bh;

    GruParams() = default;

    /// Zero-initialized shell; values are filled by a checkpoint load.
    GruParams(int input, int hidden, const std::string& prefix)
        : wz(prefix + "wz", hidden, input),
          uz(prefix + "uz", hidden, hidden),
          bz(prefix + "bz", 1, hidden),
          wr(prefix + "wr", hidden, input),
          ur(prefix + "ur", hidden, hidden),
          br(prefix + "br", 1, hidden),
          wh(prefix + "wh", hidden, input),
          uh(prefix + "uh", hidden, hidden),
          bh(prefix + "bh", 1, hidden) {}

    GruParams(int input, int hidden, Rng& rng, const std::string& prefix = "gru.")
        : wz(prefix + "wz", hidden, input),
          uz(prefix + "uz", hidden, hidden),
          bz(prefix + "bz", 1, hidden),
          wr(prefix + "wr", hidden, input),
          ur(prefix + "ur", hidden, hidden),
          br(prefix + "br", 1, hidden),
          wh(prefix + "wh", hidden, input),
          uh(prefix + "uh", hidden, hidden),
          bh(prefix + "bh", 1, hidden) {
        init_matrix(wz, rng);
        init_matrix(uz, rng);
        init_matrix(wr, rng);
        init_matrix(ur, rng);
        init_matrix(wh, rng);
        init_matrix(uh, rng);
    }

    int input_dim() const { return wz.v.cols(); }
    int hidden_dim() const { return wz.v.rows(); }

    std::vector<Param<T>*> params() {
        return {&wz, &uz, &bz, &wr, &ur, &br, &wh, &uh, &bh};
    }
};

/// Activations of one step, retained for the backward pass.
template <typename T>
struct GruCache {
    Vec<T> x, h_prev;
    Vec<T> z, r, rh, hbar, h_new;
};

template <typename T>
void gru_forward(const GruParams<T>& p, const Vec<T>& x, const Vec<T>& h_prev,
                 GruCache<T>& cache) {
    const int H = p.hidden_dim();
    cache.x = x;
    cache.h_prev = h_prev;

    cache.z.assign(static_cast<size_t>(H), T(0));
    gemv_acc(p.wz.v, x, cache.z);
    gemv_acc(p.uz.v, h_prev, cache.z);
    axpy(cache.z, T(1), p.bz.v.data());
    sigmoid_inplace(cache.z);

    cache.r.assign(static_cast<size_t>(H), T(0));
    gemv_acc(p.wr.v, x, cache.r);
    gemv_acc(p.ur.v, h_prev, cache.r);
    axpy(cache.r, T(1), p.br.v.data());
    sigmoid_inplace(cache.r);

    cache.rh.resize(static_cast<size_t>(H));
    for (size_t i = 0; i < cache.rh.size(); ++i) cache.rh[i] = cache.r[i] * h_prev[i];

    cache.hbar.assign(static_cast<size_t>(H), T(0));
    gemv_acc(p.wh.v, x, cache.hbar);
    gemv_acc(p.uh.v, cache.rh, cache.hbar);
    axpy(cache.hbar, T(1), p.bh.v.data());
    tanh_inplace(cache.hbar);

    cache.h_new.resize(static_cast<size_t>(H));
    for (size_t i = 0; i < cache.h_new.size(); ++i) {
        cache.h_new[i] = (T(1) - cache.z[i]) * h_prev[i] + cache.z[i] * cache.hbar[i];
    }
}

/// Backpropagates dh (gradient w.r.t. h_new) through one cached step,
/// accumulating into the parameter grads, dx, and dh_prev. Both outputs must
/// be pre-sized; they are added to, so dh_prev can carry the running gradient
/// of a BPTT sweep.
template <typename T>
void gru_backward(GruParams<T>& p, const GruCache<T>& cache, const Vec<T>& dh, Vec<T>& dx,
                  Vec<T>& dh_prev) {
    const size_t H = static_cast<size_t>(p.hidden_dim());
    Vec<T> dhbar(H), dz(H), dh_acc(H);
    for (size_t i = 0; i < H; ++i) {
        dhbar[i] = dh[i] * cache.z[i];
        dz[i] = dh[i] * (cache.hbar[i] - cache.h_prev[i]);
        dh_acc[i] = dh[i] * (T(1) - cache.z[i]);
    }

    // candidate: hbar = tanh(Wh x + Uh rh + bh)
    Vec<T> dah = tanh_backward(cache.hbar, dhbar);
    outer_acc(p.wh.g, dah, cache.x);
    outer_acc(p.uh.g, dah, cache.rh);
    axpy(p.bh.g, T(1), dah);
    gemv_t_acc(p.wh.v, dah, dx);
    Vec<T> drh(H, T(0));
    gemv_t_acc(p.uh.v, dah, drh);

    Vec<T> dr(H);
    for (size_t i = 0; i < H; ++i) {
        dr[i] = drh[i] * cache.h_prev[i];
        dh_acc[i] += drh[i] * cache.r[i];
    }

    // update gate
    Vec<T> daz = sigmoid_backward(cache.z, dz);
    outer_acc(p.wz.g, daz, cache.x);
    outer_acc(p.uz.g, daz, cache.h_prev);
    axpy(p.bz.g, T(1), daz);
    gemv_t_acc(p.wz.v, daz, dx);
    gemv_t_acc(p.uz.v, daz, dh_acc);

    // reset gate
    Vec<T> dar = sigmoid_backward(cache.r, dr);
    outer_acc(p.wr.g, dar, cache.x);
    outer_acc(p.ur.g, dar, cache.h_prev);
    axpy(p.br.g, T(1), dar);
    gemv_t_acc(p.wr.v, dar, dx);
    gemv_t_acc(p.ur.v, dar, dh_acc);

    axpy(dh_prev, T(1), dh_acc);
}

}  // namespace bon

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "bon/mat.hpp"
#include "bon/rng.hpp"

namespace bon {

/// A learnable tensor: value plus a gradient of identical shape. Gradients
/// accumulate across a step and are zeroed by the optimizer. Vector-shaped
/// parameters (biases) are stored as 1xN matrices.
template <class T>
struct Param {
    std::string name;
    Mat<T> v;
    Mat<T> g;

    Param() = default;
    Param(std::string n, int rows, int cols) : name(std::move(n)), v(rows, cols), g(rows, cols) {}

    void zero_grad() { g.fill(T(0)); }
};

/// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); fan_in is the input dimension
/// (column count) of the matrix.
template <class T>
void init_matrix(Param<T>& p, Rng& rng) {
    const double a = 1.0 / std::sqrt(static_cast<double>(p.v.cols()));
    for (size_t i = 0; i < p.v.size(); ++i) p.v.data()[i] = static_cast<T>(rng.uniform(-a, a));
}

template <class T>
void init_embedding(Param<T>& p, Rng& rng, double range = 0.1) {
    for (size_t i = 0; i < p.v.size(); ++i) p.v.data()[i] = static_cast<T>(rng.uniform(-range, range));
}

// ---------------------------------------------------------------------------
// activations

template <class T>
T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

template <class T>
void sigmoid_inplace(Vec<T>& v) {
    for (T& x : v) x = sigmoid(x);
}

template <class T>
void tanh_inplace(Vec<T>& v) {
    for (T& x : v) x = std::tanh(x);
}

/// dx = g * y * (1 - y), where y = sigmoid(x)
template <class T>
Vec<T> sigmoid_backward(const Vec<T>& y, const Vec<T>& g) {
    Vec<T> dx(y.size());
    for (size_t i = 0; i < y.size(); ++i) dx[i] = g[i] * y[i] * (T(1) - y[i]);
    return dx;
}

/// dx = g * (1 - y^2), where y = tanh(x)
template <class T>
Vec<T> tanh_backward(const Vec<T>& y, const Vec<T>& g) {
    Vec<T> dx(y.size());
    for (size_t i = 0; i < y.size(); ++i) dx[i] = g[i] * (T(1) - y[i] * y[i]);
    return dx;
}

template <class T>
void relu_inplace(Vec<T>& v) {
    for (T& x : v) x = x > T(0) ? x : T(0);
}

/// Max-subtracted softmax; the output sums to 1 up to rounding.
template <class T>
Vec<T> softmax(const Vec<T>& logits) {
    if (logits.empty()) throw std::logic_error("softmax: empty input");
    T m = logits[0];
    for (T x : logits) m = std::max(m, x);
    Vec<T> p(logits.size());
    T z = T(0);
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        z += p[i];
    }
    for (T& x : p) x /= z;
    return p;
}

// ---------------------------------------------------------------------------
// affine layer

/// y = W x + b
template <class T>
Vec<T> affine_forward(const Mat<T>& w, const Vec<T>& x, const Vec<T>& b) {
    if (b.size() != static_cast<size_t>(w.rows())) {
        throw std::logic_error("affine: bias shape mismatch " +
                               detail::shape_str(w.rows(), w.cols()) + " vs " +
                               detail::shape_str(b.size()));
    }
    Vec<T> y = b;
    gemv_acc(w, x, y);
    return y;
}

/// Accumulates dW += g x^T and db += g, and adds W^T g into dx.
template <class T>
void affine_backward(const Mat<T>& w, const Vec<T>& x, const Vec<T>& g, Mat<T>& dw, Vec<T>& db,
                     Vec<T>& dx) {
    outer_acc(dw, g, x);
    axpy(db, T(1), g);
    gemv_t_acc(w, g, dx);
}

// ---------------------------------------------------------------------------
// softmax cross-entropy

/// loss = -log softmax(logits)[target], computed via log-sum-exp.
template <class T>
double cross_entropy_from_logits(const Vec<T>& logits, int target) {
    if (target < 0 || static_cast<size_t>(target) >= logits.size()) {
        throw std::logic_error("cross_entropy: target " + std::to_string(target) +
                               " out of range for " + std::to_string(logits.size()) + " classes");
    }
    T m = logits[0];
    for (T x : logits) m = std::max(m, x);
    double z = 0;
    for (T x : logits) z += std::exp(static_cast<double>(x - m));
    return std::log(z) + static_cast<double>(m) - static_cast<double>(logits[target]);
}

/// Fused backward: dlogits = scale * (softmax(logits) - onehot(target)).
/// Returns the loss.
template <class T>
double softmax_cross_entropy(const Vec<T>& logits, int target, Vec<T>& dlogits, T scale = T(1)) {
    double loss = cross_entropy_from_logits(logits, target);
    Vec<T> p = softmax(logits);
    dlogits.assign(logits.size(), T(0));
    for (size_t i = 0; i < p.size(); ++i) dlogits[i] = scale * p[i];
    dlogits[static_cast<size_t>(target)] -= scale;
    return loss;
}

/// loss = -log p[target], for an already-normalized distribution.
template <class T>
double cross_entropy(const Vec<T>& probs, int target) {
    if (target < 0 || static_cast<size_t>(target) >= probs.size()) {
        throw std::logic_error("cross_entropy: target " + std::to_string(target) +
                               " out of range for " + std::to_string(probs.size()) + " classes");
    }
    return -std::log(static_cast<double>(probs[static_cast<size_t>(target)]));
}

template <class T>
int argmax(const Vec<T>& v) {
    int best = 0;
    for (size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = static_cast<int>(i);
    }
    return best;
}

// ---------------------------------------------------------------------------
// SGD

template <class T>
double global_grad_norm(const std::vector<Param<T>*>& params) {
    double acc = 0;
    for (const Param<T>* p : params) {
        for (size_t i = 0; i < p->g.size(); ++i) {
            const double x = static_cast<double>(p->g.data()[i]);
            acc += x * x;
        }
    }
    return std::sqrt(acc);
}

/// value <- value - lr * grad, with an optional global-norm clip applied to
/// the gradients first. Grads are zeroed afterwards. A non-finite gradient
/// aborts the step before any parameter is touched.
template <class T>
void sgd_step(const std::vector<Param<T>*>& params, double lr, double clip_norm = 0.0) {
    for (const Param<T>* p : params) {
        if (!all_finite(p->g)) {
            throw std::runtime_error("sgd_step: non-finite gradient in parameter " + p->name);
        }
    }
    double scale = 1.0;
    if (clip_norm > 0.0) {
        const double norm = global_grad_norm(params);
        if (norm > clip_norm) scale = clip_norm / norm;
    }
    const double step = lr * scale;
    for (Param<T>* p : params) {
        T* v = p->v.data();
        const T* g = p->g.data();
        for (size_t i = 0; i < p->v.size(); ++i) v[i] -= static_cast<T>(step * static_cast<double>(g[i]));
        p->zero_grad();
    }
}

}  // namespace bon

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bon {

template <class T>
using Vec = std::vector<T>;

/// Dense row-major matrix. Rows are contiguous, so matrix-vector products
/// walk memory linearly.
template <class T>
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols)
        : rows_(rows), cols_(cols), d_(static_cast<size_t>(rows) * static_cast<size_t>(cols), T(0)) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return d_.size(); }

    T* row(int r) { return d_.data() + static_cast<size_t>(r) * cols_; }
    const T* row(int r) const { return d_.data() + static_cast<size_t>(r) * cols_; }

    T& operator()(int r, int c) { return d_[static_cast<size_t>(r) * cols_ + c]; }
    T operator()(int r, int c) const { return d_[static_cast<size_t>(r) * cols_ + c]; }

    T* data() { return d_.data(); }
    const T* data() const { return d_.data(); }

    void fill(T v) { d_.assign(d_.size(), v); }

    bool operator==(const Mat& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && d_ == o.d_;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> d_;
};

namespace detail {
inline std::string shape_str(int r, int c) {
    return "(" + std::to_string(r) + "x" + std::to_string(c) + ")";
}
inline std::string shape_str(size_t n) { return "(" + std::to_string(n) + ")"; }
}  // namespace detail

template <class T>
void require_shape(const Mat<T>& w, const Vec<T>& x, const char* where) {
    if (static_cast<size_t>(w.cols()) != x.size()) {
        throw std::logic_error(std::string(where) + ": shape mismatch " +
                               detail::shape_str(w.rows(), w.cols()) + " vs " +
                               detail::shape_str(x.size()));
    }
}

/// y += W x
template <class T>
void gemv_acc(const Mat<T>& w, const Vec<T>& x, Vec<T>& y) {
    require_shape(w, x, "gemv");
    if (y.size() != static_cast<size_t>(w.rows())) {
        throw std::logic_error("gemv: output shape mismatch " +
                               detail::shape_str(w.rows(), w.cols()) + " vs " +
                               detail::shape_str(y.size()));
    }
    const int rows = w.rows(), cols = w.cols();
    for (int r = 0; r < rows; ++r) {
        const T* wr = w.row(r);
        T acc = T(0);
        for (int c = 0; c < cols; ++c) acc += wr[c] * x[c];
        y[r] += acc;
    }
}

/// y = W x
template <class T>
Vec<T> gemv(const Mat<T>& w, const Vec<T>& x) {
    Vec<T> y(static_cast<size_t>(w.rows()), T(0));
    gemv_acc(w, x, y);
    return y;
}

/// dx += W^T g
template <class T>
void gemv_t_acc(const Mat<T>& w, const Vec<T>& g, Vec<T>& dx) {
    if (static_cast<size_t>(w.rows()) != g.size() || static_cast<size_t>(w.cols()) != dx.size()) {
        throw std::logic_error("gemv_t: shape mismatch " +
                               detail::shape_str(w.rows(), w.cols()) + " vs " +
                               detail::shape_str(g.size()));
    }
    const int rows = w.rows(), cols = w.cols();
    for (int r = 0; r < rows; ++r) {
        const T* wr = w.row(r);
        const T gr = g[r];
        for (int c = 0; c < cols; ++c) dx[c] += gr * wr[c];
    }
}

/// dW += g x^T
template <class T>
void outer_acc(Mat<T>& dw, const Vec<T>& g, const Vec<T>& x) {
    if (static_cast<size_t>(dw.rows()) != g.size() || static_cast<size_t>(dw.cols()) != x.size()) {
        throw std::logic_error("outer: shape mismatch " +
                               detail::shape_str(dw.rows(), dw.cols()) + " vs " +
                               detail::shape_str(g.size()));
    }
    const int rows = dw.rows(), cols = dw.cols();
    for (int r = 0; r < rows; ++r) {
        T* wr = dw.row(r);
        const T gr = g[r];
        for (int c = 0; c < cols; ++c) wr[c] += gr * x[c];
    }
}

/// y += a * x
template <class T>
void axpy(Vec<T>& y, T a, const T* x) {
    for (size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

template <class T>
void axpy(Vec<T>& y, T a, const Vec<T>& x) {
    if (y.size() != x.size()) {
        throw std::logic_error("axpy: shape mismatch " + detail::shape_str(y.size()) +
                               " vs " + detail::shape_str(x.size()));
    }
    axpy(y, a, x.data());
}

/// m += a * x, flattened; used to accumulate bias gradients stored as 1xN.
template <class T>
void axpy(Mat<T>& m, T a, const Vec<T>& x) {
    if (m.size() != x.size()) {
        throw std::logic_error("axpy: shape mismatch " + detail::shape_str(m.rows(), m.cols()) +
                               " vs " + detail::shape_str(x.size()));
    }
    T* y = m.data();
    for (size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

template <class T>
double norm2(const Vec<T>& v) {
    double acc = 0;
    for (T x : v) acc += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(acc);
}

template <class T>
bool all_finite(const Mat<T>& m) {
    for (size_t i = 0; i < m.size(); ++i) {
        if (!std::isfinite(static_cast<double>(m.data()[i]))) return false;
    }
    return true;
}

}  // namespace bon

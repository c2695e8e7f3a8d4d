/*
Copyright 2026 The gcmap Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "gcmap/error.hpp"

namespace gcmap {

/// Row-major dense matrix of doubles.
class DenseMatrix {
  public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        detail::require_shape(data_.size() == rows_ * cols_, "DenseMatrix: data length != rows*cols");
    }
    DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto &r : rows) {
            detail::require_shape(r.size() == cols_, "DenseMatrix: ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double &operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

    std::vector<double> &values() noexcept { return data_; }
    const std::vector<double> &values() const noexcept { return data_; }
    double *data() noexcept { return data_.data(); }
    const double *data() const noexcept { return data_.data(); }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const DenseMatrix &o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

    friend bool operator==(const DenseMatrix &, const DenseMatrix &) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline std::string shape_str(const DenseMatrix &m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline DenseMatrix matmul(const DenseMatrix &a, const DenseMatrix &b) {
    detail::require_shape(a.cols() == b.rows(), "matmul: " + shape_str(a) + " * " + shape_str(b));
    DenseMatrix c(a.rows(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double *ci = c.data() + i * n;
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double *bk = b.data() + k * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

/// aᵀ b without materializing the transpose.
inline DenseMatrix matmul_tn(const DenseMatrix &a, const DenseMatrix &b) {
    detail::require_shape(a.rows() == b.rows(), "matmul_tn: " + shape_str(a) + "^T * " + shape_str(b));
    DenseMatrix c(a.cols(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double *bk = b.data() + k * n;
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = a(k, i);
            if (aki == 0.0) continue;
            double *ci = c.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

/// a bᵀ without materializing the transpose.
inline DenseMatrix matmul_nt(const DenseMatrix &a, const DenseMatrix &b) {
    detail::require_shape(a.cols() == b.cols(), "matmul_nt: " + shape_str(a) + " * " + shape_str(b) + "^T");
    DenseMatrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto ai = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const auto bj = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
            c(i, j) = s;
        }
    }
    return c;
}

inline DenseMatrix transpose(const DenseMatrix &a) {
    DenseMatrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

inline DenseMatrix operator+(const DenseMatrix &a, const DenseMatrix &b) {
    detail::require_shape(a.same_shape(b), "add: " + shape_str(a) + " vs " + shape_str(b));
    DenseMatrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.values()[i] += b.values()[i];
    return c;
}

inline DenseMatrix operator-(const DenseMatrix &a, const DenseMatrix &b) {
    detail::require_shape(a.same_shape(b), "sub: " + shape_str(a) + " vs " + shape_str(b));
    DenseMatrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.values()[i] -= b.values()[i];
    return c;
}

inline DenseMatrix operator*(double s, const DenseMatrix &a) {
    DenseMatrix c = a;
    for (double &v : c.values()) v *= s;
    return c;
}

/// y += alpha * x
inline void axpy(double alpha, const DenseMatrix &x, DenseMatrix &y) {
    detail::require_shape(x.same_shape(y), "axpy: " + shape_str(x) + " vs " + shape_str(y));
    for (std::size_t i = 0; i < y.size(); ++i) y.values()[i] += alpha * x.values()[i];
}

inline DenseMatrix hadamard(const DenseMatrix &a, const DenseMatrix &b) {
    detail::require_shape(a.same_shape(b), "hadamard: " + shape_str(a) + " vs " + shape_str(b));
    DenseMatrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.values()[i] *= b.values()[i];
    return c;
}

inline double sum(const DenseMatrix &a) {
    double s = 0.0;
    for (double v : a.values()) s += v;
    return s;
}

inline double max_abs(const DenseMatrix &a) {
    double m = 0.0;
    for (double v : a.values()) m = std::max(m, std::abs(v));
    return m;
}

inline double max_abs_diff(const DenseMatrix &a, const DenseMatrix &b) {
    detail::require_shape(a.same_shape(b), "max_abs_diff: " + shape_str(a) + " vs " + shape_str(b));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

inline bool all_finite(const DenseMatrix &a) {
    return std::all_of(a.values().begin(), a.values().end(), [](double v) { return std::isfinite(v); });
}

inline DenseMatrix relu(const DenseMatrix &a) {
    DenseMatrix c = a;
    for (double &v : c.values()) v = v > 0.0 ? v : 0.0;
    return c;
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline DenseMatrix row_softmax(const DenseMatrix &a) {
    DenseMatrix s(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto r = a.row(i);
        auto o = s.row(i);
        const double m = *std::max_element(r.begin(), r.end());
        double z = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) z += (o[j] = std::exp(r[j] - m));
        for (double &v : o) v /= z;
    }
    return s;
}

/// Index of the row maximum; ties go to the lowest column.
inline std::vector<int> argmax_rows(const DenseMatrix &a) {
    std::vector<int> out(a.rows(), 0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto r = a.row(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < r.size(); ++j)
            if (r[j] > r[best]) best = j;
        out[i] = static_cast<int>(best);
    }
    return out;
}

inline DenseMatrix concat_rows(const DenseMatrix &top, const DenseMatrix &bottom) {
    if (top.rows() == 0) return bottom;
    if (bottom.rows() == 0) return top;
    detail::require_shape(top.cols() == bottom.cols(),
                          "concat_rows: " + shape_str(top) + " over " + shape_str(bottom));
    std::vector<double> v = top.values();
    v.insert(v.end(), bottom.values().begin(), bottom.values().end());
    return DenseMatrix(top.rows() + bottom.rows(), top.cols(), std::move(v));
}

inline DenseMatrix concat_cols(const DenseMatrix &left, const DenseMatrix &right) {
    detail::require_shape(left.rows() == right.rows(),
                          "concat_cols: " + shape_str(left) + " beside " + shape_str(right));
    DenseMatrix c(left.rows(), left.cols() + right.cols());
    for (std::size_t i = 0; i < c.rows(); ++i) {
        std::copy(left.row(i).begin(), left.row(i).end(), c.row(i).begin());
        std::copy(right.row(i).begin(), right.row(i).end(), c.row(i).begin() + static_cast<std::ptrdiff_t>(left.cols()));
    }
    return c;
}

inline DenseMatrix slice_rows(const DenseMatrix &a, std::size_t begin, std::size_t end) {
    detail::require_shape(begin <= end && end <= a.rows(), "slice_rows: range out of bounds");
    return DenseMatrix(end - begin, a.cols(),
                       std::vector<double>(a.values().begin() + static_cast<std::ptrdiff_t>(begin * a.cols()),
                                           a.values().begin() + static_cast<std::ptrdiff_t>(end * a.cols())));
}

template <typename Index> DenseMatrix gather_rows(const DenseMatrix &a, std::span<const Index> idx) {
    DenseMatrix g(idx.size(), a.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto i = static_cast<std::size_t>(idx[r]);
        detail::require_shape(i < a.rows(), "gather_rows: index out of range");
        std::copy(a.row(i).begin(), a.row(i).end(), g.row(r).begin());
    }
    return g;
}

template <typename Index> DenseMatrix gather_rows(const DenseMatrix &a, const std::vector<Index> &idx) {
    return gather_rows(a, std::span<const Index>(idx));
}

inline DenseMatrix one_hot(std::span<const int> labels, std::size_t num_classes) {
    DenseMatrix y(labels.size(), num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] >= 0) y(i, static_cast<std::size_t>(labels[i])) = 1.0;
    return y;
}

} // namespace gcmap

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
#include <cstdint>
#include <numeric>
#include <vector>

#include "gcmap/dense.hpp"
#include "gcmap/error.hpp"

namespace gcmap {

using Index = std::uint32_t;

struct Triplet {
    Index row;
    Index col;
    double val;
};

/// Compressed sparse row matrix. Column indices are sorted and unique within
/// each row.
struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr{0};
    std::vector<Index> col_idx;
    std::vector<double> vals;

    std::size_t nnz() const noexcept { return col_idx.size(); }

    /// Builds from unordered triplets; duplicate coordinates are summed.
    static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> t) {
        for (const auto &e : t)
            detail::require_data(e.row < rows && e.col < cols, "CsrMatrix: triplet index out of range");
        std::sort(t.begin(), t.end(),
                  [](const Triplet &a, const Triplet &b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
        CsrMatrix m;
        m.rows = rows;
        m.cols = cols;
        m.row_ptr.assign(rows + 1, 0);
        for (std::size_t k = 0; k < t.size(); ++k) {
            if (!m.col_idx.empty() && k > 0 && t[k].row == t[k - 1].row && t[k].col == t[k - 1].col) {
                m.vals.back() += t[k].val;
                continue;
            }
            m.col_idx.push_back(t[k].col);
            m.vals.push_back(t[k].val);
            ++m.row_ptr[t[k].row + 1];
        }
        for (std::size_t i = 0; i < rows; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
        return m;
    }

    static CsrMatrix identity(std::size_t n) {
        CsrMatrix m;
        m.rows = m.cols = n;
        m.row_ptr.resize(n + 1);
        std::iota(m.row_ptr.begin(), m.row_ptr.end(), std::size_t{0});
        m.col_idx.resize(n);
        std::iota(m.col_idx.begin(), m.col_idx.end(), Index{0});
        m.vals.assign(n, 1.0);
        return m;
    }

    static CsrMatrix empty(std::size_t rows, std::size_t cols) {
        CsrMatrix m;
        m.rows = rows;
        m.cols = cols;
        m.row_ptr.assign(rows + 1, 0);
        return m;
    }

    /// Keeps entries with value >= threshold (and nonzero).
    static CsrMatrix from_dense(const DenseMatrix &d, double threshold = 0.0) {
        CsrMatrix m = empty(d.rows(), d.cols());
        for (std::size_t i = 0; i < d.rows(); ++i) {
            for (std::size_t j = 0; j < d.cols(); ++j) {
                const double v = d(i, j);
                if (v != 0.0 && v >= threshold) {
                    m.col_idx.push_back(static_cast<Index>(j));
                    m.vals.push_back(v);
                }
            }
            m.row_ptr[i + 1] = m.col_idx.size();
        }
        return m;
    }

    DenseMatrix to_dense() const {
        DenseMatrix d(rows, cols);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) d(i, col_idx[k]) += vals[k];
        return d;
    }

    std::vector<Triplet> to_triplets() const {
        std::vector<Triplet> t;
        t.reserve(nnz());
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
                t.push_back({static_cast<Index>(i), col_idx[k], vals[k]});
        return t;
    }

    double at(std::size_t i, std::size_t j) const {
        const auto b = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
        const auto e = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
        const auto it = std::lower_bound(b, e, static_cast<Index>(j));
        return (it != e && *it == j) ? vals[static_cast<std::size_t>(it - col_idx.begin())] : 0.0;
    }

    std::size_t row_nnz(std::size_t i) const { return row_ptr[i + 1] - row_ptr[i]; }

    friend bool operator==(const CsrMatrix &, const CsrMatrix &) = default;
};

/// Structural and value well-formedness: monotone row_ptr, in-range sorted
/// unique columns, finite values.
inline void validate(const CsrMatrix &m) {
    detail::require_data(m.row_ptr.size() == m.rows + 1, "csr: row_ptr length != rows+1");
    detail::require_data(m.row_ptr.front() == 0 && m.row_ptr.back() == m.col_idx.size(),
                         "csr: row_ptr endpoints inconsistent with col_idx");
    detail::require_data(m.vals.size() == m.col_idx.size(), "csr: vals/col_idx length mismatch");
    for (std::size_t i = 0; i < m.rows; ++i) {
        detail::require_data(m.row_ptr[i] <= m.row_ptr[i + 1], "csr: row_ptr not monotone");
        for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
            detail::require_data(m.col_idx[k] < m.cols, "csr: column index out of range");
            detail::require_data(k == m.row_ptr[i] || m.col_idx[k - 1] < m.col_idx[k], "csr: columns unsorted");
            detail::require_data(std::isfinite(m.vals[k]), "csr: non-finite value");
        }
    }
}

inline CsrMatrix transpose(const CsrMatrix &m) {
    CsrMatrix t = CsrMatrix::empty(m.cols, m.rows);
    for (Index c : m.col_idx) ++t.row_ptr[c + 1];
    for (std::size_t i = 0; i < t.rows; ++i) t.row_ptr[i + 1] += t.row_ptr[i];
    t.col_idx.resize(m.nnz());
    t.vals.resize(m.nnz());
    std::vector<std::size_t> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
            const std::size_t dst = next[m.col_idx[k]]++;
            t.col_idx[dst] = static_cast<Index>(i);
            t.vals[dst] = m.vals[k];
        }
    }
    return t;
}

/// Exact index/value symmetry.
inline bool is_symmetric(const CsrMatrix &m) {
    if (m.rows != m.cols) return false;
    const CsrMatrix t = transpose(m);
    return t.row_ptr == m.row_ptr && t.col_idx == m.col_idx && t.vals == m.vals;
}

/// Sparse-dense product adj * x. Rows are independent; output is
/// deterministic (fixed accumulation order per row).
inline DenseMatrix spmm(const CsrMatrix &adj, const DenseMatrix &x) {
    detail::require_shape(adj.cols == x.rows(),
                          "spmm: sparse " + std::to_string(adj.rows) + "x" + std::to_string(adj.cols) + " * " +
                              shape_str(x));
    const std::size_t d = x.cols();
    DenseMatrix out(adj.rows, d);
    for (std::size_t i = 0; i < adj.rows; ++i) {
        double *oi = out.data() + i * d;
        for (std::size_t k = adj.row_ptr[i]; k < adj.row_ptr[i + 1]; ++k) {
            const double v = adj.vals[k];
            const double *xj = x.data() + static_cast<std::size_t>(adj.col_idx[k]) * d;
            for (std::size_t c = 0; c < d; ++c) oi[c] += v * xj[c];
        }
    }
    return out;
}

/// adjᵀ * x without materializing the transpose.
inline DenseMatrix spmm_transposed(const CsrMatrix &adj, const DenseMatrix &x) {
    detail::require_shape(adj.rows == x.rows(), "spmm_transposed: shape mismatch");
    const std::size_t d = x.cols();
    DenseMatrix out(adj.cols, d);
    for (std::size_t i = 0; i < adj.rows; ++i) {
        const double *xi = x.data() + i * d;
        for (std::size_t k = adj.row_ptr[i]; k < adj.row_ptr[i + 1]; ++k) {
            const double v = adj.vals[k];
            double *oj = out.data() + static_cast<std::size_t>(adj.col_idx[k]) * d;
            for (std::size_t c = 0; c < d; ++c) oj[c] += v * xi[c];
        }
    }
    return out;
}

/// D̃^{-1/2} (A + I) D̃^{-1/2}, D̃ the row-degree matrix of A + I.
inline CsrMatrix normalize_adjacency(const CsrMatrix &a) {
    detail::require_shape(a.rows == a.cols, "normalize_adjacency: matrix not square");
    const std::size_t n = a.rows;
    CsrMatrix s = CsrMatrix::empty(n, n);
    s.col_idx.reserve(a.nnz() + n);
    s.vals.reserve(a.nnz() + n);
    for (std::size_t i = 0; i < n; ++i) {
        bool placed = false;
        for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
            const Index j = a.col_idx[k];
            if (!placed && j >= i) {
                if (j == i) {
                    s.col_idx.push_back(j);
                    s.vals.push_back(a.vals[k] + 1.0);
                    placed = true;
                    continue;
                }
                s.col_idx.push_back(static_cast<Index>(i));
                s.vals.push_back(1.0);
                placed = true;
            }
            s.col_idx.push_back(j);
            s.vals.push_back(a.vals[k]);
        }
        if (!placed) {
            s.col_idx.push_back(static_cast<Index>(i));
            s.vals.push_back(1.0);
        }
        s.row_ptr[i + 1] = s.col_idx.size();
    }
    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k) deg += s.vals[k];
        inv_sqrt[i] = 1.0 / std::sqrt(deg);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k) s.vals[k] *= inv_sqrt[i] * inv_sqrt[s.col_idx[k]];
    return s;
}

/// Dense counterpart of normalize_adjacency, for dense synthetic structures.
inline DenseMatrix normalize_adjacency_dense(const DenseMatrix &a) {
    detail::require_shape(a.rows() == a.cols(), "normalize_adjacency_dense: matrix not square");
    const std::size_t n = a.rows();
    DenseMatrix s = a;
    for (std::size_t i = 0; i < n; ++i) s(i, i) += 1.0;
    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) deg += s(i, j);
        inv_sqrt[i] = 1.0 / std::sqrt(deg);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s(i, j) *= inv_sqrt[i] * inv_sqrt[j];
    return s;
}

/// Rows [begin, end) of a CSR matrix.
inline CsrMatrix slice_rows(const CsrMatrix &m, std::size_t begin, std::size_t end) {
    detail::require_shape(begin <= end && end <= m.rows, "csr slice_rows: range out of bounds");
    CsrMatrix s = CsrMatrix::empty(end - begin, m.cols);
    for (std::size_t i = begin; i < end; ++i) {
        for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
            s.col_idx.push_back(m.col_idx[k]);
            s.vals.push_back(m.vals[k]);
        }
        s.row_ptr[i - begin + 1] = s.col_idx.size();
    }
    return s;
}

/// [[tl, tr], [bl, br]] from four blocks with chaining dimensions. An empty
/// (0-row or 0-col) block is allowed where the partition is empty.
inline CsrMatrix block2x2(const CsrMatrix &tl, const CsrMatrix &tr, const CsrMatrix &bl, const CsrMatrix &br) {
    detail::require_shape(tl.rows == tr.rows && bl.rows == br.rows && tl.cols == bl.cols && tr.cols == br.cols,
                          "block2x2: block dimensions do not chain");
    const std::size_t top = tl.rows, left = tl.cols;
    CsrMatrix m = CsrMatrix::empty(top + bl.rows, left + tr.cols);
    m.col_idx.reserve(tl.nnz() + tr.nnz() + bl.nnz() + br.nnz());
    m.vals.reserve(m.col_idx.capacity());
    auto append_row = [&](const CsrMatrix &l, const CsrMatrix &r, std::size_t i) {
        for (std::size_t k = l.row_ptr[i]; k < l.row_ptr[i + 1]; ++k) {
            m.col_idx.push_back(l.col_idx[k]);
            m.vals.push_back(l.vals[k]);
        }
        for (std::size_t k = r.row_ptr[i]; k < r.row_ptr[i + 1]; ++k) {
            m.col_idx.push_back(static_cast<Index>(left + r.col_idx[k]));
            m.vals.push_back(r.vals[k]);
        }
    };
    for (std::size_t i = 0; i < top; ++i) {
        append_row(tl, tr, i);
        m.row_ptr[i + 1] = m.col_idx.size();
    }
    for (std::size_t i = 0; i < bl.rows; ++i) {
        append_row(bl, br, i);
        m.row_ptr[top + i + 1] = m.col_idx.size();
    }
    return m;
}

} // namespace gcmap

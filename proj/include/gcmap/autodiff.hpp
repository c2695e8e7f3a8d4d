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

// Reverse-mode differentiation over dense matrices.
//
// A Tape is an append-only list of nodes. Every op evaluates its forward value
// eagerly and registers a backward rule that reads the node's accumulated
// gradient and adds into its operands' gradients. Node ids are topologically
// ordered by construction, so backward() is a single reverse sweep.
//
// Constants (requires_grad == false) never allocate gradient buffers, and ops
// whose operands are all constant skip registering a backward rule.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "gcmap/dense.hpp"
#include "gcmap/error.hpp"
#include "gcmap/sparse.hpp"

namespace gcmap::ad {

class Tape;

/// Handle to a tape node.
struct Var {
    Tape *tape = nullptr;
    std::size_t id = 0;
};

class Tape {
  public:
    using Backward = std::function<void(Tape &, std::size_t self)>;

    Tape() = default;
    Tape(const Tape &) = delete;
    Tape &operator=(const Tape &) = delete;

    Var leaf(DenseMatrix value) { return push(std::move(value), true, nullptr); }
    Var constant(DenseMatrix value) { return push(std::move(value), false, nullptr); }

    /// Appends an op result. `backward` is dropped when no operand needs a
    /// gradient.
    Var record(DenseMatrix value, bool requires_grad, Backward backward) {
        return push(std::move(value), requires_grad, requires_grad ? std::move(backward) : nullptr);
    }

    const DenseMatrix &value(Var v) const { return nodes_.at(v.id).value; }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Gradient of the last backward() loss w.r.t. `v`; zeros if unreached.
    DenseMatrix grad(Var v) const {
        const Node &n = nodes_.at(v.id);
        if (n.grad.empty() && !n.value.empty()) return DenseMatrix(n.value.rows(), n.value.cols());
        return n.grad;
    }

    /// Gradient buffer of node `id` during a backward sweep (empty if unreached).
    const DenseMatrix &upstream(std::size_t id) const { return nodes_[id].grad; }

    /// Adds `g` into the gradient of node `id` if it requires one.
    void accumulate(std::size_t id, const DenseMatrix &g) {
        Node &n = nodes_[id];
        if (!n.requires_grad) return;
        if (n.grad.empty()) {
            n.grad = g;
            return;
        }
        axpy(1.0, g, n.grad);
    }

    void backward(Var loss) {
        detail::require_shape(loss.tape == this, "backward: loss belongs to another tape");
        const DenseMatrix &lv = nodes_.at(loss.id).value;
        detail::require_shape(lv.rows() == 1 && lv.cols() == 1, "backward: loss must be 1x1, got " + shape_str(lv));
        for (Node &n : nodes_) n.grad = DenseMatrix();
        if (!nodes_[loss.id].requires_grad) return;
        nodes_[loss.id].grad = DenseMatrix(1, 1, 1.0);
        for (std::size_t id = loss.id + 1; id-- > 0;) {
            Node &n = nodes_[id];
            if (n.backward && !n.grad.empty()) n.backward(*this, id);
        }
    }

  private:
    struct Node {
        DenseMatrix value;
        DenseMatrix grad;
        bool requires_grad = false;
        Backward backward;
    };

    Var push(DenseMatrix value, bool requires_grad, Backward backward) {
        nodes_.push_back(Node{std::move(value), DenseMatrix(), requires_grad, std::move(backward)});
        return Var{this, nodes_.size() - 1};
    }

    std::vector<Node> nodes_;
};

namespace detail {

inline Tape &tape_of(Var a) {
    gcmap::detail::require_shape(a.tape != nullptr, "autodiff: null Var");
    return *a.tape;
}

inline Tape &tape_of(Var a, Var b) {
    gcmap::detail::require_shape(a.tape != nullptr && a.tape == b.tape, "autodiff: operands on different tapes");
    return *a.tape;
}

} // namespace detail

inline const DenseMatrix &value(Var v) { return detail::tape_of(v).value(v); }

inline Var add(Var a, Var b) {
    Tape &t = detail::tape_of(a, b);
    const std::size_t ia = a.id, ib = b.id;
    return t.record(t.value(a) + t.value(b), t.requires_grad(a) || t.requires_grad(b), [ia, ib](Tape &tp, std::size_t s) {
        tp.accumulate(ia, tp.upstream(s));
        tp.accumulate(ib, tp.upstream(s));
    });
}

inline Var sub(Var a, Var b) {
    Tape &t = detail::tape_of(a, b);
    const std::size_t ia = a.id, ib = b.id;
    return t.record(t.value(a) - t.value(b), t.requires_grad(a) || t.requires_grad(b), [ia, ib](Tape &tp, std::size_t s) {
        tp.accumulate(ia, tp.upstream(s));
        tp.accumulate(ib, -1.0 * tp.upstream(s));
    });
}

inline Var scalar_mul(Var a, double k) {
    Tape &t = detail::tape_of(a);
    const std::size_t ia = a.id;
    return t.record(k * t.value(a), t.requires_grad(a),
                    [ia, k](Tape &tp, std::size_t s) { tp.accumulate(ia, k * tp.upstream(s)); });
}

inline Var add_scalar(Var a, double k) {
    Tape &t = detail::tape_of(a);
    DenseMatrix v = t.value(a);
    for (double &x : v.values()) x += k;
    const std::size_t ia = a.id;
    return t.record(std::move(v), t.requires_grad(a),
                    [ia](Tape &tp, std::size_t s) { tp.accumulate(ia, tp.upstream(s)); });
}

inline Var matmul(Var a, Var b) {
    Tape &t = detail::tape_of(a, b);
    const std::size_t ia = a.id, ib = b.id;
    return t.record(gcmap::matmul(t.value(a), t.value(b)), t.requires_grad(a) || t.requires_grad(b),
                    [ia, ib](Tape &tp, std::size_t s) {
                        const DenseMatrix &g = tp.upstream(s);
                        if (tp.requires_grad(Var{&tp, ia})) tp.accumulate(ia, matmul_nt(g, tp.value(Var{&tp, ib})));
                        if (tp.requires_grad(Var{&tp, ib})) tp.accumulate(ib, matmul_tn(tp.value(Var{&tp, ia}), g));
                    });
}

inline Var transpose(Var a) {
    Tape &t = detail::tape_of(a);
    const std::size_t ia = a.id;
    return t.record(gcmap::transpose(t.value(a)), t.requires_grad(a),
                    [ia](Tape &tp, std::size_t s) { tp.accumulate(ia, gcmap::transpose(tp.upstream(s))); });
}

/// Elementwise product.
inline Var hadamard(Var a, Var b) {
    Tape &t = detail::tape_of(a, b);
    const std::size_t ia = a.id, ib = b.id;
    return t.record(gcmap::hadamard(t.value(a), t.value(b)), t.requires_grad(a) || t.requires_grad(b),
                    [ia, ib](Tape &tp, std::size_t s) {
                        const DenseMatrix &g = tp.upstream(s);
                        if (tp.requires_grad(Var{&tp, ia}))
                            tp.accumulate(ia, gcmap::hadamard(g, tp.value(Var{&tp, ib})));
                        if (tp.requires_grad(Var{&tp, ib}))
                            tp.accumulate(ib, gcmap::hadamard(g, tp.value(Var{&tp, ia})));
                    });
}

/// Subgradient 0 at the kink.
inline Var relu(Var a) {
    Tape &t = detail::tape_of(a);
    const std::size_t ia = a.id;
    return t.record(gcmap::relu(t.value(a)), t.requires_grad(a), [ia](Tape &tp, std::size_t s) {
        DenseMatrix g = tp.upstream(s);
        const DenseMatrix &x = tp.value(Var{&tp, ia});
        for (std::size_t k = 0; k < g.size(); ++k)
            if (!(x.values()[k] > 0.0)) g.values()[k] = 0.0;
        tp.accumulate(ia, g);
    });
}

inline Var sigmoid(Var a) {
    Tape &t = detail::tape_of(a);
    DenseMatrix v = t.value(a);
    for (double &x : v.values()) x = gcmap::sigmoid(x);
    const std::size_t ia = a.id;
    return t.record(std::move(v), t.requires_grad(a), [ia](Tape &tp, std::size_t s) {
        DenseMatrix g = tp.upstream(s);
        const DenseMatrix &y = tp.value(Var{&tp, s});
        for (std::size_t k = 0; k < g.size(); ++k) g.values()[k] *= y.values()[k] * (1.0 - y.values()[k]);
        tp.accumulate(ia, g);
    });
}

inline Var row_softmax(Var a) {
    Tape &t = detail::tape_of(a);
    const std::size_t ia = a.id;
    return t.record(gcmap::row_softmax(t.value(a)), t.requires_grad(a), [ia](Tape &tp, std::size_t s) {
        const DenseMatrix &g = tp.upstream(s);
        const DenseMatrix &y = tp.value(Var{&tp, s});
        DenseMatrix out(y.rows(), y.cols());
        for (std::size_t i = 0; i < y.rows(); ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
            for (std::size_t j = 0; j < y.cols(); ++j) out(i, j) = y(i, j) * (g(i, j) - dot);
        }
        tp.accumulate(ia, out);
    });
}

inline Var concat_cols(Var a, Var b) {
    Tape &t = detail::tape_of(a, b);
    const std::size_t ia = a.id, ib = b.id, ca = t.value(a).cols();
    return t.record(gcmap::concat_cols(t.value(a), t.value(b)), t.requires_grad(a) || t.requires_grad(b),
                    [ia, ib, ca](Tape &tp, std::size_t s) {
                        const DenseMatrix &g = tp.upstream(s);
                        DenseMatrix ga(g.rows(), ca), gb(g.rows(), g.cols() - ca);
                        for (std::size_t i = 0; i < g.rows(); ++i) {
                            for (std::size_t j = 0; j < ca; ++j) ga(i, j) = g(i, j);
                            for (std::size_t j = ca; j < g.cols(); ++j) gb(i, j - ca) = g(i, j);
                        }
                        tp.accumulate(ia, ga);
                        tp.accumulate(ib, gb);
                    });
}

inline Var concat_rows(Var a, Var b) {
    Tape &t = detail::tape_of(a, b);
    const std::size_t ia = a.id, ib = b.id, ra = t.value(a).rows();
    gcmap::detail::require_shape(t.value(a).cols() == t.value(b).cols() || t.value(a).rows() == 0 ||
                                     t.value(b).rows() == 0,
                                 "concat_rows: column counts differ");
    return t.record(gcmap::concat_rows(t.value(a), t.value(b)), t.requires_grad(a) || t.requires_grad(b),
                    [ia, ib, ra](Tape &tp, std::size_t s) {
                        const DenseMatrix &g = tp.upstream(s);
                        tp.accumulate(ia, gcmap::slice_rows(g, 0, ra));
                        tp.accumulate(ib, gcmap::slice_rows(g, ra, g.rows()));
                    });
}

inline Var slice_rows(Var a, std::size_t begin, std::size_t end) {
    Tape &t = detail::tape_of(a);
    const std::size_t ia = a.id, rows = t.value(a).rows(), cols = t.value(a).cols();
    return t.record(gcmap::slice_rows(t.value(a), begin, end), t.requires_grad(a),
                    [ia, begin, rows, cols](Tape &tp, std::size_t s) {
                        const DenseMatrix &g = tp.upstream(s);
                        DenseMatrix full(rows, cols);
                        std::copy(g.values().begin(), g.values().end(),
                                  full.values().begin() + static_cast<std::ptrdiff_t>(begin * cols));
                        tp.accumulate(ia, full);
                    });
}

/// out[r] = a[idx[r]]; backward scatter-adds.
inline Var gather_rows(Var a, std::vector<Index> idx) {
    Tape &t = detail::tape_of(a);
    const std::size_t ia = a.id, rows = t.value(a).rows(), cols = t.value(a).cols();
    DenseMatrix v = gcmap::gather_rows(t.value(a), idx);
    return t.record(std::move(v), t.requires_grad(a), [ia, rows, cols, idx = std::move(idx)](Tape &tp, std::size_t s) {
        const DenseMatrix &g = tp.upstream(s);
        DenseMatrix full(rows, cols);
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t j = 0; j < cols; ++j) full(idx[r], j) += g(r, j);
        tp.accumulate(ia, full);
    });
}

/// Row-major reinterpretation.
inline Var reshape(Var a, std::size_t rows, std::size_t cols) {
    Tape &t = detail::tape_of(a);
    const DenseMatrix &av = t.value(a);
    gcmap::detail::require_shape(rows * cols == av.size(), "reshape: element count changes");
    const std::size_t ia = a.id, r0 = av.rows(), c0 = av.cols();
    return t.record(DenseMatrix(rows, cols, av.values()), t.requires_grad(a), [ia, r0, c0](Tape &tp, std::size_t s) {
        tp.accumulate(ia, DenseMatrix(r0, c0, tp.upstream(s).values()));
    });
}

/// a (n x k) plus a 1 x k row vector broadcast over rows.
inline Var add_row_broadcast(Var a, Var bias) {
    Tape &t = detail::tape_of(a, bias);
    const DenseMatrix &av = t.value(a), &bv = t.value(bias);
    gcmap::detail::require_shape(bv.rows() == 1 && bv.cols() == av.cols(), "add_row_broadcast: bias must be 1 x cols");
    DenseMatrix v = av;
    for (std::size_t i = 0; i < v.rows(); ++i)
        for (std::size_t j = 0; j < v.cols(); ++j) v(i, j) += bv(0, j);
    const std::size_t ia = a.id, ib = bias.id;
    return t.record(std::move(v), t.requires_grad(a) || t.requires_grad(bias), [ia, ib](Tape &tp, std::size_t s) {
        const DenseMatrix &g = tp.upstream(s);
        tp.accumulate(ia, g);
        if (tp.requires_grad(Var{&tp, ib})) {
            DenseMatrix gb(1, g.cols());
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
            tp.accumulate(ib, gb);
        }
    });
}

inline Var sum(Var a) {
    Tape &t = detail::tape_of(a);
    const std::size_t ia = a.id, r = t.value(a).rows(), c = t.value(a).cols();
    return t.record(DenseMatrix(1, 1, gcmap::sum(t.value(a))), t.requires_grad(a), [ia, r, c](Tape &tp, std::size_t s) {
        tp.accumulate(ia, DenseMatrix(r, c, tp.upstream(s)(0, 0)));
    });
}

/// Σ_rows ‖row‖₂. A zero row takes subgradient 0.
inline Var row_l2_sum(Var a) {
    Tape &t = detail::tape_of(a);
    const DenseMatrix &av = t.value(a);
    std::vector<double> norms(av.rows());
    double total = 0.0;
    for (std::size_t i = 0; i < av.rows(); ++i) {
        double s2 = 0.0;
        for (double x : av.row(i)) s2 += x * x;
        norms[i] = std::sqrt(s2);
        total += norms[i];
    }
    const std::size_t ia = a.id;
    return t.record(DenseMatrix(1, 1, total), t.requires_grad(a),
                    [ia, norms = std::move(norms)](Tape &tp, std::size_t s) {
                        const double g = tp.upstream(s)(0, 0);
                        const DenseMatrix &x = tp.value(Var{&tp, ia});
                        DenseMatrix out(x.rows(), x.cols());
                        for (std::size_t i = 0; i < x.rows(); ++i) {
                            if (norms[i] == 0.0) continue;
                            for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = g * x(i, j) / norms[i];
                        }
                        tp.accumulate(ia, out);
                    });
}

/// Σ_columns (1 − cos(a_col, b_col)). A column with zero norm on either side
/// contributes 1 with zero gradient.
inline Var cosine_columns(Var a, Var b) {
    Tape &t = detail::tape_of(a, b);
    const DenseMatrix &av = t.value(a), &bv = t.value(b);
    gcmap::detail::require_shape(av.same_shape(bv), "cosine_columns: " + shape_str(av) + " vs " + shape_str(bv));
    const std::size_t cols = av.cols();
    std::vector<double> na(cols, 0.0), nb(cols, 0.0), dot(cols, 0.0);
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            na[j] += av(i, j) * av(i, j);
            nb[j] += bv(i, j) * bv(i, j);
            dot[j] += av(i, j) * bv(i, j);
        }
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
        na[j] = std::sqrt(na[j]);
        nb[j] = std::sqrt(nb[j]);
        const double c = (na[j] > 0.0 && nb[j] > 0.0) ? dot[j] / (na[j] * nb[j]) : 0.0;
        total += 1.0 - c;
    }
    const std::size_t ia = a.id, ib = b.id;
    return t.record(DenseMatrix(1, 1, total), t.requires_grad(a) || t.requires_grad(b),
                    [ia, ib, na = std::move(na), nb = std::move(nb), dot = std::move(dot)](Tape &tp, std::size_t s) {
                        const double g = tp.upstream(s)(0, 0);
                        const DenseMatrix &x = tp.value(Var{&tp, ia});
                        const DenseMatrix &y = tp.value(Var{&tp, ib});
                        DenseMatrix gx(x.rows(), x.cols()), gy(y.rows(), y.cols());
                        for (std::size_t j = 0; j < x.cols(); ++j) {
                            if (na[j] == 0.0 || nb[j] == 0.0) continue;
                            const double inv = 1.0 / (na[j] * nb[j]);
                            const double c = dot[j] * inv;
                            for (std::size_t i = 0; i < x.rows(); ++i) {
                                gx(i, j) = -g * (y(i, j) * inv - c * x(i, j) / (na[j] * na[j]));
                                gy(i, j) = -g * (x(i, j) * inv - c * y(i, j) / (nb[j] * nb[j]));
                            }
                        }
                        if (tp.requires_grad(Var{&tp, ia})) tp.accumulate(ia, gx);
                        if (tp.requires_grad(Var{&tp, ib})) tp.accumulate(ib, gy);
                    });
}

/// Constant sparse matrix times a Var. The sparse operand is shared, not
/// copied, so large adjacencies can be reused across tapes.
inline Var const_spmm_left(std::shared_ptr<const CsrMatrix> m, Var x) {
    Tape &t = detail::tape_of(x);
    const std::size_t ix = x.id;
    DenseMatrix v = spmm(*m, t.value(x));
    return t.record(std::move(v), t.requires_grad(x),
                    [ix, m = std::move(m)](Tape &tp, std::size_t s) { tp.accumulate(ix, spmm_transposed(*m, tp.upstream(s))); });
}

/// x_ij / Σ_k x_ik. Rows must have nonzero sums.
inline Var row_normalize(Var a) {
    Tape &t = detail::tape_of(a);
    const DenseMatrix &av = t.value(a);
    std::vector<double> sums(av.rows(), 0.0);
    DenseMatrix v = av;
    for (std::size_t i = 0; i < av.rows(); ++i) {
        for (double x : av.row(i)) sums[i] += x;
        gcmap::detail::require_shape(sums[i] != 0.0, "row_normalize: zero row sum");
        for (double &x : v.row(i)) x /= sums[i];
    }
    const std::size_t ia = a.id;
    return t.record(std::move(v), t.requires_grad(a), [ia, sums = std::move(sums)](Tape &tp, std::size_t s) {
        const DenseMatrix &g = tp.upstream(s);
        const DenseMatrix &y = tp.value(Var{&tp, s});
        DenseMatrix out(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.rows(); ++i) {
            double gy = 0.0;
            for (std::size_t j = 0; j < g.cols(); ++j) gy += g(i, j) * y(i, j);
            for (std::size_t j = 0; j < g.cols(); ++j) out(i, j) = (g(i, j) - gy) / sums[i];
        }
        tp.accumulate(ia, out);
    });
}

/// D̃^{-1/2}(A + I)D̃^{-1/2} for a dense square A, D̃ the row sums of A + I.
inline Var normalize_adjacency(Var a) {
    Tape &t = detail::tape_of(a);
    const DenseMatrix &av = t.value(a);
    gcmap::detail::require_shape(av.rows() == av.cols(), "normalize_adjacency: matrix not square");
    const std::size_t n = av.rows();
    std::vector<double> deg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (double x : av.row(i)) deg[i] += x;
        deg[i] += 1.0;
    }
    DenseMatrix v = gcmap::normalize_adjacency_dense(av);
    const std::size_t ia = a.id;
    return t.record(std::move(v), t.requires_grad(a), [ia, deg = std::move(deg)](Tape &tp, std::size_t s) {
        const DenseMatrix &g = tp.upstream(s);
        const DenseMatrix &y = tp.value(Var{&tp, s});
        const std::size_t n = y.rows();
        std::vector<double> gd(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double gy = g(i, j) * y(i, j);
                gd[i] += gy;
                gd[j] += gy;
            }
        DenseMatrix out(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            const double ri = 1.0 / std::sqrt(deg[i]);
            const double di = -0.5 * gd[i] / deg[i];
            for (std::size_t j = 0; j < n; ++j) out(i, j) = g(i, j) * ri / std::sqrt(deg[j]) + di;
        }
        tp.accumulate(ia, out);
    });
}

/// Row-wise inner products: out[i] = <a_i, b_i>, shape n x 1.
inline Var rowwise_dot(Var a, Var b) {
    Tape &t = detail::tape_of(a, b);
    const DenseMatrix &av = t.value(a), &bv = t.value(b);
    gcmap::detail::require_shape(av.same_shape(bv), "rowwise_dot: " + shape_str(av) + " vs " + shape_str(bv));
    DenseMatrix v(av.rows(), 1);
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < av.cols(); ++j) v(i, 0) += av(i, j) * bv(i, j);
    const std::size_t ia = a.id, ib = b.id;
    return t.record(std::move(v), t.requires_grad(a) || t.requires_grad(b), [ia, ib](Tape &tp, std::size_t s) {
        const DenseMatrix &g = tp.upstream(s);
        const DenseMatrix &x = tp.value(Var{&tp, ia});
        const DenseMatrix &y = tp.value(Var{&tp, ib});
        DenseMatrix gx(x.rows(), x.cols()), gy(y.rows(), y.cols());
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j) {
                gx(i, j) = g(i, 0) * y(i, j);
                gy(i, j) = g(i, 0) * x(i, j);
            }
        tp.accumulate(ia, gx);
        tp.accumulate(ib, gy);
    });
}

/// Mean over rows of the binary cross-entropy of sigmoid(score) against a 0/1
/// target, computed from logits. Rows whose weight is 0 still count in the
/// mean's denominator.
inline Var bce_with_logits(Var scores, std::vector<double> targets, std::vector<double> weights) {
    Tape &t = detail::tape_of(scores);
    const DenseMatrix &sv = t.value(scores);
    gcmap::detail::require_shape(sv.cols() == 1 && targets.size() == sv.rows() && weights.size() == sv.rows(),
                                 "bce_with_logits: scores must be n x 1 with n targets and weights");
    gcmap::detail::require_shape(sv.rows() > 0, "bce_with_logits: empty batch");
    const double n = static_cast<double>(sv.rows());
    double total = 0.0;
    for (std::size_t i = 0; i < sv.rows(); ++i) {
        const double z = sv(i, 0);
        total += weights[i] * (targets[i] * softplus(-z) + (1.0 - targets[i]) * softplus(z));
    }
    const std::size_t is = scores.id;
    return t.record(DenseMatrix(1, 1, total / n), t.requires_grad(scores),
                    [is, n, targets = std::move(targets), weights = std::move(weights)](Tape &tp, std::size_t s) {
                        const double g = tp.upstream(s)(0, 0);
                        const DenseMatrix &z = tp.value(Var{&tp, is});
                        DenseMatrix out(z.rows(), 1);
                        for (std::size_t i = 0; i < z.rows(); ++i)
                            out(i, 0) = g * weights[i] * (gcmap::sigmoid(z(i, 0)) - targets[i]) / n;
                        tp.accumulate(is, out);
                    });
}

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t excluded = 0;  ///< entries where one-sided differences disagree (kinks)
};

/// Compares backward() against central differences of a scalar function of
/// one matrix input. Relative error per entry is
/// |analytic − central| / (|central| + 1e-12). Entries at which the forward
/// and backward one-sided differences disagree are treated as
/// non-differentiable points and excluded.
inline GradCheckResult grad_check(const std::function<Var(Tape &, Var)> &f, const DenseMatrix &x, double eps) {
    gcmap::detail::require_shape(eps > 0.0, "grad_check: eps must be > 0");
    DenseMatrix analytic;
    {
        Tape tape;
        Var xv = tape.leaf(x);
        Var loss = f(tape, xv);
        tape.backward(loss);
        analytic = tape.grad(xv);
    }
    auto eval = [&](const DenseMatrix &xx) {
        Tape tape;
        Var xv = tape.leaf(xx);
        return tape.value(f(tape, xv))(0, 0);
    };
    const double f0 = eval(x);
    GradCheckResult r;
    DenseMatrix probe = x;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double orig = probe.values()[k];
        probe.values()[k] = orig + eps;
        const double fp = eval(probe);
        probe.values()[k] = orig - eps;
        const double fm = eval(probe);
        probe.values()[k] = orig;
        const double fwd = (fp - f0) / eps, bwd = (f0 - fm) / eps;
        const double gap = std::abs(fwd - bwd);
        if (gap > 1e3 * eps && gap > 0.1 * std::max(std::abs(fwd), std::abs(bwd))) {
            ++r.excluded;
            continue;
        }
        const double central = (fp - fm) / (2.0 * eps);
        const double rel = std::abs(analytic.values()[k] - central) / (std::abs(central) + 1e-12);
        r.max_rel_error = std::max(r.max_rel_error, rel);
        ++r.checked;
    }
    return r;
}

} // namespace gcmap::ad

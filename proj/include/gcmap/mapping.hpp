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

// Original-to-synthetic node mapping: initialization, row normalization, the
// transductive and inductive losses, connection of inductive nodes to the
// synthetic graph, and post-training sparsification.

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gcmap/autodiff.hpp"
#include "gcmap/condense.hpp"
#include "gcmap/dense.hpp"
#include "gcmap/error.hpp"
#include "gcmap/graph.hpp"
#include "gcmap/relay.hpp"
#include "gcmap/sparse.hpp"

namespace gcmap {

inline constexpr double kDefaultMappingEps = 1e-5;

/// Trainable pre-normalization mapping, N x N'.
struct MappingMatrix {
    DenseMatrix raw;
    double eps = kDefaultMappingEps;
};

enum class BatchMode { Node, Graph };

inline BatchMode parse_batch_mode(const std::string &s) {
    if (s == "node" || s == "node_batch") return BatchMode::Node;
    if (s == "graph" || s == "graph_batch") return BatchMode::Graph;
    throw DataError("unknown batch mode '" + s + "' (expected node or graph)");
}

inline const char *to_string(BatchMode m) { return m == BatchMode::Node ? "node" : "graph"; }

/// Class-aware start: `match` where Y_i == Y'_j, `mismatch` elsewhere
/// (σ(−40) ≈ 4e-18, i.e. zero after normalization).
inline MappingMatrix init_mapping(std::span<const int> labels, std::span<const int> y_prime, double match = 1.0,
                                  double mismatch = -40.0) {
    std::vector<char> in_prime;
    for (int c : y_prime) {
        detail::require_data(c >= 0, "init_mapping: synthetic labels must be >= 0");
        if (static_cast<std::size_t>(c) >= in_prime.size()) in_prime.resize(static_cast<std::size_t>(c) + 1, 0);
        in_prime[static_cast<std::size_t>(c)] = 1;
    }
    MappingMatrix m;
    m.raw = DenseMatrix(labels.size(), y_prime.size(), mismatch);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 0) continue;
        detail::require_data(static_cast<std::size_t>(y) < in_prime.size() && in_prime[static_cast<std::size_t>(y)],
                             "init_mapping: class " + std::to_string(y) + " present in Y but absent in Y'");
        for (std::size_t j = 0; j < y_prime.size(); ++j)
            if (y_prime[j] == y) m.raw(i, j) = match;
    }
    return m;
}

/// Uninformed start, raw entries uniform in [-1, 1).
inline MappingMatrix init_mapping_random(std::size_t n, std::size_t n_prime, Rng &rng) {
    MappingMatrix m;
    m.raw = DenseMatrix(n, n_prime);
    for (double &v : m.raw.values()) v = uniform(rng, -1.0, 1.0);
    return m;
}

/// M̂_i = ReLU(σ(M_i) / Σ_j σ(M_ij) − ε), row by row.
inline DenseMatrix normalize_mapping(const DenseMatrix &raw, double eps = kDefaultMappingEps) {
    DenseMatrix out(raw.rows(), raw.cols());
    for (std::size_t i = 0; i < raw.rows(); ++i) {
        double z = 0.0;
        for (std::size_t j = 0; j < raw.cols(); ++j) z += (out(i, j) = sigmoid(raw(i, j)));
        for (double &v : out.row(i)) v = std::max(0.0, v / z - eps);
    }
    return out;
}

inline DenseMatrix normalize_mapping(const MappingMatrix &m) { return normalize_mapping(m.raw, m.eps); }

/// Σ_rows ‖row‖₂.
inline double l21_norm(const DenseMatrix &x) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double s = 0.0;
        for (double v : x.row(i)) s += v * v;
        total += std::sqrt(s);
    }
    return total;
}

/// (1/N) ‖H − M̂ H'‖_{2,1}.
inline double transductive_loss(const DenseMatrix &h, const DenseMatrix &h_prime, const DenseMatrix &m_hat) {
    detail::require_shape(m_hat.rows() == h.rows() && m_hat.cols() == h_prime.rows() && h.cols() == h_prime.cols(),
                          "transductive_loss: shapes H " + shape_str(h) + ", H' " + shape_str(h_prime) + ", M " +
                              shape_str(m_hat) + " do not chain");
    detail::require_data(h.rows() > 0, "transductive_loss: no original nodes");
    return l21_norm(h - matmul(m_hat, h_prime)) / static_cast<double>(h.rows());
}

/// (1/n) ‖H_sup − H'_sup‖_{2,1}.
inline double inductive_loss(const DenseMatrix &h_sup, const DenseMatrix &h_sup_synthetic) {
    detail::require_shape(h_sup.same_shape(h_sup_synthetic), "inductive_loss: " + shape_str(h_sup) + " vs " +
                                                                 shape_str(h_sup_synthetic));
    detail::require_data(h_sup.rows() > 0, "inductive_loss: no support nodes");
    return l21_norm(h_sup - h_sup_synthetic) / static_cast<double>(h_sup.rows());
}

/// L_M = L_tra + β L_ind.
inline double mapping_loss(double l_tra, double l_ind, double beta) {
    detail::require_data(beta >= 0.0, "mapping_loss: beta must be >= 0");
    return l_tra + beta * l_ind;
}

/// Sparse product a (n x N) times sparse b (N x N'), dense row accumulator.
inline CsrMatrix spgemm(const CsrMatrix &a, const CsrMatrix &b) {
    detail::require_shape(a.cols == b.rows, "spgemm: inner dimensions differ");
    CsrMatrix c = CsrMatrix::empty(a.rows, b.cols);
    std::vector<double> acc(b.cols, 0.0);
    std::vector<char> touched(b.cols, 0);
    std::vector<Index> cols;
    for (std::size_t i = 0; i < a.rows; ++i) {
        cols.clear();
        for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
            const double av = a.vals[k];
            const Index r = a.col_idx[k];
            for (std::size_t q = b.row_ptr[r]; q < b.row_ptr[r + 1]; ++q) {
                const Index j = b.col_idx[q];
                if (!touched[j]) {
                    touched[j] = 1;
                    cols.push_back(j);
                }
                acc[j] += av * b.vals[q];
            }
        }
        std::sort(cols.begin(), cols.end());
        for (Index j : cols) {
            c.col_idx.push_back(j);
            c.vals.push_back(acc[j]);
            acc[j] = 0.0;
            touched[j] = 0;
        }
        c.row_ptr[i + 1] = c.col_idx.size();
    }
    return c;
}

/// Connected structure for n inductive nodes attached to an m-node host
/// graph: adjacency (m+n) x (m+n) and stacked features. Normalization with
/// self-loops is left to the caller.
template <typename Adj> struct Assembly {
    Adj adj;
    DenseMatrix features;
};

namespace detail {

inline CsrMatrix batch_tilde(const IncrementalBatch &batch, BatchMode mode) {
    if (mode == BatchMode::Node) return CsrMatrix::empty(batch.size(), batch.size());
    require_data(batch.a_tilde.has_value(), "graph-batch mode requires a_tilde");
    return *batch.a_tilde;
}

} // namespace detail

/// [[A', (aM)ᵀ], [aM, ã]] with ã zeroed in node-batch mode; features [X'; x].
/// Sparse path used at inference.
inline Assembly<CsrMatrix> assemble_inductive(const CsrMatrix &a_prime, const CsrMatrix &mapping,
                                              const DenseMatrix &x_prime, const IncrementalBatch &batch,
                                              BatchMode mode) {
    detail::require_shape(a_prime.rows == a_prime.cols && a_prime.rows == mapping.cols && x_prime.rows() == a_prime.rows,
                          "assemble_inductive: synthetic dimensions do not chain");
    detail::require_data(batch.a.cols == mapping.rows, "unknown original node id: batch references " +
                                                           std::to_string(batch.a.cols) + " original nodes, mapping has " +
                                                           std::to_string(mapping.rows));
    detail::require_data(batch.size() == 0 || batch.x.cols() == x_prime.cols(), "d mismatch: batch features have " +
                                                                                    std::to_string(batch.x.cols()) +
                                                                                    " columns, synthetic graph has " +
                                                                                    std::to_string(x_prime.cols()));
    if (batch.size() == 0) return {a_prime, x_prime};
    const CsrMatrix am = spgemm(batch.a, mapping);
    return {block2x2(a_prime, transpose(am), am, detail::batch_tilde(batch, mode)), concat_rows(x_prime, batch.x)};
}

/// Same assembly against the original graph: [[A, aᵀ], [a, ã]].
inline Assembly<CsrMatrix> assemble_original(const SparseGraph &g, const IncrementalBatch &batch, BatchMode mode) {
    detail::require_data(batch.a.cols == g.num_nodes(), "unknown original node id: batch references " +
                                                            std::to_string(batch.a.cols) + " nodes, graph has " +
                                                            std::to_string(g.num_nodes()));
    detail::require_data(batch.size() == 0 || batch.x.cols() == g.num_features(), "d mismatch: batch features");
    if (batch.size() == 0) return {g.adj, g.features};
    return {block2x2(g.adj, transpose(batch.a), batch.a, detail::batch_tilde(batch, mode)),
            concat_rows(g.features, batch.x)};
}

/// Dense assembly with a dense mapping, used during training.
inline Assembly<DenseMatrix> assemble_inductive(const DenseMatrix &a_prime, const DenseMatrix &m_hat,
                                                const DenseMatrix &x_prime, const IncrementalBatch &batch,
                                                BatchMode mode) {
    detail::require_shape(a_prime.rows() == a_prime.cols() && a_prime.rows() == m_hat.cols() &&
                              x_prime.rows() == a_prime.rows(),
                          "assemble_inductive: synthetic dimensions do not chain");
    detail::require_data(batch.a.cols == m_hat.rows(), "unknown original node id in batch");
    if (batch.size() == 0) return {a_prime, x_prime};
    const DenseMatrix am = spmm(batch.a, m_hat);
    const DenseMatrix tilde = detail::batch_tilde(batch, mode).to_dense();
    return {concat_rows(concat_cols(a_prime, transpose(am)), concat_cols(am, tilde)), concat_rows(x_prime, batch.x)};
}

struct SparsifiedSynthetic {
    CsrMatrix a_prime;
    CsrMatrix mapping;
    std::size_t empty_mapping_rows = 0;  ///< original nodes that lost every mapping entry
};

/// Drops entries below μ from A' and below δ from M̂; survivors keep their
/// values. An all-zero A' is an error; mapping rows that become empty are
/// counted (the caller decides whether to warn).
inline SparsifiedSynthetic sparsify(const DenseMatrix &a_prime, const DenseMatrix &m_hat, double mu, double delta) {
    detail::require_data(mu >= 0.0 && mu < 1.0 && delta >= 0.0 && delta < 1.0, "sparsify: thresholds must be in [0, 1)");
    SparsifiedSynthetic s;
    s.a_prime = CsrMatrix::from_dense(a_prime, mu);
    detail::require_data(s.a_prime.nnz() > 0 || a_prime.size() == 0,
                         "sparsify: A' is all-zero after thresholding at mu=" + std::to_string(mu));
    s.mapping = CsrMatrix::from_dense(m_hat, delta);
    for (std::size_t i = 0; i < s.mapping.rows; ++i) s.empty_mapping_rows += s.mapping.row_nnz(i) == 0;
    return s;
}

/// Threshold an already-sparse matrix (keeps entries >= threshold).
inline CsrMatrix threshold(const CsrMatrix &m, double thr) {
    CsrMatrix s = CsrMatrix::empty(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k)
            if (m.vals[k] != 0.0 && m.vals[k] >= thr) {
                s.col_idx.push_back(m.col_idx[k]);
                s.vals.push_back(m.vals[k]);
            }
        s.row_ptr[i + 1] = s.col_idx.size();
    }
    return s;
}

/// Fraction of structurally zero entries.
inline double sparsity(const CsrMatrix &m) {
    const double total = static_cast<double>(m.rows) * static_cast<double>(m.cols);
    return total == 0.0 ? 0.0 : 1.0 - static_cast<double>(m.nnz()) / total;
}

namespace ad {

inline Var normalize_mapping(Var raw, double eps) {
    return relu(add_scalar(row_normalize(sigmoid(raw)), -eps));
}

inline Var transductive_loss(const DenseMatrix &h, const DenseMatrix &h_prime, Var m_hat) {
    Tape &t = *m_hat.tape;
    gcmap::detail::require_data(h.rows() > 0, "transductive_loss: no original nodes");
    Var diff = sub(t.constant(h), matmul(m_hat, t.constant(h_prime)));
    return scalar_mul(row_l2_sum(diff), 1.0 / static_cast<double>(h.rows()));
}

/// Support-node embeddings propagated over the synthetic assembly, as a
/// function of M̂. A', X' and the relay are constant.
inline Var support_embeddings(Var m_hat, const DenseMatrix &a_prime, const DenseMatrix &x_prime,
                              std::shared_ptr<const CsrMatrix> a_sup, const DenseMatrix &x_sup,
                              const DenseMatrix &a_tilde, const RelayWeights &relay, std::size_t depth) {
    Tape &t = *m_hat.tape;
    const std::size_t n_prime = a_prime.rows(), n = x_sup.rows();
    Var am = const_spmm_left(std::move(a_sup), m_hat);
    Var top = concat_cols(t.constant(a_prime), transpose(am));
    Var bottom = concat_cols(am, t.constant(a_tilde));
    Var a_norm = normalize_adjacency(concat_rows(top, bottom));
    Var p = t.constant(concat_rows(x_prime, x_sup));
    for (std::size_t l = 0; l < depth; ++l) p = matmul(a_norm, p);
    return sgc_embeddings(slice_rows(p, n_prime, n_prime + n), relay);
}

inline Var inductive_loss(const DenseMatrix &h_sup, Var h_sup_synthetic) {
    Tape &t = *h_sup_synthetic.tape;
    gcmap::detail::require_data(h_sup.rows() > 0, "inductive_loss: no support nodes");
    return scalar_mul(row_l2_sum(sub(t.constant(h_sup), h_sup_synthetic)), 1.0 / static_cast<double>(h_sup.rows()));
}

struct MappingLossVars {
    Var total;
    Var tra;
    Var ind;
    Var m_hat;
};

/// Inputs that stay fixed during the mapping phase.
struct MappingLossInputs {
    const DenseMatrix *h = nullptr;        ///< original-graph embeddings
    const DenseMatrix *h_prime = nullptr;  ///< synthetic-graph embeddings
    const DenseMatrix *a_prime = nullptr;  ///< dense A'
    const DenseMatrix *x_prime = nullptr;
    std::shared_ptr<const CsrMatrix> a_sup;  ///< support links into the original graph
    const DenseMatrix *x_sup = nullptr;
    const DenseMatrix *a_sup_tilde = nullptr;  ///< support interconnections (zeros for node batch)
    const DenseMatrix *h_sup = nullptr;        ///< support embeddings on the original assembly
    const RelayWeights *relay = nullptr;
    std::size_t depth = 2;
    double beta = 100.0;
    double eps = kDefaultMappingEps;
};

/// L_M = L_tra + β L_ind as a function of the raw mapping.
inline MappingLossVars mapping_loss(Var raw, const MappingLossInputs &in) {
    Var m_hat = normalize_mapping(raw, in.eps);
    Var tra = transductive_loss(*in.h, *in.h_prime, m_hat);
    if (in.beta == 0.0 || in.x_sup == nullptr || in.x_sup->rows() == 0) {
        Tape &t = *raw.tape;
        return {tra, tra, t.constant(DenseMatrix(1, 1)), m_hat};
    }
    Var h_syn = support_embeddings(m_hat, *in.a_prime, *in.x_prime, in.a_sup, *in.x_sup, *in.a_sup_tilde, *in.relay,
                                   in.depth);
    Var ind = inductive_loss(*in.h_sup, h_syn);
    return {add(tra, scalar_mul(ind, in.beta)), tra, ind, m_hat};
}

} // namespace ad
} // namespace gcmap

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

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gcmap/dense.hpp"
#include "gcmap/error.hpp"
#include "gcmap/sparse.hpp"

namespace gcmap {

/// Attributed graph: adjacency, node features and (optionally) labels.
/// Label -1 marks an unlabeled node.
struct SparseGraph {
    CsrMatrix adj;
    DenseMatrix features;
    std::vector<int> labels;
    std::size_t num_classes = 0;
    bool directed = false;

    std::size_t num_nodes() const noexcept { return adj.rows; }
    std::size_t num_features() const noexcept { return features.cols(); }
    bool has_labels() const noexcept { return !labels.empty(); }

    /// Undirected edges counted once (self-loops count once); directed: nnz.
    std::size_t num_edges() const {
        if (directed) return adj.nnz();
        std::size_t loops = 0;
        for (std::size_t i = 0; i < adj.rows; ++i)
            for (std::size_t k = adj.row_ptr[i]; k < adj.row_ptr[i + 1]; ++k) loops += adj.col_idx[k] == i;
        return (adj.nnz() - loops) / 2 + loops;
    }

    friend bool operator==(const SparseGraph &, const SparseGraph &) = default;
};

inline void validate(const SparseGraph &g) {
    validate(g.adj);
    detail::require_data(g.adj.rows == g.adj.cols, "graph: adjacency not square");
    detail::require_data(g.features.rows() == g.num_nodes(), "graph: feature rows != num_nodes");
    detail::require_data(all_finite(g.features), "graph: non-finite feature");
    for (double v : g.adj.vals) detail::require_data(v > 0.0, "graph: edge weight must be > 0");
    if (!g.directed) detail::require_data(is_symmetric(g.adj), "graph: undirected adjacency is not symmetric");
    if (g.has_labels()) {
        detail::require_data(g.labels.size() == g.num_nodes(), "graph: labels length != num_nodes");
        for (int y : g.labels)
            detail::require_data(y >= -1 && y < static_cast<int>(g.num_classes), "label out of range");
    }
}

/// Inductive nodes arriving at test time: their links into an N-node graph,
/// their features and optionally their links among themselves.
struct IncrementalBatch {
    CsrMatrix a;                       ///< n x N
    DenseMatrix x;                     ///< n x d
    std::optional<CsrMatrix> a_tilde;  ///< n x n, symmetric, no self-edges
    std::vector<int> labels;           ///< optional ground truth, for scoring only

    std::size_t size() const noexcept { return x.rows(); }
};

inline void validate(const IncrementalBatch &b, std::size_t original_nodes, std::size_t num_features) {
    validate(b.a);
    detail::require_data(b.a.rows == b.size(), "batch: a rows != n");
    detail::require_data(b.a.cols == original_nodes, "unknown original node id: batch.a has " +
                                                         std::to_string(b.a.cols) + " columns, graph has " +
                                                         std::to_string(original_nodes) + " nodes");
    detail::require_data(b.x.cols() == num_features || b.size() == 0, "batch: feature width mismatch");
    if (b.a_tilde) {
        validate(*b.a_tilde);
        detail::require_data(b.a_tilde->rows == b.size() && b.a_tilde->cols == b.size(), "batch: a_tilde not n x n");
        detail::require_data(is_symmetric(*b.a_tilde), "batch: a_tilde not symmetric");
        for (std::size_t i = 0; i < b.a_tilde->rows; ++i)
            detail::require_data(b.a_tilde->at(i, i) == 0.0, "batch: self-edge among inductive nodes");
    }
    if (!b.labels.empty()) detail::require_data(b.labels.size() == b.size(), "batch: labels length != n");
}

/// Node-id lists of a train/validation/test partition.
struct Splits {
    std::vector<Index> train;
    std::vector<Index> val;
    std::vector<Index> test;

    friend bool operator==(const Splits &, const Splits &) = default;
};

struct GraphBundle {
    SparseGraph graph;
    Splits splits;
};

/// Subgraph induced by `ids`; node k of the result is ids[k].
inline SparseGraph induced_subgraph(const SparseGraph &g, const std::vector<Index> &ids) {
    std::unordered_map<Index, Index> pos;
    pos.reserve(ids.size() * 2);
    for (std::size_t k = 0; k < ids.size(); ++k) {
        detail::require_data(ids[k] < g.num_nodes(), "induced_subgraph: node id out of range");
        detail::require_data(pos.emplace(ids[k], static_cast<Index>(k)).second, "induced_subgraph: duplicate node id");
    }
    std::vector<Triplet> t;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        const Index u = ids[k];
        for (std::size_t e = g.adj.row_ptr[u]; e < g.adj.row_ptr[u + 1]; ++e) {
            const auto it = pos.find(g.adj.col_idx[e]);
            if (it != pos.end()) t.push_back({static_cast<Index>(k), it->second, g.adj.vals[e]});
        }
    }
    SparseGraph s;
    s.adj = CsrMatrix::from_triplets(ids.size(), ids.size(), std::move(t));
    s.features = gather_rows(g.features, ids);
    if (g.has_labels()) {
        s.labels.reserve(ids.size());
        for (Index u : ids) s.labels.push_back(g.labels[u]);
    }
    s.num_classes = g.num_classes;
    s.directed = g.directed;
    return s;
}

/// Cuts an incremental batch out of a full graph: `base` lists the nodes that
/// form the N-node graph the batch attaches to (column k of `a` is base[k]);
/// `batch` lists the inductive nodes. Links to nodes in neither list are
/// dropped. a_tilde is always filled; node-batch evaluation ignores it.
inline IncrementalBatch make_incremental_batch(const SparseGraph &full, const std::vector<Index> &base,
                                               const std::vector<Index> &batch) {
    std::unordered_map<Index, Index> base_pos, batch_pos;
    for (std::size_t k = 0; k < base.size(); ++k) base_pos.emplace(base[k], static_cast<Index>(k));
    for (std::size_t k = 0; k < batch.size(); ++k) batch_pos.emplace(batch[k], static_cast<Index>(k));
    std::vector<Triplet> ta, tt;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const Index u = batch[k];
        detail::require_data(u < full.num_nodes(), "make_incremental_batch: node id out of range");
        for (std::size_t e = full.adj.row_ptr[u]; e < full.adj.row_ptr[u + 1]; ++e) {
            const Index v = full.adj.col_idx[e];
            if (auto it = base_pos.find(v); it != base_pos.end())
                ta.push_back({static_cast<Index>(k), it->second, full.adj.vals[e]});
            else if (auto jt = batch_pos.find(v); jt != batch_pos.end() && v != u)
                tt.push_back({static_cast<Index>(k), jt->second, full.adj.vals[e]});
        }
    }
    IncrementalBatch b;
    b.a = CsrMatrix::from_triplets(batch.size(), base.size(), std::move(ta));
    b.a_tilde = CsrMatrix::from_triplets(batch.size(), batch.size(), std::move(tt));
    b.x = gather_rows(full.features, batch);
    if (full.has_labels())
        for (Index u : batch) b.labels.push_back(full.labels[u]);
    return b;
}

} // namespace gcmap

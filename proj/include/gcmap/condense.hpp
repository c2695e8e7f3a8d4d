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

// Synthetic-graph side of condensation: label layout, the affinity MLP that
// derives A' from X', gradient matching and the link-reconstruction loss.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include "gcmap/autodiff.hpp"
#include "gcmap/dense.hpp"
#include "gcmap/error.hpp"
#include "gcmap/graph.hpp"
#include "gcmap/relay.hpp"
#include "gcmap/rng.hpp"

namespace gcmap {

/// Class counts for `n_prime` synthetic nodes proportional to the class
/// frequencies of `labels` (entries < 0 ignored). Largest-remainder rounding,
/// ties to the lower class id; every class that occurs gets at least one.
inline std::vector<std::size_t> class_budget(std::span<const int> labels, std::size_t num_classes,
                                             std::size_t n_prime) {
    std::vector<std::size_t> freq(num_classes, 0);
    std::size_t total = 0;
    for (int y : labels) {
        if (y < 0) continue;
        detail::require_data(static_cast<std::size_t>(y) < num_classes, "label out of range");
        ++freq[static_cast<std::size_t>(y)];
        ++total;
    }
    detail::require_data(total > 0, "predefine_labels: no labeled nodes");
    const auto present = static_cast<std::size_t>(std::count_if(freq.begin(), freq.end(), [](std::size_t f) { return f > 0; }));
    detail::require_data(n_prime >= present && n_prime >= num_classes,
                         "predefine_labels: n_prime (" + std::to_string(n_prime) + ") < number of classes (" +
                             std::to_string(num_classes) + ")");

    std::vector<std::size_t> count(num_classes, 0);
    std::vector<double> remainder(num_classes, 0.0);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (freq[c] == 0) continue;
        const double quota = static_cast<double>(n_prime) * static_cast<double>(freq[c]) / static_cast<double>(total);
        count[c] = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(quota)));
        remainder[c] = quota - std::floor(quota);
        assigned += count[c];
    }
    std::vector<std::size_t> order(num_classes);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    while (assigned < n_prime) {
        for (std::size_t c : order) {
            if (assigned == n_prime) break;
            if (freq[c] == 0) continue;
            ++count[c];
            ++assigned;
        }
    }
    // The minimum-one rule can overshoot; take back from the classes with the
    // smallest remainders that can spare a node.
    for (auto it = order.rbegin(); assigned > n_prime;) {
        if (count[*it] > 1) {
            --count[*it];
            --assigned;
        }
        if (++it == order.rend()) it = order.rbegin();
    }
    return count;
}

/// Y' laid out in class-sorted blocks following class_budget.
inline std::vector<int> predefine_labels(std::span<const int> labels, std::size_t num_classes, std::size_t n_prime) {
    const auto count = class_budget(labels, num_classes, n_prime);
    std::vector<int> y;
    y.reserve(n_prime);
    for (std::size_t c = 0; c < num_classes; ++c) y.insert(y.end(), count[c], static_cast<int>(c));
    return y;
}

/// MLP over concatenated node-pair features: 2d -> hidden... -> 1, ReLU
/// between layers, biases on every layer.
struct AffinityMLP {
    std::vector<DenseMatrix> weights;
    std::vector<DenseMatrix> biases;  ///< 1 x width each

    std::size_t input_width() const { return weights.empty() ? 0 : weights.front().rows(); }

    friend bool operator==(const AffinityMLP &, const AffinityMLP &) = default;
};

inline AffinityMLP init_affinity_mlp(std::size_t num_features, const std::vector<std::size_t> &hidden, Rng &rng) {
    AffinityMLP m;
    std::size_t fan_in = 2 * num_features;
    std::vector<std::size_t> widths = hidden;
    widths.push_back(1);
    for (std::size_t w : widths) {
        DenseMatrix W(fan_in, w);
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double &v : W.values()) v = uniform(rng, -s, s);
        m.weights.push_back(std::move(W));
        m.biases.emplace_back(1, w);
        fan_in = w;
    }
    return m;
}

struct SyntheticGraph {
    DenseMatrix x_prime;
    std::vector<int> y_prime;
    AffinityMLP phi;
};

inline void validate(const SyntheticGraph &s) {
    detail::require_data(s.y_prime.size() == s.x_prime.rows(), "synthetic graph: y' length != rows of x'");
    detail::require_data(s.phi.input_width() == 2 * s.x_prime.cols(), "affinity MLP input width must be 2d");
}

/// X' initialized from the features of randomly chosen original nodes of the
/// matching class.
inline DenseMatrix init_synthetic_features(const SparseGraph &g, std::span<const int> y_prime, Rng &rng) {
    std::vector<std::vector<Index>> members(g.num_classes);
    for (std::size_t u = 0; u < g.num_nodes(); ++u)
        if (g.labels[u] >= 0) members[static_cast<std::size_t>(g.labels[u])].push_back(static_cast<Index>(u));
    DenseMatrix x(y_prime.size(), g.num_features());
    std::vector<std::size_t> cursor(g.num_classes, 0);
    for (auto &m : members) shuffle(m, rng);
    for (std::size_t i = 0; i < y_prime.size(); ++i) {
        const auto c = static_cast<std::size_t>(y_prime[i]);
        detail::require_data(!members[c].empty(), "synthetic init: class " + std::to_string(c) + " has no original nodes");
        const Index u = members[c][cursor[c]++ % members[c].size()];
        std::copy(g.features.row(u).begin(), g.features.row(u).end(), x.row(i).begin());
    }
    return x;
}

namespace detail {

/// Pair index lists enumerating (i, j) over an n x n grid, row-major.
inline std::pair<std::vector<Index>, std::vector<Index>> pair_grid(std::size_t n) {
    std::vector<Index> left, right;
    left.reserve(n * n);
    right.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            left.push_back(static_cast<Index>(i));
            right.push_back(static_cast<Index>(j));
        }
    return {std::move(left), std::move(right)};
}

} // namespace detail

/// A'_ij = σ((MLP([x_i; x_j]) + MLP([x_j; x_i])) / 2), dense N' x N'.
inline DenseMatrix synth_adjacency(const DenseMatrix &x_prime, const AffinityMLP &phi) {
    detail::require_shape(phi.input_width() == 2 * x_prime.cols(), "synth_adjacency: MLP input width != 2d");
    const std::size_t n = x_prime.rows();
    const auto [li, ri] = detail::pair_grid(n);
    DenseMatrix h = concat_cols(gather_rows(x_prime, li), gather_rows(x_prime, ri));
    for (std::size_t l = 0; l < phi.weights.size(); ++l) {
        h = matmul(h, phi.weights[l]);
        for (std::size_t i = 0; i < h.rows(); ++i)
            for (std::size_t j = 0; j < h.cols(); ++j) h(i, j) += phi.biases[l](0, j);
        if (l + 1 < phi.weights.size()) h = relu(h);
    }
    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = sigmoid((h(i * n + j, 0) + h(j * n + i, 0)) / 2.0);
    return a;
}

/// Σ_l Σ_columns (1 − cos(G_l[:, i], G'_l[:, i])); zero-norm columns count 1.
inline double gradient_matching_loss(const GradientSet &g_t, const GradientSet &g_s) {
    detail::require_shape(g_t.size() == g_s.size(), "gradient_matching_loss: layer count mismatch");
    double total = 0.0;
    for (std::size_t l = 0; l < g_t.size(); ++l) {
        const DenseMatrix &a = g_t[l], &b = g_s[l];
        detail::require_shape(a.same_shape(b), "gradient_matching_loss: " + shape_str(a) + " vs " + shape_str(b));
        for (std::size_t j = 0; j < a.cols(); ++j) {
            double na = 0.0, nb = 0.0, dot = 0.0;
            for (std::size_t i = 0; i < a.rows(); ++i) {
                na += a(i, j) * a(i, j);
                nb += b(i, j) * b(i, j);
                dot += a(i, j) * b(i, j);
            }
            total += 1.0 - ((na > 0.0 && nb > 0.0) ? dot / (std::sqrt(na) * std::sqrt(nb)) : 0.0);
        }
    }
    return total;
}

/// H̃ = M̂ H'.
inline DenseMatrix approx_embeddings(const DenseMatrix &m_hat, const DenseMatrix &h_prime) {
    detail::require_shape(m_hat.cols() == h_prime.rows(),
                          "approx_embeddings: mapping " + shape_str(m_hat) + " vs embeddings " + shape_str(h_prime));
    return matmul(m_hat, h_prime);
}

/// Node pairs with a binary link target.
struct EdgeBatch {
    std::vector<Index> src;
    std::vector<Index> dst;
    std::vector<double> target;  ///< 1 = observed edge, 0 = non-edge

    std::size_t size() const noexcept { return src.size(); }
};

/// `num_pos` observed edges sampled uniformly (with replacement) from the
/// stored entries, plus as many uniformly sampled non-edges (rejection). Self
/// pairs are never produced.
inline EdgeBatch sample_edge_batch(const CsrMatrix &adj, std::size_t num_pos, Rng &rng) {
    EdgeBatch b;
    const std::size_t n = adj.rows;
    std::vector<std::size_t> off_diag;
    off_diag.reserve(adj.nnz());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = adj.row_ptr[i]; k < adj.row_ptr[i + 1]; ++k)
            if (adj.col_idx[k] != i) off_diag.push_back(k);
    if (!off_diag.empty()) {
        for (std::size_t s = 0; s < num_pos; ++s) {
            const std::size_t k = off_diag[uniform_index(rng, off_diag.size())];
            const auto row = static_cast<std::size_t>(std::upper_bound(adj.row_ptr.begin(), adj.row_ptr.end(), k) -
                                                      adj.row_ptr.begin()) - 1;
            b.src.push_back(static_cast<Index>(row));
            b.dst.push_back(adj.col_idx[k]);
            b.target.push_back(1.0);
        }
    }
    if (n >= 2) {
        const std::size_t max_tries = 64 * (num_pos + 1);
        std::size_t neg = 0;
        for (std::size_t tries = 0; neg < num_pos && tries < max_tries; ++tries) {
            const auto i = static_cast<Index>(uniform_index(rng, n));
            const auto j = static_cast<Index>(uniform_index(rng, n));
            if (i == j || adj.at(i, j) != 0.0) continue;
            b.src.push_back(i);
            b.dst.push_back(j);
            b.target.push_back(0.0);
            ++neg;
        }
    }
    return b;
}

/// Mean binary cross-entropy of σ(H̃_i · H̃_j) over the batch. With
/// `positives_only` the non-edge terms are dropped but still counted in |B|.
inline double structure_loss(const DenseMatrix &h_tilde, const EdgeBatch &batch, bool positives_only = false) {
    detail::require_data(batch.size() > 0, "structure_loss: empty batch");
    double total = 0.0;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        double s = 0.0;
        const auto a = h_tilde.row(batch.src[k]), b = h_tilde.row(batch.dst[k]);
        for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * b[c];
        if (batch.target[k] == 1.0)
            total += softplus(-s);
        else if (!positives_only)
            total += softplus(s);
    }
    return total / static_cast<double>(batch.size());
}

/// L_S = L_gra + λ L_str.
inline double synthetic_loss(double l_gra, double l_str, double lambda) {
    detail::require_data(lambda >= 0.0, "synthetic_loss: lambda must be >= 0");
    return l_gra + lambda * l_str;
}

namespace ad {

/// Trainable affinity-MLP parameters as tape leaves.
struct AffinityVars {
    std::vector<Var> weights;
    std::vector<Var> biases;
};

inline AffinityVars affinity_leaves(Tape &t, const AffinityMLP &phi) {
    AffinityVars v;
    for (const auto &w : phi.weights) v.weights.push_back(t.leaf(w));
    for (const auto &b : phi.biases) v.biases.push_back(t.leaf(b));
    return v;
}

inline Var synth_adjacency(Var x_prime, const AffinityVars &phi) {
    Tape &t = *x_prime.tape;
    const std::size_t n = t.value(x_prime).rows();
    gcmap::detail::require_shape(t.value(phi.weights.front()).rows() == 2 * t.value(x_prime).cols(),
                                 "synth_adjacency: MLP input width != 2d");
    auto [li, ri] = gcmap::detail::pair_grid(n);
    Var h = concat_cols(gather_rows(x_prime, std::move(li)), gather_rows(x_prime, std::move(ri)));
    for (std::size_t l = 0; l < phi.weights.size(); ++l) {
        h = add_row_broadcast(matmul(h, phi.weights[l]), phi.biases[l]);
        if (l + 1 < phi.weights.size()) h = relu(h);
    }
    Var q = reshape(h, n, n);
    return sigmoid(scalar_mul(add(q, transpose(q)), 0.5));
}

inline Var gradient_matching_loss(const GradientSet &g_t, const std::vector<Var> &g_s) {
    gcmap::detail::require_shape(!g_s.empty() && g_t.size() == g_s.size(), "gradient_matching_loss: layer count mismatch");
    Tape &t = *g_s.front().tape;
    Var total = cosine_columns(t.constant(g_t[0]), g_s[0]);
    for (std::size_t l = 1; l < g_s.size(); ++l) total = add(total, cosine_columns(t.constant(g_t[l]), g_s[l]));
    return total;
}

/// Link-reconstruction loss with H̃ restricted to the batch rows:
/// H̃_B = M̂_B H' where M̂ is constant.
inline Var structure_loss(const DenseMatrix &m_hat, Var h_prime, const EdgeBatch &batch, bool positives_only) {
    Tape &t = *h_prime.tape;
    gcmap::detail::require_data(batch.size() > 0, "structure_loss: empty batch");
    Var hs = matmul(t.constant(gcmap::gather_rows(m_hat, batch.src)), h_prime);
    Var hd = matmul(t.constant(gcmap::gather_rows(m_hat, batch.dst)), h_prime);
    std::vector<double> weights(batch.size(), 1.0);
    if (positives_only)
        for (std::size_t k = 0; k < batch.size(); ++k) weights[k] = batch.target[k];
    return bce_with_logits(rowwise_dot(hs, hd), batch.target, std::move(weights));
}

/// Embeddings of the SGC head (input to its last weight) with constant weights.
inline Var sgc_embeddings(Var propagated, const RelayWeights &w) {
    Tape &t = *propagated.tape;
    Var h = propagated;
    for (std::size_t l = 0; l + 1 < w.w.size(); ++l) h = relu(matmul(h, t.constant(w.w[l])));
    return h;
}

struct SyntheticLossVars {
    Var total;
    Var gra;
    Var str;
    Var a_prime;
};

/// Everything the synthetic-graph phase needs to build L_S on a tape.
struct SyntheticLossInputs {
    const GradientSet *g_t = nullptr;     ///< relay gradient on the original graph
    const RelayWeights *relay = nullptr;  ///< current relay weights (constant)
    std::size_t depth = 2;
    std::span<const int> y_prime;
    const DenseMatrix *m_hat = nullptr;   ///< normalized mapping (constant this phase)
    const EdgeBatch *batch = nullptr;
    double lambda = 0.1;
    bool positives_only = false;
};

/// L_S = L_gra(G^T, G^S(X', Φ)) + λ L_str(A, M̂ H'(X', Φ)), with the relay's
/// synthetic-graph gradient G^S recorded on the tape.
inline SyntheticLossVars synthetic_loss(Var x_prime, const AffinityVars &phi, const SyntheticLossInputs &in) {
    Var a_prime = synth_adjacency(x_prime, phi);
    Var a_norm = normalize_adjacency(a_prime);
    Var p = x_prime;
    for (std::size_t l = 0; l < in.depth; ++l) p = matmul(a_norm, p);
    const std::vector<Var> g_s = sgc_head_grad(p, in.y_prime, *in.relay);
    Var gra = gradient_matching_loss(*in.g_t, g_s);
    if (in.lambda == 0.0 || in.batch == nullptr || in.batch->size() == 0) {
        Tape &t = *x_prime.tape;
        return {gra, gra, t.constant(DenseMatrix(1, 1)), a_prime};
    }
    Var str = structure_loss(*in.m_hat, sgc_embeddings(p, *in.relay), *in.batch, in.positives_only);
    return {add(gra, scalar_mul(str, in.lambda)), gra, str, a_prime};
}

} // namespace ad
} // namespace gcmap

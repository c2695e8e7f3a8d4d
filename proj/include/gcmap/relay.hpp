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

// Relay / deployment models.
//
//   SGC: P = Â^L X, then a linear head W_1 ... W_k with ReLU between head
//        layers. Propagation happens once, before the head.
//   GCN: one propagation per layer, H_l = ReLU(Â H_{l-1} W_l), last layer
//        linear. `depth` is ignored; the layer count is head_dims.size().
//
// In both cases the embedding is the input of the last weight matrix (for GCN,
// before its propagation).

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gcmap/autodiff.hpp"
#include "gcmap/dense.hpp"
#include "gcmap/error.hpp"
#include "gcmap/optim.hpp"
#include "gcmap/rng.hpp"
#include "gcmap/sparse.hpp"

namespace gcmap {

enum class Architecture { SGC, GCN };

inline Architecture parse_architecture(const std::string &s) {
    if (s == "sgc" || s == "SGC") return Architecture::SGC;
    if (s == "gcn" || s == "GCN") return Architecture::GCN;
    throw DataError("unknown architecture '" + s + "' (expected sgc or gcn)");
}

inline const char *to_string(Architecture a) { return a == Architecture::SGC ? "sgc" : "gcn"; }

struct RelayConfig {
    std::size_t depth = 2;                ///< propagation hops (SGC)
    std::vector<std::size_t> head_dims;   ///< widths of the weight matrices; last entry == num classes
    Architecture architecture = Architecture::SGC;
    std::uint64_t weight_init_seed = 0;

    std::size_t num_classes() const { return head_dims.empty() ? 0 : head_dims.back(); }

    friend bool operator==(const RelayConfig &, const RelayConfig &) = default;
};

inline void validate(const RelayConfig &c, std::size_t num_classes) {
    detail::require_data(!c.head_dims.empty(), "relay: head_dims is empty");
    detail::require_data(c.head_dims.back() == num_classes, "relay: last head dim " +
                                                                std::to_string(c.head_dims.back()) +
                                                                " != num classes " + std::to_string(num_classes));
    for (std::size_t w : c.head_dims) detail::require_data(w > 0, "relay: zero-width layer");
}

struct RelayWeights {
    std::vector<DenseMatrix> w;

    friend bool operator==(const RelayWeights &, const RelayWeights &) = default;
};

/// One gradient matrix per weight matrix.
using GradientSet = std::vector<DenseMatrix>;

/// Uniform(-s, s), s = 1/sqrt(fan_in).
inline RelayWeights init_relay(std::size_t in_dim, const RelayConfig &cfg, Rng &rng) {
    RelayWeights r;
    std::size_t fan_in = in_dim;
    for (std::size_t width : cfg.head_dims) {
        DenseMatrix w(fan_in, width);
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double &v : w.values()) v = uniform(rng, -s, s);
        r.w.push_back(std::move(w));
        fan_in = width;
    }
    return r;
}

inline RelayWeights init_relay(std::size_t in_dim, const RelayConfig &cfg) {
    Rng rng(cfg.weight_init_seed);
    return init_relay(in_dim, cfg, rng);
}

namespace detail {

inline std::size_t rows_of(const CsrMatrix &a) { return a.rows; }
inline std::size_t rows_of(const DenseMatrix &a) { return a.rows(); }

inline DenseMatrix propagate_once(const CsrMatrix &adj, const DenseMatrix &x) { return spmm(adj, x); }
inline DenseMatrix propagate_once(const DenseMatrix &adj, const DenseMatrix &x) { return gcmap::matmul(adj, x); }
inline DenseMatrix propagate_once_t(const CsrMatrix &adj, const DenseMatrix &x) { return spmm_transposed(adj, x); }
inline DenseMatrix propagate_once_t(const DenseMatrix &adj, const DenseMatrix &x) { return matmul_tn(adj, x); }

inline void check_weights(std::size_t in_dim, const RelayWeights &w, const RelayConfig &cfg) {
    require_shape(w.w.size() == cfg.head_dims.size(), "relay: weight count != head_dims size");
    std::size_t fan_in = in_dim;
    for (std::size_t l = 0; l < w.w.size(); ++l) {
        require_shape(w.w[l].rows() == fan_in && w.w[l].cols() == cfg.head_dims[l],
                      "relay: weight " + std::to_string(l) + " has shape " + shape_str(w.w[l]));
        fan_in = cfg.head_dims[l];
    }
}

} // namespace detail

/// Â^L X.
template <typename Adj> DenseMatrix propagate(const Adj &adj_norm, const DenseMatrix &x, std::size_t hops) {
    DenseMatrix p = x;
    for (std::size_t l = 0; l < hops; ++l) p = detail::propagate_once(adj_norm, p);
    return p;
}

struct ForwardResult {
    DenseMatrix embeddings;  ///< input to the last weight matrix
    DenseMatrix logits;
};

/// SGC head applied to already-propagated features.
inline ForwardResult sgc_head(const DenseMatrix &propagated, const RelayWeights &w) {
    DenseMatrix h = propagated;
    for (std::size_t l = 0; l + 1 < w.w.size(); ++l) h = relu(gcmap::matmul(h, w.w[l]));
    DenseMatrix logits = gcmap::matmul(h, w.w.back());
    return {std::move(h), std::move(logits)};
}

template <typename Adj>
ForwardResult forward(const Adj &adj_norm, const DenseMatrix &x, const RelayWeights &w, const RelayConfig &cfg) {
    detail::require_shape(x.rows() == detail::rows_of(adj_norm), "relay forward: feature rows != adjacency size");
    detail::check_weights(x.cols(), w, cfg);
    if (cfg.architecture == Architecture::SGC) return sgc_head(propagate(adj_norm, x, cfg.depth), w);
    DenseMatrix h = x;
    for (std::size_t l = 0; l + 1 < w.w.size(); ++l) h = relu(detail::propagate_once(adj_norm, gcmap::matmul(h, w.w[l])));
    DenseMatrix logits = detail::propagate_once(adj_norm, gcmap::matmul(h, w.w.back()));
    return {std::move(h), std::move(logits)};
}

inline std::size_t count_labeled(std::span<const int> labels) {
    std::size_t n = 0;
    for (int y : labels) n += y >= 0;
    return n;
}

/// Mean softmax cross-entropy over rows with label >= 0.
inline double ce_loss(const DenseMatrix &logits, std::span<const int> labels) {
    detail::require_shape(labels.size() == logits.rows(), "ce_loss: labels length != rows");
    const std::size_t n = count_labeled(labels);
    detail::require_data(n > 0, "ce_loss: all rows unlabeled");
    double total = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        if (labels[i] < 0) continue;
        detail::require_data(static_cast<std::size_t>(labels[i]) < logits.cols(), "ce_loss: label out of range");
        const auto r = logits.row(i);
        const double m = *std::max_element(r.begin(), r.end());
        double z = 0.0;
        for (double v : r) z += std::exp(v - m);
        total += m + std::log(z) - r[static_cast<std::size_t>(labels[i])];
    }
    return total / static_cast<double>(n);
}

/// ∂ce_loss/∂logits = (softmax − onehot)/n on labeled rows, 0 elsewhere.
inline DenseMatrix ce_loss_grad(const DenseMatrix &logits, std::span<const int> labels) {
    const std::size_t n = count_labeled(labels);
    detail::require_data(n > 0, "ce_loss: all rows unlabeled");
    DenseMatrix g = row_softmax(logits);
    for (std::size_t i = 0; i < g.rows(); ++i) {
        if (labels[i] < 0) {
            for (double &v : g.row(i)) v = 0.0;
            continue;
        }
        g(i, static_cast<std::size_t>(labels[i])) -= 1.0;
        for (double &v : g.row(i)) v /= static_cast<double>(n);
    }
    return g;
}

/// Backprop through the SGC head given propagated features.
inline GradientSet sgc_head_grad(const DenseMatrix &propagated, std::span<const int> labels, const RelayWeights &w) {
    std::vector<DenseMatrix> inputs{propagated};
    std::vector<DenseMatrix> pre;
    for (std::size_t l = 0; l + 1 < w.w.size(); ++l) {
        pre.push_back(gcmap::matmul(inputs.back(), w.w[l]));
        inputs.push_back(relu(pre.back()));
    }
    DenseMatrix delta = ce_loss_grad(gcmap::matmul(inputs.back(), w.w.back()), labels);
    GradientSet g(w.w.size());
    for (std::size_t l = w.w.size(); l-- > 0;) {
        g[l] = matmul_tn(inputs[l], delta);
        if (l == 0) break;
        delta = matmul_nt(delta, w.w[l]);
        for (std::size_t k = 0; k < delta.size(); ++k)
            if (!(pre[l - 1].values()[k] > 0.0)) delta.values()[k] = 0.0;
    }
    return g;
}

/// Exact gradient of ce_loss ∘ forward w.r.t. every weight matrix.
template <typename Adj>
GradientSet grad_theta(const Adj &adj_norm, const DenseMatrix &x, std::span<const int> labels, const RelayWeights &w,
                       const RelayConfig &cfg) {
    detail::check_weights(x.cols(), w, cfg);
    if (cfg.architecture == Architecture::SGC) return sgc_head_grad(propagate(adj_norm, x, cfg.depth), labels, w);
    // GCN: inputs[l] is the layer input, pre[l] = Â inputs[l] W_l.
    std::vector<DenseMatrix> inputs{x}, pre;
    for (std::size_t l = 0; l < w.w.size(); ++l) {
        pre.push_back(detail::propagate_once(adj_norm, gcmap::matmul(inputs.back(), w.w[l])));
        if (l + 1 < w.w.size()) inputs.push_back(relu(pre.back()));
    }
    DenseMatrix delta = ce_loss_grad(pre.back(), labels);
    GradientSet g(w.w.size());
    for (std::size_t l = w.w.size(); l-- > 0;) {
        const DenseMatrix back = detail::propagate_once_t(adj_norm, delta);
        g[l] = matmul_tn(inputs[l], back);
        if (l == 0) break;
        delta = matmul_nt(back, w.w[l]);
        for (std::size_t k = 0; k < delta.size(); ++k)
            if (!(pre[l - 1].values()[k] > 0.0)) delta.values()[k] = 0.0;
    }
    return g;
}

/// Per-weight optimizers for the relay.
struct RelayOptimizer {
    std::vector<Optimizer> per_weight;

    RelayOptimizer() = default;
    RelayOptimizer(std::size_t n, OptimizerKind kind, double lr, double weight_decay = 0.0)
        : per_weight(n, Optimizer(kind, lr, weight_decay)) {}

    void step(RelayWeights &w, const GradientSet &g) {
        detail::require_shape(g.size() == w.w.size() && per_weight.size() == w.w.size(),
                              "relay optimizer: gradient count mismatch");
        for (std::size_t l = 0; l < w.w.size(); ++l) per_weight[l].step(w.w[l], g[l]);
    }
};

/// One optimizer step of ce_loss on a graph (typically the synthetic one).
template <typename Adj>
void train_relay_step(RelayWeights &w, RelayOptimizer &opt, const Adj &adj_norm, const DenseMatrix &x,
                      std::span<const int> labels, const RelayConfig &cfg) {
    opt.step(w, grad_theta(adj_norm, x, labels, w, cfg));
}

/// Full training run with a fresh optimizer; SGC propagation is computed once.
template <typename Adj>
RelayWeights train_relay(const Adj &adj_norm, const DenseMatrix &x, std::span<const int> labels, const RelayConfig &cfg,
                         std::size_t epochs, OptimizerKind kind, double lr, double weight_decay) {
    RelayWeights w = init_relay(x.cols(), cfg);
    RelayOptimizer opt(w.w.size(), kind, lr, weight_decay);
    if (cfg.architecture == Architecture::SGC) {
        const DenseMatrix p = propagate(adj_norm, x, cfg.depth);
        for (std::size_t e = 0; e < epochs; ++e) opt.step(w, sgc_head_grad(p, labels, w));
    } else {
        for (std::size_t e = 0; e < epochs; ++e) opt.step(w, grad_theta(adj_norm, x, labels, w, cfg));
    }
    return w;
}

namespace ad {

/// Gradient of the SGC head's ce_loss w.r.t. each head weight, recorded on
/// the tape as a function of the propagated features (weights are constants).
/// This is what lets the gradient-matching loss differentiate through the
/// relay's own gradient with first-order ops only: ReLU masks between head
/// layers are piecewise constant and enter as constants.
inline std::vector<Var> sgc_head_grad(Var propagated, std::span<const int> labels, const RelayWeights &w) {
    Tape &t = *propagated.tape;
    const std::size_t rows = t.value(propagated).rows();
    gcmap::detail::require_shape(labels.size() == rows, "sgc_head_grad: labels length != rows");
    const std::size_t n = count_labeled(labels);
    gcmap::detail::require_data(n > 0, "ce_loss: all rows unlabeled");

    std::vector<Var> inputs{propagated};
    std::vector<DenseMatrix> masks;
    for (std::size_t l = 0; l + 1 < w.w.size(); ++l) {
        Var z = matmul(inputs.back(), t.constant(w.w[l]));
        DenseMatrix mask(t.value(z).rows(), t.value(z).cols());
        for (std::size_t k = 0; k < mask.size(); ++k) mask.values()[k] = t.value(z).values()[k] > 0.0 ? 1.0 : 0.0;
        masks.push_back(mask);
        inputs.push_back(hadamard(z, t.constant(std::move(mask))));
    }
    Var logits = matmul(inputs.back(), t.constant(w.w.back()));
    const std::size_t C = w.w.back().cols();
    DenseMatrix target = one_hot(labels, C);
    DenseMatrix row_mask(rows, C, 1.0);
    for (std::size_t i = 0; i < rows; ++i)
        if (labels[i] < 0)
            for (double &v : row_mask.row(i)) v = 0.0;
    Var delta = scalar_mul(hadamard(sub(row_softmax(logits), t.constant(std::move(target))), t.constant(std::move(row_mask))),
                           1.0 / static_cast<double>(n));
    std::vector<Var> g(w.w.size());
    for (std::size_t l = w.w.size(); l-- > 0;) {
        g[l] = matmul(transpose(inputs[l]), delta);
        if (l == 0) break;
        delta = hadamard(matmul(delta, t.constant(gcmap::transpose(w.w[l]))), t.constant(masks[l - 1]));
    }
    return g;
}

} // namespace ad
} // namespace gcmap

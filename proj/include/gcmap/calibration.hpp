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

// Post-hoc label and error propagation over an assembled graph whose first
// rows are labeled seeds (synthetic or original nodes) and whose remaining
// rows are the inductive batch.

#include <span>
#include <string>

#include "gcmap/dense.hpp"
#include "gcmap/error.hpp"
#include "gcmap/sparse.hpp"

namespace gcmap {

enum class PropagationVariant { LP, EP };

inline PropagationVariant parse_propagation_variant(const std::string &s) {
    if (s == "lp" || s == "LP") return PropagationVariant::LP;
    if (s == "ep" || s == "EP") return PropagationVariant::EP;
    throw DataError("unknown propagation variant '" + s + "' (expected lp or ep)");
}

inline const char *to_string(PropagationVariant v) { return v == PropagationVariant::LP ? "lp" : "ep"; }

struct PropagationConfig {
    std::size_t iterations = 10;
    double alpha = 0.8;  ///< weight on the propagated term
    PropagationVariant variant = PropagationVariant::LP;
    bool clamp = true;  ///< reset seed rows to their start value every iteration
    double scale = 1.0;  ///< EP residual multiplier
};

inline void validate(const PropagationConfig &c) {
    detail::require_data(c.iterations >= 1, "propagation: iterations must be >= 1");
    detail::require_data(c.alpha >= 0.0 && c.alpha < 1.0, "propagation: alpha must be in [0, 1)");
}

/// F ← α Â F + (1 − α) F⁰, `iterations` times; seed rows optionally clamped.
/// Returns every row.
inline DenseMatrix damped_propagate(const CsrMatrix &adj_norm, const DenseMatrix &f0, std::size_t seed_rows,
                                    const PropagationConfig &cfg) {
    validate(cfg);
    detail::require_shape(adj_norm.rows == f0.rows() && adj_norm.cols == f0.rows(),
                          "propagation: adjacency is not " + std::to_string(f0.rows()) + " square");
    detail::require_shape(seed_rows <= f0.rows(), "propagation: more seed rows than rows");
    DenseMatrix f = f0;
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        DenseMatrix next = spmm(adj_norm, f);
        for (std::size_t k = 0; k < next.size(); ++k)
            next.values()[k] = cfg.alpha * next.values()[k] + (1.0 - cfg.alpha) * f0.values()[k];
        if (cfg.clamp)
            for (std::size_t i = 0; i < seed_rows; ++i)
                std::copy(f0.row(i).begin(), f0.row(i).end(), next.row(i).begin());
        f = std::move(next);
    }
    return f;
}

/// Soft labels for the rows after the seeds; nonzero rows sum to 1.
inline DenseMatrix label_propagate(const CsrMatrix &adj_norm, std::span<const int> seed_labels, std::size_t num_classes,
                                   const PropagationConfig &cfg) {
    const std::size_t m = seed_labels.size(), total = adj_norm.rows;
    detail::require_shape(m <= total, "label_propagate: more seeds than rows");
    DenseMatrix f0(total, num_classes);
    for (std::size_t i = 0; i < m; ++i) {
        const int y = seed_labels[i];
        detail::require_data(y < static_cast<int>(num_classes), "label_propagate: seed label out of range");
        if (y >= 0) f0(i, static_cast<std::size_t>(y)) = 1.0;
    }
    DenseMatrix out = slice_rows(damped_propagate(adj_norm, f0, m, cfg), m, total);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double s = 0.0;
        for (double v : out.row(i)) s += v;
        if (s > 0.0)
            for (double &v : out.row(i)) v /= s;
    }
    return out;
}

/// Inductive logits plus scale times the propagated residual
/// onehot(Y') − softmax(seed logits).
inline DenseMatrix error_propagate(const CsrMatrix &adj_norm, const DenseMatrix &seed_logits,
                                   std::span<const int> seed_labels, const DenseMatrix &inductive_logits,
                                   const PropagationConfig &cfg) {
    const std::size_t m = seed_labels.size(), total = adj_norm.rows, c = inductive_logits.cols();
    detail::require_shape(seed_logits.rows() == m && seed_logits.cols() == c, "error_propagate: seed logits shape");
    detail::require_shape(inductive_logits.rows() + m == total, "error_propagate: row counts do not add up");
    DenseMatrix r0(total, c);
    const DenseMatrix soft = row_softmax(seed_logits);
    for (std::size_t i = 0; i < m; ++i) {
        if (seed_labels[i] < 0) continue;
        for (std::size_t j = 0; j < c; ++j) r0(i, j) = (static_cast<int>(j) == seed_labels[i] ? 1.0 : 0.0) - soft(i, j);
    }
    const DenseMatrix r = damped_propagate(adj_norm, r0, m, cfg);
    DenseMatrix out = inductive_logits;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < c; ++j) out(i, j) += cfg.scale * r(m + i, j);
    return out;
}

/// Argmax of the soft labels; all-zero rows keep the fallback prediction.
inline std::vector<int> propagated_predictions(const DenseMatrix &soft, std::span<const int> fallback) {
    detail::require_shape(fallback.size() == soft.rows(), "propagated_predictions: fallback length != rows");
    std::vector<int> pred = argmax_rows(soft);
    for (std::size_t i = 0; i < soft.rows(); ++i) {
        bool any = false;
        for (double v : soft.row(i)) any = any || v != 0.0;
        if (!any) pred[i] = fallback[i];
    }
    return pred;
}

} // namespace gcmap

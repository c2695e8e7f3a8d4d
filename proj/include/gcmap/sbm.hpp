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
#include <cstdint>
#include <vector>

#include "gcmap/error.hpp"
#include "gcmap/graph.hpp"
#include "gcmap/rng.hpp"

namespace gcmap {

struct SbmParams {
    std::vector<std::size_t> sizes;  ///< nodes per class; class c occupies a contiguous id range
    double p_in = 0.05;
    double p_out = 0.005;
    std::size_t num_features = 16;
    double mu = 1.0;  ///< class c's feature mean is mu * e_(c mod d)
    std::uint64_t seed = 0;
};

/// Undirected stochastic block model with unit edge weights and Gaussian
/// class-conditional features (identity covariance). Features are rounded to
/// float32 so that graph-bundle round trips are exact.
inline SparseGraph sbm_generate(const SbmParams &p) {
    detail::require_data(!p.sizes.empty(), "sbm: no classes");
    for (std::size_t s : p.sizes) detail::require_data(s > 0, "sbm: empty class");
    detail::require_data(0.0 <= p.p_out && p.p_out <= p.p_in && p.p_in <= 1.0, "sbm: need 0 <= p_out <= p_in <= 1");
    detail::require_data(p.num_features > 0, "sbm: num_features must be > 0");

    const std::size_t C = p.sizes.size();
    std::vector<std::size_t> offset(C + 1, 0);
    for (std::size_t c = 0; c < C; ++c) offset[c + 1] = offset[c] + p.sizes[c];
    const std::size_t n = offset[C];

    Rng rng = make_rng(p.seed, SeedStream::Graph);
    std::vector<Triplet> t;

    // Geometric skipping over the pairs of each block: the gap to the next
    // success of a Bernoulli(prob) sequence is floor(log U / log(1 - prob)).
    auto sample_block = [&](std::size_t ca, std::size_t cb, double prob) {
        if (prob <= 0.0) return;
        const std::size_t na = p.sizes[ca], nb = p.sizes[cb];
        const bool diag = ca == cb;
        const std::uint64_t total = diag ? na * (na - 1) / 2 : na * nb;
        const double log_q = prob < 1.0 ? std::log1p(-prob) : 0.0;
        std::uint64_t k = 0;
        while (true) {
            if (prob < 1.0) {
                double u;
                do {
                    u = uniform(rng);
                } while (u <= 0.0);
                k += static_cast<std::uint64_t>(std::floor(std::log(u) / log_q));
            }
            if (k >= total) break;
            std::size_t i, j;
            if (diag) {
                // k enumerates pairs (i, j), i > j, row by row.
                i = static_cast<std::size_t>((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(k))) / 2.0);
                while (i * (i - 1) / 2 > k) --i;
                while ((i + 1) * i / 2 <= k) ++i;
                j = k - i * (i - 1) / 2;
            } else {
                i = k / nb;
                j = k % nb;
            }
            const auto u = static_cast<Index>(offset[ca] + i), v = static_cast<Index>(offset[cb] + j);
            t.push_back({u, v, 1.0});
            t.push_back({v, u, 1.0});
            ++k;
        }
    };
    for (std::size_t ca = 0; ca < C; ++ca)
        for (std::size_t cb = 0; cb <= ca; ++cb) sample_block(ca, cb, ca == cb ? p.p_in : p.p_out);

    SparseGraph g;
    g.adj = CsrMatrix::from_triplets(n, n, std::move(t));
    g.num_classes = C;
    g.directed = false;
    g.labels.resize(n);
    g.features = DenseMatrix(n, p.num_features);
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t u = offset[c]; u < offset[c + 1]; ++u) {
            g.labels[u] = static_cast<int>(c);
            for (std::size_t f = 0; f < p.num_features; ++f) {
                const double mean = (f == c % p.num_features) ? p.mu : 0.0;
                g.features(u, f) = static_cast<float>(mean + standard_normal(rng));
            }
        }
    }
    return g;
}

/// Per-class stratified split: for class c, train_per_class[c] nodes go to
/// train, val_per_class[c] to val, test_per_class[c] to test, drawn from a
/// seeded permutation of the class members. Lists are sorted by node id.
inline Splits stratified_split(const SparseGraph &g, const std::vector<std::size_t> &train_per_class,
                               const std::vector<std::size_t> &val_per_class,
                               const std::vector<std::size_t> &test_per_class, std::uint64_t seed) {
    const std::size_t C = g.num_classes;
    detail::require_data(train_per_class.size() == C && val_per_class.size() == C && test_per_class.size() == C,
                         "stratified_split: per-class count lists must have num_classes entries");
    std::vector<std::vector<Index>> members(C);
    for (std::size_t u = 0; u < g.num_nodes(); ++u)
        if (g.labels[u] >= 0) members[static_cast<std::size_t>(g.labels[u])].push_back(static_cast<Index>(u));
    Rng rng = make_rng(seed, SeedStream::Split);
    Splits s;
    for (std::size_t c = 0; c < C; ++c) {
        auto &m = members[c];
        detail::require_data(train_per_class[c] + val_per_class[c] + test_per_class[c] <= m.size(),
                             "stratified_split: class " + std::to_string(c) + " too small");
        shuffle(m, rng);
        std::size_t k = 0;
        for (std::size_t i = 0; i < train_per_class[c]; ++i) s.train.push_back(m[k++]);
        for (std::size_t i = 0; i < val_per_class[c]; ++i) s.val.push_back(m[k++]);
        for (std::size_t i = 0; i < test_per_class[c]; ++i) s.test.push_back(m[k++]);
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

} // namespace gcmap

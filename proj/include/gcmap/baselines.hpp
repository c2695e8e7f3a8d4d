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

// Coreset reductions: per-class node selection by random draw, degree,
// herding or greedy k-center, plus the induced subgraph.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gcmap/dense.hpp"
#include "gcmap/error.hpp"
#include "gcmap/graph.hpp"
#include "gcmap/rng.hpp"

namespace gcmap {

enum class CoresetMethod { Random, Degree, Herding, KCenter };

inline CoresetMethod parse_coreset_method(const std::string &s) {
    if (s == "random") return CoresetMethod::Random;
    if (s == "degree") return CoresetMethod::Degree;
    if (s == "herding") return CoresetMethod::Herding;
    if (s == "kcenter") return CoresetMethod::KCenter;
    throw DataError("unknown coreset method '" + s + "' (expected random, degree, herding or kcenter)");
}

inline const char *to_string(CoresetMethod m) {
    switch (m) {
    case CoresetMethod::Random: return "random";
    case CoresetMethod::Degree: return "degree";
    case CoresetMethod::Herding: return "herding";
    case CoresetMethod::KCenter: return "kcenter";
    }
    return "?";
}

struct CoresetResult {
    std::vector<Index> selected;  ///< ascending; node k of `graph` is selected[k]
    SparseGraph graph;
    CoresetMethod method = CoresetMethod::Random;
};

namespace detail {

inline std::vector<std::vector<Index>> class_members(const SparseGraph &g, const std::vector<std::size_t> &counts) {
    require_data(g.has_labels(), "coreset: graph has no labels");
    require_data(counts.size() == g.num_classes, "coreset: counts length != number of classes");
    std::vector<std::vector<Index>> members(g.num_classes);
    for (std::size_t u = 0; u < g.num_nodes(); ++u)
        if (g.labels[u] >= 0) members[static_cast<std::size_t>(g.labels[u])].push_back(static_cast<Index>(u));
    for (std::size_t c = 0; c < g.num_classes; ++c)
        require_data(counts[c] <= members[c].size(), "coreset: class " + std::to_string(c) + " asks for " +
                                                         std::to_string(counts[c]) + " nodes but has " +
                                                         std::to_string(members[c].size()));
    return members;
}

inline CoresetResult finish(const SparseGraph &g, std::vector<Index> picked, CoresetMethod m) {
    std::sort(picked.begin(), picked.end());
    CoresetResult r;
    r.graph = induced_subgraph(g, picked);
    r.selected = std::move(picked);
    r.method = m;
    return r;
}

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return s;
}

inline void check_embeddings(const SparseGraph &g, const DenseMatrix &emb) {
    require_shape(emb.rows() == g.num_nodes(), "coreset: embedding rows != num_nodes");
}

} // namespace detail

/// Uniform without replacement within each class.
inline CoresetResult random_coreset(const SparseGraph &g, const std::vector<std::size_t> &counts, std::uint64_t seed) {
    auto members = detail::class_members(g, counts);
    Rng rng = make_rng(seed, SeedStream::Coreset);
    std::vector<Index> picked;
    for (std::size_t c = 0; c < members.size(); ++c) {
        shuffle(members[c], rng);
        picked.insert(picked.end(), members[c].begin(), members[c].begin() + static_cast<std::ptrdiff_t>(counts[c]));
    }
    return detail::finish(g, std::move(picked), CoresetMethod::Random);
}

/// Highest degree (neighbors other than itself) first; ties to the lower id.
inline CoresetResult degree_coreset(const SparseGraph &g, const std::vector<std::size_t> &counts) {
    auto members = detail::class_members(g, counts);
    std::vector<std::size_t> degree(g.num_nodes(), 0);
    for (std::size_t u = 0; u < g.num_nodes(); ++u)
        for (std::size_t k = g.adj.row_ptr[u]; k < g.adj.row_ptr[u + 1]; ++k) degree[u] += g.adj.col_idx[k] != u;
    std::vector<Index> picked;
    for (std::size_t c = 0; c < members.size(); ++c) {
        auto &m = members[c];
        std::stable_sort(m.begin(), m.end(), [&](Index a, Index b) { return degree[a] > degree[b]; });
        picked.insert(picked.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(counts[c]));
    }
    return detail::finish(g, std::move(picked), CoresetMethod::Degree);
}

/// Greedy herding: each pick brings the running mean of the selection closest
/// to the class mean.
inline CoresetResult herding_coreset(const SparseGraph &g, const std::vector<std::size_t> &counts,
                                     const DenseMatrix &emb) {
    detail::check_embeddings(g, emb);
    const auto members = detail::class_members(g, counts);
    const std::size_t k = emb.cols();
    std::vector<Index> picked;
    for (std::size_t c = 0; c < members.size(); ++c) {
        const auto &m = members[c];
        if (counts[c] == 0) continue;
        std::vector<double> mean(k, 0.0), acc(k, 0.0), cand(k);
        for (Index u : m)
            for (std::size_t j = 0; j < k; ++j) mean[j] += emb(u, j) / static_cast<double>(m.size());
        std::vector<char> used(m.size(), 0);
        for (std::size_t s = 0; s < counts[c]; ++s) {
            std::size_t best = m.size();
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t q = 0; q < m.size(); ++q) {
                if (used[q]) continue;
                for (std::size_t j = 0; j < k; ++j) cand[j] = (acc[j] + emb(m[q], j)) / static_cast<double>(s + 1);
                const double d = detail::sq_dist(cand, mean);
                if (d < best_d) {
                    best_d = d;
                    best = q;
                }
            }
            used[best] = 1;
            for (std::size_t j = 0; j < k; ++j) acc[j] += emb(m[best], j);
            picked.push_back(m[best]);
        }
    }
    return detail::finish(g, std::move(picked), CoresetMethod::Herding);
}

/// Farthest-first traversal started at the node nearest the class centroid.
inline CoresetResult kcenter_coreset(const SparseGraph &g, const std::vector<std::size_t> &counts,
                                     const DenseMatrix &emb) {
    detail::check_embeddings(g, emb);
    const auto members = detail::class_members(g, counts);
    const std::size_t k = emb.cols();
    std::vector<Index> picked;
    for (std::size_t c = 0; c < members.size(); ++c) {
        const auto &m = members[c];
        if (counts[c] == 0) continue;
        std::vector<double> mean(k, 0.0);
        for (Index u : m)
            for (std::size_t j = 0; j < k; ++j) mean[j] += emb(u, j) / static_cast<double>(m.size());
        std::size_t first = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < m.size(); ++q) {
            const double d = detail::sq_dist(emb.row(m[q]), mean);
            if (d < best_d) {
                best_d = d;
                first = q;
            }
        }
        std::vector<double> to_center(m.size(), std::numeric_limits<double>::infinity());
        std::size_t next = first;
        for (std::size_t s = 0; s < counts[c]; ++s) {
            picked.push_back(m[next]);
            for (std::size_t q = 0; q < m.size(); ++q)
                to_center[q] = std::min(to_center[q], detail::sq_dist(emb.row(m[q]), emb.row(m[next])));
            double far = -1.0;
            for (std::size_t q = 0; q < m.size(); ++q)
                if (to_center[q] > far) {
                    far = to_center[q];
                    next = q;
                }
        }
    }
    return detail::finish(g, std::move(picked), CoresetMethod::KCenter);
}

/// Largest distance from any class member to its nearest selected center of
/// the same class.
inline double covering_radius(const SparseGraph &g, const std::vector<Index> &selected, const DenseMatrix &emb) {
    double radius = 0.0;
    for (std::size_t u = 0; u < g.num_nodes(); ++u) {
        double best = std::numeric_limits<double>::infinity();
        for (Index s : selected)
            if (g.labels[s] == g.labels[u]) best = std::min(best, detail::sq_dist(emb.row(u), emb.row(s)));
        if (std::isfinite(best)) radius = std::max(radius, best);
    }
    return std::sqrt(radius);
}

inline CoresetResult select_coreset(CoresetMethod method, const SparseGraph &g, const std::vector<std::size_t> &counts,
                                    const DenseMatrix &emb, std::uint64_t seed) {
    switch (method) {
    case CoresetMethod::Random: return random_coreset(g, counts, seed);
    case CoresetMethod::Degree: return degree_coreset(g, counts);
    case CoresetMethod::Herding: return herding_coreset(g, counts, emb);
    case CoresetMethod::KCenter: return kcenter_coreset(g, counts, emb);
    }
    throw DataError("unknown coreset method");
}

} // namespace gcmap

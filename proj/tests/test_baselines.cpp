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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "gcmap/baselines.hpp"
#include "gcmap/sbm.hpp"

using namespace gcmap;

namespace {

SparseGraph labeled(std::size_t n, std::vector<int> labels, std::size_t C, std::vector<Triplet> edges = {}) {
    SparseGraph g;
    std::vector<Triplet> sym;
    for (const auto &e : edges) {
        sym.push_back(e);
        sym.push_back({e.col, e.row, e.val});
    }
    g.adj = CsrMatrix::from_triplets(n, n, sym);
    g.features = DenseMatrix(n, 1);
    g.labels = std::move(labels);
    g.num_classes = C;
    return g;
}

SparseGraph sbm(std::uint64_t seed, std::size_t per_class = 20) {
    SbmParams p;
    p.sizes = {per_class, per_class};
    p.p_in = 0.2;
    p.p_out = 0.02;
    p.num_features = 3;
    p.seed = seed;
    return sbm_generate(p);
}

DenseMatrix points(const std::vector<std::vector<double>> &rows) {
    DenseMatrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

double dist(const DenseMatrix &e, Index a, Index b) {
    double s = 0.0;
    for (std::size_t j = 0; j < e.cols(); ++j) s += (e(a, j) - e(b, j)) * (e(a, j) - e(b, j));
    return std::sqrt(s);
}

} // namespace

TEST(Coreset, FullCountsSelectEverything) {
    const SparseGraph g = sbm(1);
    const std::vector<std::size_t> full{20, 20};
    const DenseMatrix emb = g.features;
    for (auto m : {CoresetMethod::Random, CoresetMethod::Degree, CoresetMethod::Herding, CoresetMethod::KCenter}) {
        const auto r = select_coreset(m, g, full, emb, 3);
        EXPECT_EQ(r.selected.size(), 40u);
        EXPECT_EQ(r.graph, g) << to_string(m);
        EXPECT_EQ(covering_radius(g, r.selected, emb), 0.0);
    }
}

TEST(Coreset, ExactPerClassCountsAndSortedIds) {
    const SparseGraph g = sbm(2);
    const std::vector<std::size_t> counts{3, 7};
    for (auto m : {CoresetMethod::Random, CoresetMethod::Degree, CoresetMethod::Herding, CoresetMethod::KCenter}) {
        const auto r = select_coreset(m, g, counts, g.features, 4);
        EXPECT_TRUE(std::is_sorted(r.selected.begin(), r.selected.end()));
        EXPECT_EQ(std::adjacent_find(r.selected.begin(), r.selected.end()), r.selected.end());
        std::vector<std::size_t> got(2, 0);
        for (Index u : r.selected) ++got[static_cast<std::size_t>(g.labels[u])];
        EXPECT_EQ(got, counts) << to_string(m);
        EXPECT_EQ(r.graph.num_nodes(), 10u);
        EXPECT_TRUE(is_symmetric(r.graph.adj));
        for (std::size_t k = 0; k < r.selected.size(); ++k) EXPECT_EQ(r.graph.labels[k], g.labels[r.selected[k]]);
    }
}

TEST(Coreset, TooManyRequestedThrows) {
    const SparseGraph g = sbm(3);
    EXPECT_THROW(random_coreset(g, {21, 1}, 0), DataError);
    EXPECT_THROW(degree_coreset(g, {1}), DataError);
    EXPECT_THROW(herding_coreset(g, {1, 1}, DenseMatrix(3, 2)), ShapeError);
    EXPECT_THROW(parse_coreset_method("mystery"), DataError);
    EXPECT_EQ(parse_coreset_method("kcenter"), CoresetMethod::KCenter);
}

TEST(RandomCoreset, ReproducibleAndSeedDependent) {
    const SparseGraph g = sbm(4, 50);
    const auto a = random_coreset(g, {5, 5}, 10), b = random_coreset(g, {5, 5}, 10);
    EXPECT_EQ(a.selected, b.selected);
    bool differs = false;
    for (std::uint64_t s = 11; s < 16; ++s) differs = differs || random_coreset(g, {5, 5}, s).selected != a.selected;
    EXPECT_TRUE(differs);
}

TEST(DegreeCoreset, StarHubFirst) {
    // Star centered at 3 plus an edge 0-1; one class.
    const SparseGraph g = labeled(6, {0, 0, 0, 0, 0, 0}, 1, {{3, 0, 1}, {3, 1, 1}, {3, 2, 1}, {3, 4, 1}, {3, 5, 1}, {0, 1, 1}});
    EXPECT_EQ(degree_coreset(g, {1}).selected, std::vector<Index>{3});
    // Nodes 0 and 1 have degree 2; the rest degree 1.
    EXPECT_EQ(degree_coreset(g, {3}).selected, (std::vector<Index>{0, 1, 3}));
}

TEST(DegreeCoreset, TiesGoToLowerIdAndSelfLoopsIgnored) {
    SparseGraph g = labeled(4, {0, 0, 0, 0}, 1, {{0, 1, 1}, {2, 3, 1}});
    std::vector<Triplet> t = g.adj.to_triplets();
    t.push_back({2, 2, 1.0});
    g.adj = CsrMatrix::from_triplets(4, 4, t);
    EXPECT_EQ(degree_coreset(g, {2}).selected, (std::vector<Index>{0, 1}));
}

TEST(DegreeCoreset, MatchesBruteForceOrdering) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const SparseGraph g = sbm(seed, 15);
        std::vector<std::pair<long, Index>> keyed[2];
        for (Index u = 0; u < g.num_nodes(); ++u) {
            long deg = 0;
            for (Index v = 0; v < g.num_nodes(); ++v) deg += v != u && g.adj.at(u, v) != 0.0;
            keyed[g.labels[u]].push_back({-deg, u});
        }
        std::vector<Index> want;
        for (auto &k : keyed) {
            std::sort(k.begin(), k.end());
            for (int i = 0; i < 4; ++i) want.push_back(k[i].second);
        }
        std::sort(want.begin(), want.end());
        EXPECT_EQ(degree_coreset(g, {4, 4}).selected, want) << seed;
    }
}

TEST(HerdingCoreset, FirstPickIsNearestTheMean) {
    const SparseGraph g = labeled(4, {0, 0, 0, 0}, 1);
    const DenseMatrix emb = points({{0.0}, {1.0}, {2.2}, {4.0}});
    // Mean 1.8; nearest is 2.2.
    EXPECT_EQ(herding_coreset(g, {1}, emb).selected, std::vector<Index>{2});
}

TEST(HerdingCoreset, DuplicatesTieToFirstMember) {
    const SparseGraph g = labeled(3, {0, 0, 0}, 1);
    const DenseMatrix emb = points({{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}});
    EXPECT_EQ(herding_coreset(g, {2}, emb).selected, (std::vector<Index>{0, 1}));
}

TEST(HerdingCoreset, FirstTwoPicksAreGreedyOptimal) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const std::size_t n = 9;
        const SparseGraph g = labeled(n, std::vector<int>(n, 0), 1);
        DenseMatrix emb(n, 2);
        for (double &v : emb.values()) v = standard_normal(rng);
        std::vector<double> mean(2, 0.0);
        for (Index u = 0; u < n; ++u)
            for (std::size_t j = 0; j < 2; ++j) mean[j] += emb(u, j) / n;
        const auto gap = [&](std::vector<Index> s) {
            double d = 0.0;
            for (std::size_t j = 0; j < 2; ++j) {
                double m = 0.0;
                for (Index u : s) m += emb(u, j) / static_cast<double>(s.size());
                d += (m - mean[j]) * (m - mean[j]);
            }
            return d;
        };
        Index first = 0;
        for (Index u = 1; u < n; ++u)
            if (gap({u}) < gap({first})) first = u;
        Index second = first == 0 ? 1 : 0;
        for (Index u = 0; u < n; ++u)
            if (u != first && gap({first, u}) < gap({first, second})) second = u;
        std::vector<Index> want{first, second};
        std::sort(want.begin(), want.end());
        EXPECT_EQ(herding_coreset(g, {2}, emb).selected, want) << seed;
    }
}

TEST(KCenterCoreset, AntipodalClustersGetOneCenterEach) {
    const SparseGraph g = labeled(6, std::vector<int>(6, 0), 1);
    const DenseMatrix emb = points({{-10.0, 0.0}, {-10.1, 0.1}, {-9.9, 0.0}, {10.0, 0.0}, {10.1, 0.0}, {9.9, -0.1}});
    const auto r = kcenter_coreset(g, {2}, emb);
    ASSERT_EQ(r.selected.size(), 2u);
    EXPECT_LT(r.selected[0], 3);
    EXPECT_GE(r.selected[1], 3);
    EXPECT_LT(covering_radius(g, r.selected, emb), 0.25);
}

TEST(KCenterCoreset, WithinTwiceTheOptimalRadius) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const std::size_t n = 8, k = 3;
        const SparseGraph g = labeled(n, std::vector<int>(n, 0), 1);
        DenseMatrix emb(n, 2);
        for (double &v : emb.values()) v = uniform(rng) * 10.0;
        double best = std::numeric_limits<double>::infinity();
        for (Index a = 0; a < n; ++a)
            for (Index b = a + 1; b < n; ++b)
                for (Index c = b + 1; c < n; ++c) {
                    double r = 0.0;
                    for (Index u = 0; u < n; ++u) r = std::max(r, std::min({dist(emb, u, a), dist(emb, u, b), dist(emb, u, c)}));
                    best = std::min(best, r);
                }
        const auto sel = kcenter_coreset(g, {k}, emb).selected;
        EXPECT_LE(covering_radius(g, sel, emb), 2.0 * best + 1e-12) << seed;
    }
}

TEST(Coreset, ClassesAreIndependent) {
    // Selection within a class depends only on that class's members.
    const SparseGraph g = labeled(6, {0, 1, 0, 1, 0, 1}, 2);
    const DenseMatrix emb = points({{0.0}, {5.0}, {1.0}, {6.0}, {3.0}, {9.0}});
    const auto r = kcenter_coreset(g, {1, 2}, emb);
    std::vector<Index> class1;
    for (Index u : r.selected)
        if (g.labels[u] == 1) class1.push_back(u);
    const SparseGraph only1 = labeled(3, {0, 0, 0}, 1);
    const auto r1 = kcenter_coreset(only1, {2}, points({{5.0}, {6.0}, {9.0}}));
    ASSERT_EQ(class1.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(class1[i], 2 * r1.selected[i] + 1);
}

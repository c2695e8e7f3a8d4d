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

#include <chrono>
#include <cmath>

#include "gcmap/calibration.hpp"
#include "gcmap/sbm.hpp"

using namespace gcmap;

namespace {

CsrMatrix path_norm(std::size_t n) {
    std::vector<Triplet> t;
    for (Index i = 0; i + 1 < n; ++i) {
        t.push_back({i, i + 1, 1.0});
        t.push_back({i + 1, i, 1.0});
    }
    return normalize_adjacency(CsrMatrix::from_triplets(n, n, t));
}

// Plain dense loop of the damped iteration, written without spmm.
DenseMatrix reference_propagate(const DenseMatrix &a, const DenseMatrix &f0, std::size_t seeds, std::size_t iters,
                                double alpha, bool clamp) {
    DenseMatrix f = f0;
    for (std::size_t it = 0; it < iters; ++it) {
        DenseMatrix next(f.rows(), f.cols());
        for (std::size_t i = 0; i < f.rows(); ++i)
            for (std::size_t j = 0; j < f.cols(); ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < f.rows(); ++k) s += a(i, k) * f(k, j);
                next(i, j) = (clamp && i < seeds) ? f0(i, j) : alpha * s + (1.0 - alpha) * f0(i, j);
            }
        f = next;
    }
    return f;
}

SparseGraph random_graph(std::uint64_t seed, std::size_t n) {
    SbmParams p;
    p.sizes = {n / 2, n - n / 2};
    p.p_in = 0.3;
    p.p_out = 0.05;
    p.num_features = 2;
    p.seed = seed;
    return sbm_generate(p);
}

} // namespace

TEST(Propagation, ConfigValidation) {
    PropagationConfig c;
    EXPECT_NO_THROW(validate(c));
    c.alpha = 1.0;
    EXPECT_THROW(validate(c), DataError);
    c.alpha = -0.1;
    EXPECT_THROW(validate(c), DataError);
    c.alpha = 0.5;
    c.iterations = 0;
    EXPECT_THROW(validate(c), DataError);
    EXPECT_EQ(parse_propagation_variant("ep"), PropagationVariant::EP);
    EXPECT_THROW(parse_propagation_variant("xx"), DataError);
}

TEST(Propagation, MatchesDenseReference) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const SparseGraph g = random_graph(seed, 12);
        const CsrMatrix an = normalize_adjacency(g.adj);
        Rng rng(seed);
        DenseMatrix f0(12, 3);
        for (double &v : f0.values()) v = uniform(rng);
        PropagationConfig c;
        c.alpha = 0.3 + 0.05 * static_cast<double>(seed % 10);
        c.iterations = 1 + seed % 7;
        c.clamp = seed % 2 == 0;
        const auto got = damped_propagate(an, f0, 4, c);
        const auto want = reference_propagate(an.to_dense(), f0, 4, c.iterations, c.alpha, c.clamp);
        EXPECT_LE(max_abs_diff(got, want), 1e-13) << seed;
    }
}

TEST(LabelPropagation, ZeroAlphaLeavesUnseededRowsEmpty) {
    // With alpha = 0 nothing flows; unseeded rows stay zero and fall back.
    PropagationConfig c;
    c.alpha = 0.0;
    const std::vector<int> seeds{0, 1};
    const auto soft = label_propagate(path_norm(4), seeds, 2, c);
    EXPECT_EQ(soft, DenseMatrix(2, 2));
    EXPECT_EQ(propagated_predictions(soft, std::vector<int>{1, 0}), (std::vector<int>{1, 0}));
}

TEST(LabelPropagation, SingleSourceReachesComponent) {
    // Seed 0 of class 2 on a path; every connected row gets class 2 only.
    PropagationConfig c;
    const std::vector<int> seeds{2};
    const auto soft = label_propagate(path_norm(5), seeds, 3, c);
    ASSERT_EQ(soft.rows(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_DOUBLE_EQ(soft(i, 2), 1.0);
        EXPECT_EQ(soft(i, 0), 0.0);
    }
    EXPECT_EQ(propagated_predictions(soft, std::vector<int>(4, 0)), std::vector<int>(4, 2));
}

TEST(LabelPropagation, TwoSeedPathExample) {
    // Path 0-1-2 with seeds 0 (class 0) and 2 (class 1), one unseeded middle
    // node after reordering: rows [s0, s1, u] with u adjacent to both.
    const CsrMatrix a = normalize_adjacency(CsrMatrix::from_triplets(3, 3, {{0, 2, 1}, {2, 0, 1}, {1, 2, 1}, {2, 1, 1}}));
    const std::vector<int> seeds{0, 1};
    PropagationConfig c;
    c.iterations = 1;
    const auto soft = label_propagate(a, seeds, 2, c);
    EXPECT_DOUBLE_EQ(soft(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(soft(0, 1), 0.5);
}

TEST(LabelPropagation, NonzeroRowsSumToOne) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const SparseGraph g = random_graph(seed, 20);
        std::vector<int> seeds(8);
        for (std::size_t i = 0; i < 8; ++i) seeds[i] = i == 3 ? -1 : g.labels[i];
        const auto soft = label_propagate(normalize_adjacency(g.adj), seeds, 2, PropagationConfig{});
        for (std::size_t i = 0; i < soft.rows(); ++i) {
            double s = 0.0;
            for (double v : soft.row(i)) {
                EXPECT_GE(v, 0.0);
                s += v;
            }
            if (s != 0.0) {
                EXPECT_NEAR(s, 1.0, 1e-12);
            }
        }
    }
}

TEST(LabelPropagation, SeedLabelOutOfRange) {
    EXPECT_THROW(label_propagate(path_norm(3), std::vector<int>{5}, 2, PropagationConfig{}), DataError);
}

TEST(ErrorPropagation, ZeroResidualIsIdentity) {
    // Unlabeled seeds carry no residual.
    const SparseGraph g = random_graph(1, 10);
    const DenseMatrix seed_logits(4, 2, 0.3);
    DenseMatrix ind(6, 2);
    for (std::size_t k = 0; k < ind.size(); ++k) ind.values()[k] = 0.1 * static_cast<double>(k);
    const auto out = error_propagate(normalize_adjacency(g.adj), seed_logits, std::vector<int>(4, -1), ind,
                                     PropagationConfig{});
    EXPECT_EQ(out, ind);
}

TEST(ErrorPropagation, ZeroAlphaIsIdentity) {
    const SparseGraph g = random_graph(2, 10);
    Rng rng(2);
    DenseMatrix seed_logits(4, 2), ind(6, 2);
    for (double &v : seed_logits.values()) v = standard_normal(rng);
    for (double &v : ind.values()) v = standard_normal(rng);
    PropagationConfig c;
    c.alpha = 0.0;
    const auto out = error_propagate(normalize_adjacency(g.adj), seed_logits, std::span<const int>(g.labels).first(4),
                                     ind, c);
    EXPECT_EQ(out, ind);
}

TEST(ErrorPropagation, OneStepExample) {
    // Seed row 0 with logits (0, 0) and label 0: residual (0.5, -0.5).
    // Inductive row 1 is its only neighbor; Â row 1 = (1/2, 1/2).
    const CsrMatrix a = normalize_adjacency(CsrMatrix::from_triplets(2, 2, {{0, 1, 1}, {1, 0, 1}}));
    PropagationConfig c;
    c.iterations = 1;
    c.alpha = 0.5;
    const DenseMatrix seed_logits(1, 2, 0.0);
    const DenseMatrix ind{{1.0, 2.0}};
    const auto out = error_propagate(a, seed_logits, std::vector<int>{0}, ind, c);
    EXPECT_DOUBLE_EQ(out(0, 0), 1.0 + 0.5 * 0.5 * 0.5);
    EXPECT_DOUBLE_EQ(out(0, 1), 2.0 - 0.5 * 0.5 * 0.5);
}

TEST(ErrorPropagation, ShapeErrors) {
    const CsrMatrix a = path_norm(3);
    EXPECT_THROW(error_propagate(a, DenseMatrix(1, 2), std::vector<int>{0}, DenseMatrix(1, 2), PropagationConfig{}),
                 ShapeError);
    EXPECT_THROW(error_propagate(a, DenseMatrix(1, 3), std::vector<int>{0}, DenseMatrix(2, 2), PropagationConfig{}),
                 ShapeError);
}

TEST(Propagation, SmallSeedSetIsCheaper) {
    // Propagating over N' + n rows is cheaper than over N + n rows.
    const SparseGraph big = random_graph(3, 1200);
    const SparseGraph small = random_graph(3, 60);
    const auto time_lp = [](const SparseGraph &g) {
        const CsrMatrix an = normalize_adjacency(g.adj);
        const std::vector<int> seeds(g.labels.begin(), g.labels.end() - 10);
        double best = 1e300;
        for (int rep = 0; rep < 5; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto soft = label_propagate(an, seeds, 2, PropagationConfig{});
            best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            EXPECT_EQ(soft.rows(), 10u);
        }
        return best;
    };
    EXPECT_LT(time_lp(small), time_lp(big));
}

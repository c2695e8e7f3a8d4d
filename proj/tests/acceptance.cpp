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

// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion followed
// by the measured values; exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "gcmap/gcmap.hpp"

namespace fs = std::filesystem;
using namespace gcmap;
using Clock = std::chrono::steady_clock;

namespace {

int g_failed = 0;

void verdict(int id, bool pass, const std::string &summary) {
    std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", summary.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failed;
}

void note(const std::string &line) {
    std::printf("    %s\n", line.c_str());
    std::fflush(stdout);
}

std::string num(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

double seconds(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double mean(const std::vector<double> &v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// ---- criterion 1 ------------------------------------------------------------

struct FdStats {
    double max_rel = 0.0;
    std::size_t checked = 0;
    std::size_t excluded = 0;
};

/// Central differences of `f` around `x`, compared with `analytic`. Entries
/// where one-sided differences disagree sit on a ReLU kink and are skipped.
FdStats finite_difference(DenseMatrix x, const DenseMatrix &analytic, const std::function<double(const DenseMatrix &)> &f) {
    const double h = 1e-6;
    const double f0 = f(x);
    FdStats s;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double o = x.values()[k];
        x.values()[k] = o + h;
        const double up = f(x);
        x.values()[k] = o - h;
        const double dn = f(x);
        x.values()[k] = o;
        const double fwd = (up - f0) / h, bwd = (f0 - dn) / h;
        const double gap = std::abs(fwd - bwd);
        if (gap > 1e3 * h && gap > 0.1 * std::max(std::abs(fwd), std::abs(bwd))) {
            ++s.excluded;
            continue;
        }
        const double central = (up - dn) / (2 * h);
        s.max_rel = std::max(s.max_rel, std::abs(analytic.values()[k] - central) / (std::abs(central) + 1e-12));
        ++s.checked;
    }
    return s;
}

/// L_S through the plain (non-tape) functions.
double plain_synthetic_loss(const DenseMatrix &x, const AffinityMLP &phi, const std::vector<int> &y,
                            const GradientSet &g_t, const RelayWeights &relay, std::size_t depth,
                            const DenseMatrix &m_hat, const EdgeBatch &batch, double lambda) {
    const DenseMatrix p = propagate(normalize_adjacency_dense(synth_adjacency(x, phi)), x, depth);
    const double gra = gradient_matching_loss(g_t, sgc_head_grad(p, y, relay));
    const double str = structure_loss(approx_embeddings(m_hat, sgc_head(p, relay).embeddings), batch);
    return synthetic_loss(gra, str, lambda);
}

/// L_M through the plain functions: dense assembly of the support nodes.
double plain_mapping_loss(const DenseMatrix &raw, const TrainState &s, const TrainProblem &p, const MappingTargets &m,
                          const IncrementalBatch &support, const TrainConfig &cfg) {
    const DenseMatrix m_hat = normalize_mapping(raw, s.mapping.eps);
    const double tra = transductive_loss(m.h, m.h_prime, m_hat);
    const auto asm_ = assemble_inductive(m.a_prime, m_hat, s.synthetic.x_prime, support, cfg.support_mode);
    const DenseMatrix all = propagate(normalize_adjacency_dense(asm_.adj), asm_.features, p.depth);
    const std::size_t n_prime = m.a_prime.rows();
    const DenseMatrix h_syn = sgc_head(slice_rows(all, n_prime, all.rows()), s.relay).embeddings;
    return mapping_loss(tra, inductive_loss(m.h_support, h_syn), cfg.beta);
}

void criterion1() {
    const auto t0 = Clock::now();
    SbmParams sp;
    sp.sizes = {6, 6};
    sp.p_in = 0.6;
    sp.p_out = 0.1;
    sp.num_features = 3;
    sp.seed = 3;
    GraphBundle gb;
    gb.graph = sbm_generate(sp);
    gb.splits = stratified_split(gb.graph, {4, 4}, {2, 2}, {0, 0}, 3);
    const ExperimentData e = prepare_experiment(gb);

    TrainConfig cfg;
    cfg.n_prime = 4;
    cfg.seed = 3;
    cfg.relay.head_dims = {2};
    cfg.edge_batch = 8;
    cfg.mapping_init = MappingInit::Random;  // class-aware entries saturate σ and carry no signal
    const TrainProblem p = make_problem(e.train_graph, e.support, cfg);
    TrainState s = init_state(p, cfg);
    reinit_relay(s, cfg, 3, 2);
    // Two alternating rounds so the check runs away from the initial point.
    for (int k = 0; k < 2; ++k) {
        phase_update_synthetic(s, p, cfg);
        phase_update_mapping(s, p, cfg);
    }

    const GradientSet g_t = sgc_head_grad(p.propagated, e.train_graph.labels, s.relay);
    const DenseMatrix m_hat = normalize_mapping(s.mapping);
    const EdgeBatch batch = sample_edge_batch(e.train_graph.adj, cfg.edge_batch, s.edge_rng);

    ad::Tape t;
    ad::Var xv = t.leaf(s.synthetic.x_prime);
    const ad::AffinityVars pv = ad::affinity_leaves(t, s.synthetic.phi);
    ad::SyntheticLossInputs in;
    in.g_t = &g_t;
    in.relay = &s.relay;
    in.depth = p.depth;
    in.y_prime = s.synthetic.y_prime;
    in.m_hat = &m_hat;
    in.batch = &batch;
    in.lambda = cfg.lambda;
    const auto loss = ad::synthetic_loss(xv, pv, in);
    t.backward(loss.total);
    const std::vector<int> &y = s.synthetic.y_prime;
    const auto ls = [&](const DenseMatrix &x, const AffinityMLP &phi) {
        return plain_synthetic_loss(x, phi, y, g_t, s.relay, p.depth, m_hat, batch, cfg.lambda);
    };
    const double value_gap = std::abs(t.value(loss.total)(0, 0) - ls(s.synthetic.x_prime, s.synthetic.phi));

    FdStats fx = finite_difference(s.synthetic.x_prime, t.grad(xv), [&](const DenseMatrix &x) {
        return ls(x, s.synthetic.phi);
    });
    FdStats fphi;
    for (std::size_t l = 0; l < s.synthetic.phi.weights.size(); ++l) {
        for (int which = 0; which < 2; ++which) {
            const DenseMatrix &base = which == 0 ? s.synthetic.phi.weights[l] : s.synthetic.phi.biases[l];
            const DenseMatrix &g = which == 0 ? t.grad(pv.weights[l]) : t.grad(pv.biases[l]);
            const FdStats r = finite_difference(base, g, [&](const DenseMatrix &v) {
                AffinityMLP phi = s.synthetic.phi;
                (which == 0 ? phi.weights[l] : phi.biases[l]) = v;
                return ls(s.synthetic.x_prime, phi);
            });
            fphi.max_rel = std::max(fphi.max_rel, r.max_rel);
            fphi.checked += r.checked;
            fphi.excluded += r.excluded;
        }
    }

    const MappingTargets mt = mapping_targets(s, p);
    ad::Tape tm;
    ad::Var raw = tm.leaf(s.mapping.raw);
    const auto ml = mapping_loss_on_tape(raw, s, p, mt, cfg);
    tm.backward(ml.total);
    const double m_gap = std::abs(tm.value(ml.total)(0, 0) - plain_mapping_loss(s.mapping.raw, s, p, mt, e.support, cfg));
    FdStats fm = finite_difference(s.mapping.raw, tm.grad(raw), [&](const DenseMatrix &r) {
        return plain_mapping_loss(r, s, p, mt, e.support, cfg);
    });

    const double elapsed = seconds(t0);
    const double worst = std::max({fx.max_rel, fphi.max_rel, fm.max_rel});
    const bool pass = worst <= 1e-4 && elapsed < 10.0 && fx.checked > 0 && fphi.checked > 0 && fm.checked > 0 &&
                      value_gap < 1e-12 && m_gap < 1e-12;
    verdict(1, pass, "max relative error " + num(worst, 3) + " (<= 1e-4), " + num(elapsed, 3) + " s (< 10 s)");
    note("X'   max rel " + num(fx.max_rel, 3) + " over " + std::to_string(fx.checked) + " entries (" +
         std::to_string(fx.excluded) + " at kinks)");
    note("Phi  max rel " + num(fphi.max_rel, 3) + " over " + std::to_string(fphi.checked) + " entries (" +
         std::to_string(fphi.excluded) + " at kinks)");
    note("M    max rel " + num(fm.max_rel, 3) + " over " + std::to_string(fm.checked) + " entries (" +
         std::to_string(fm.excluded) + " at kinks)");
    note("tape vs plain loss value: L_S gap " + num(value_gap, 3) + ", L_M gap " + num(m_gap, 3));
}

// ---- criterion 2 ------------------------------------------------------------

IncrementalBatch random_batch(std::size_t n_host, std::size_t d, Rng &rng) {
    const std::size_t n = 1 + uniform_index(rng, 5);
    std::vector<Triplet> links, inner;
    for (Index i = 0; i < n; ++i) {
        const std::size_t deg = uniform_index(rng, 6);
        for (std::size_t k = 0; k < deg; ++k) links.push_back({i, static_cast<Index>(uniform_index(rng, n_host)), 1.0});
        for (Index j = i + 1; j < n; ++j)
            if (uniform(rng) < 0.5) {
                inner.push_back({i, j, 1.0});
                inner.push_back({j, i, 1.0});
            }
    }
    IncrementalBatch b;
    b.a = CsrMatrix::from_triplets(n, n_host, links);
    for (double &v : b.a.vals) v = 1.0;
    b.a_tilde = CsrMatrix::from_triplets(n, n, inner);
    b.x = DenseMatrix(n, d);
    for (double &v : b.x.values()) v = standard_normal(rng);
    return b;
}

void criterion2() {
    const auto t0 = Clock::now();
    const ExperimentData e = prepare_experiment(sbm_experiment_bundle(0));
    const SparseGraph &g = e.train_graph;
    const DeployConfig dc;
    const RelayConfig rc = resolved_relay(dc, g.num_classes, 0);
    const RelayWeights w = train_deploy_relay(g, dc, 0);
    // S = T and M = I; nothing is thresholded (μ = δ = 0).
    TrainResult tr;
    tr.synthetic.x_prime = g.features;
    tr.synthetic.y_prime = g.labels;
    tr.a_prime = g.adj.to_dense();
    tr.m_hat = DenseMatrix::identity(g.num_nodes());
    TrainConfig tc;
    tc.mu = 0.0;
    tc.delta = 0.0;
    tr.sparse = sparsify(tr.a_prime, tr.m_hat, tc.mu, tc.delta);
    const CondensedBundle b = make_condensed(tr, tc, rc, w, graph_fingerprint(g), DeploySource::Original);

    Rng rng(2024);
    double worst = 0.0;
    std::size_t mismatched = 0;
    for (int k = 0; k < 100; ++k) {
        const IncrementalBatch batch = random_batch(g.num_nodes(), g.num_features(), rng);
        for (BatchMode mode : {BatchMode::Node, BatchMode::Graph}) {
            const auto syn = infer(b, batch, mode);
            const auto orig = infer_on_original(g, w, rc, batch, mode);
            worst = std::max(worst, max_abs_diff(syn.logits, orig.logits));
            mismatched += syn.predictions != orig.predictions;
        }
    }
    const double elapsed = seconds(t0);
    verdict(2, worst <= 1e-12 && mismatched == 0 && elapsed < 5.0,
            "max |logit diff| " + num(worst, 3) + " over 100 batches x 2 modes, " + num(elapsed, 3) + " s (< 5 s)");
}

// ---- criterion 3 ------------------------------------------------------------

void criterion3() {
    Rng rng(33);
    double worst_sum = 0.0, min_entry = 0.0;
    std::size_t idempotence_failures = 0;
    for (int k = 0; k < 1000; ++k) {
        const std::size_t n = 1 + uniform_index(rng, 12), n_prime = 1 + uniform_index(rng, 8);
        DenseMatrix raw(n, n_prime);
        const double scale = std::pow(10.0, uniform(rng, -1.0, 2.0));
        for (double &v : raw.values()) v = scale * standard_normal(rng);
        const DenseMatrix m = normalize_mapping(raw);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (double v : m.row(i)) {
                s += v;
                min_entry = std::min(min_entry, v);
            }
            worst_sum = std::max(worst_sum, s);
        }
        DenseMatrix a(n_prime, n_prime);
        for (double &v : a.values()) v = uniform(rng);
        a(0, 0) = 1.0;  // keep A' nonempty at any μ < 1
        const double mu = uniform(rng, 0.0, 0.9), delta = uniform(rng, 0.0, 0.5);
        const auto once = sparsify(a, m, mu, delta);
        const auto twice = sparsify(once.a_prime.to_dense(), once.mapping.to_dense(), mu, delta);
        idempotence_failures += !(twice.a_prime == once.a_prime && twice.mapping == once.mapping);
    }
    verdict(3, min_entry >= 0.0 && worst_sum <= 1.0 + 1e-12 && idempotence_failures == 0,
            "1000 matrices: min entry " + num(min_entry) + ", max row sum " + num(worst_sum, 17) +
                ", sparsify idempotence failures " + std::to_string(idempotence_failures));
}

// ---- criterion 4 ------------------------------------------------------------

void criterion4() {
    double worst = 0.0;
    std::size_t graphs = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        const std::size_t n = 1 + uniform_index(rng, 20), d = 1 + uniform_index(rng, 5), c = 2 + uniform_index(rng, 3);
        std::vector<Triplet> t;
        const double p = uniform(rng, 0.0, 0.6);
        for (Index i = 0; i < n; ++i)
            for (Index j = i + 1; j < n; ++j)
                if (uniform(rng) < p) {
                    const double w = uniform(rng, 0.5, 2.0);
                    t.push_back({i, j, w});
                    t.push_back({j, i, w});
                }
        const CsrMatrix adj = CsrMatrix::from_triplets(n, n, t);
        DenseMatrix x(n, d);
        for (double &v : x.values()) v = standard_normal(rng);
        RelayConfig rc;
        rc.depth = uniform_index(rng, 4);
        rc.head_dims = seed % 3 == 0 ? std::vector<std::size_t>{4, c} : std::vector<std::size_t>{c};
        const RelayWeights w = init_relay(d, rc, rng);
        const DenseMatrix got = forward(normalize_adjacency(adj), x, w, rc).logits;

        // Naive: dense Â = D^-1/2 (A + I) D^-1/2 by loops, L dense products, then the head.
        std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
        for (const auto &e : t) a[e.row][e.col] += e.val;
        for (std::size_t i = 0; i < n; ++i) a[i][i] += 1.0;
        std::vector<double> deg(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) deg[i] += a[i][j];
        std::vector<std::vector<double>> h(n, std::vector<double>(d));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < d; ++k) h[i][k] = x(i, k);
        for (std::size_t l = 0; l < rc.depth; ++l) {
            auto next = h;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < d; ++k) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += a[i][j] / std::sqrt(deg[i] * deg[j]) * h[j][k];
                    next[i][k] = s;
                }
            h = next;
        }
        for (std::size_t layer = 0; layer < w.w.size(); ++layer) {
            const DenseMatrix &wl = w.w[layer];
            std::vector<std::vector<double>> out(n, std::vector<double>(wl.cols(), 0.0));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t o = 0; o < wl.cols(); ++o) {
                    double s = 0.0;
                    for (std::size_t k = 0; k < wl.rows(); ++k) s += h[i][k] * wl(k, o);
                    out[i][o] = layer + 1 < w.w.size() ? std::max(0.0, s) : s;
                }
            h = out;
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t o = 0; o < c; ++o) worst = std::max(worst, std::abs(got(i, o) - h[i][o]));
        ++graphs;
    }
    verdict(4, worst <= 1e-12, "max abs diff " + num(worst, 3) + " over " + std::to_string(graphs) + " graphs (N <= 20)");
}

// ---- criteria 5 to 8 --------------------------------------------------------

constexpr std::uint64_t kSeeds[] = {0, 1, 2, 3, 4};

struct SeedRun {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    CondensedBundle bundle;
    double node = 0.0, graph = 0.0;
};

SeedRun condense_seed(const ExperimentData &e, std::uint64_t seed, const std::function<void(TrainConfig &)> &tweak) {
    SeedRun r;
    r.seed = seed;
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.relay.head_dims = {e.train_graph.num_classes};
    if (tweak) tweak(cfg);
    try {
        r.bundle = condense_and_deploy(e, cfg, DeployConfig{});
        r.node = score(infer(r.bundle, e.test, BatchMode::Node), e.test);
        r.graph = score(infer(r.bundle, e.test, BatchMode::Graph), e.test);
        r.ok = true;
    } catch (const Error &err) {
        r.error = err.what();
        // Same run without thresholding, to report how far A' fell short.
        TrainConfig probe = cfg;
        probe.mu = 0.0;
        const TrainResult t = run(e.train_graph, e.support, probe);
        r.error += " (largest A' entry " + std::to_string(max_abs(t.a_prime)) + ")";
    }
    return r;
}

struct Variant {
    std::vector<SeedRun> runs;
    bool all_ok() const {
        return std::all_of(runs.begin(), runs.end(), [](const SeedRun &r) { return r.ok; });
    }
    std::vector<double> node() const {
        std::vector<double> v;
        for (const auto &r : runs)
            if (r.ok) v.push_back(r.node);
        return v;
    }
    std::vector<double> graph() const {
        std::vector<double> v;
        for (const auto &r : runs)
            if (r.ok) v.push_back(r.graph);
        return v;
    }
    std::string failures() const {
        std::string s;
        for (const auto &r : runs)
            if (!r.ok) s += "seed " + std::to_string(r.seed) + ": " + r.error + "; ";
        return s;
    }
};

std::string per_seed(const std::vector<SeedRun> &runs, bool graph) {
    std::string s;
    for (const auto &r : runs) s += (s.empty() ? "" : " ") + (r.ok ? num(graph ? r.graph : r.node) : std::string("err"));
    return s;
}

// Regression numbers from the first run (g++ 11, Release). Node and graph
// means cover the seeds that condensed (0 to 3); random covers all five.
constexpr double kPinnedNode = 0.955;
constexpr double kPinnedGraph = 0.971667;
constexpr double kPinnedRandom = 0.526667;
constexpr double kPinTolerance = 0.005;

void criteria5to8() {
    const auto t0 = Clock::now();
    std::vector<ExperimentData> data;
    for (auto s : kSeeds) data.push_back(prepare_experiment(sbm_experiment_bundle(s)));

    Variant full, plain, no_ind;
    std::vector<double> random_acc;
    for (std::size_t k = 0; k < data.size(); ++k) {
        full.runs.push_back(condense_seed(data[k], kSeeds[k], {}));
        const ExperimentData &e = data[k];
        const DeployConfig dc;
        const RelayConfig rc = resolved_relay(dc, e.train_graph.num_classes, kSeeds[k]);
        const RelayWeights w = train_deploy_relay(e.train_graph, dc, kSeeds[k]);
        TrainConfig tc;
        const std::size_t n_prime = synthetic_size(tc, e.train_graph.num_nodes(), e.train_graph.num_classes);
        random_acc.push_back(evaluate_coreset(e, CoresetMethod::Random, n_prime, w, rc, BatchMode::Node, kSeeds[k]).accuracy);
    }
    const double t5 = seconds(t0);

    // Criterion 5.
    {
        const double node = mean(full.node()), graph = mean(full.graph()), rnd = mean(random_acc);
        const bool pinned_set = kPinnedNode > 0.0;
        const bool pin_ok = !pinned_set || (std::abs(node - kPinnedNode) <= kPinTolerance &&
                                            std::abs(graph - kPinnedGraph) <= kPinTolerance &&
                                            std::abs(rnd - kPinnedRandom) <= kPinTolerance);
        const bool pass = full.all_ok() && node - rnd >= 0.05 && graph >= node && pin_ok && t5 < 300.0;
        verdict(5, pass, "node " + num(node) + " vs random " + num(rnd) + " (gap " + num(100 * (node - rnd), 3) +
                             " pp, need >= 5); graph " + num(graph) + " (need >= node); " + num(t5, 3) + " s");
        note("per-seed node:   " + per_seed(full.runs, false));
        note("per-seed graph:  " + per_seed(full.runs, true));
        std::string r;
        for (double a : random_acc) r += num(a) + " ";
        note("per-seed random: " + r);
        if (!full.all_ok()) note("condensation errors: " + full.failures());
        note(pinned_set ? "pinned node/graph/random " + num(kPinnedNode) + "/" + num(kPinnedGraph) + "/" +
                              num(kPinnedRandom) + " (tolerance " + num(kPinTolerance) + "): " + (pin_ok ? "match" : "MISMATCH")
                        : "regression numbers not pinned yet");
    }

    // Criterion 6 on the first seed's bundle.
    {
        const ExperimentData &e = data[0];
        const SeedRun &run = full.runs[0];
        if (!run.ok) {
            verdict(6, false, "no bundle for seed 0: " + run.error);
        } else {
            const CondensedBundle &b = run.bundle;
            const SparseGraph &g = e.train_graph;
            // Test nodes arrive as 15 batches of 10.
            std::vector<IncrementalBatch> batches;
            const auto &test_ids = e.bundle.splits.test;
            for (std::size_t s = 0; s < test_ids.size(); s += 10) {
                std::vector<Index> ids(test_ids.begin() + static_cast<std::ptrdiff_t>(s),
                                       test_ids.begin() + static_cast<std::ptrdiff_t>(std::min(s + 10, test_ids.size())));
                batches.push_back(make_incremental_batch(e.bundle.graph, e.bundle.splits.train, ids));
            }
            double f_syn = 0.0, f_orig = 0.0, m_syn = 0.0, m_orig = 0.0;
            for (const auto &batch : batches) {
                const auto rs = infer(b, batch, BatchMode::Node);
                const auto ro = infer_on_original(g, b.relay, b.relay_config, batch, BatchMode::Node);
                f_syn += rs.flops;
                f_orig += ro.flops;
                m_syn = std::max(m_syn, rs.peak_bytes);
                m_orig = std::max(m_orig, ro.peak_bytes);
            }
            const auto time_pass = [&](bool synthetic) {
                std::vector<double> reps;
                for (int rep = 0; rep < 21; ++rep) {
                    double total = 0.0;
                    for (const auto &batch : batches)
                        total += synthetic ? infer(b, batch, BatchMode::Node).wall_seconds
                                           : infer_on_original(g, b.relay, b.relay_config, batch, BatchMode::Node).wall_seconds;
                    reps.push_back(total);
                }
                std::sort(reps.begin(), reps.end());
                return reps[reps.size() / 2];
            };
            const double t_syn = time_pass(true), t_orig = time_pass(false);
            const double flop_ratio = f_orig / f_syn, time_ratio = t_orig / t_syn;
            verdict(6, flop_ratio >= 10.0 && time_ratio >= 2.0,
                    "FLOP ratio " + num(flop_ratio, 3) + " (>= 10), wall-time ratio " + num(time_ratio, 3) +
                        " (>= 2), 15 node batches of 10 test nodes");
            note("memory estimate ratio " + num(m_orig / m_syn, 3) + "; median of 21 timing passes: synthetic " +
                 num(1e3 * t_syn, 3) + " ms, original " + num(1e3 * t_orig, 3) + " ms");
            const auto ws = infer(b, e.test, BatchMode::Node);
            const auto wo = infer_on_original(g, b.relay, b.relay_config, e.test, BatchMode::Node);
            note("whole test set as one batch (informational): FLOP ratio " + num(wo.flops / ws.flops, 3));
        }
    }

    // Criterion 7.
    for (std::size_t k = 0; k < data.size(); ++k) {
        plain.runs.push_back(condense_seed(data[k], kSeeds[k], [](TrainConfig &c) {
            c.lambda = 0.0;
            c.beta = 0.0;
        }));
        no_ind.runs.push_back(condense_seed(data[k], kSeeds[k], [](TrainConfig &c) { c.beta = 0.0; }));
    }
    {
        const bool ok = full.all_ok() && plain.all_ok() && no_ind.all_ok();
        const double f = mean(full.node()), p = mean(plain.node()), n = mean(no_ind.node());
        verdict(7, ok && p <= f && n < f,
                "node-batch means: full " + num(f) + ", plain " + num(p) + " (need <= full), no L_ind " + num(n) +
                    " (need < full)");
        note("graph-batch means (informational): full " + num(mean(full.graph())) + ", plain " +
             num(mean(plain.graph())) + ", no L_ind " + num(mean(no_ind.graph())));
        note("per-seed plain node: " + per_seed(plain.runs, false) + "; no L_ind node: " + per_seed(no_ind.runs, false));
        if (!ok) note("condensation errors: " + full.failures() + plain.failures() + no_ind.failures());
    }

    // Criterion 8.
    {
        std::vector<double> vanilla, lp;
        double worst_sum = 0.0, min_entry = 0.0, ep_gap = 0.0;
        bool ep_identity = true;
        for (std::size_t k = 0; k < data.size(); ++k) {
            const SeedRun &run = full.runs[k];
            if (!run.ok) continue;
            const ExperimentData &e = data[k];
            const CalibrationOutcome c = calibrate(run.bundle, e.test, BatchMode::Node, PropagationConfig{});
            vanilla.push_back(accuracy(c.vanilla.predictions, e.test.labels));
            lp.push_back(accuracy(c.calibrated, e.test.labels));

            const auto asm_ = assemble_inductive(run.bundle.a_prime, run.bundle.mapping, run.bundle.x_prime, e.test,
                                                 BatchMode::Node);
            const CsrMatrix norm = normalize_adjacency(asm_.adj);
            const DenseMatrix soft = label_propagate(norm, run.bundle.y_prime, run.bundle.num_classes, PropagationConfig{});
            for (std::size_t i = 0; i < soft.rows(); ++i) {
                double s = 0.0;
                for (double v : soft.row(i)) {
                    s += v;
                    min_entry = std::min(min_entry, v);
                }
                if (s != 0.0) worst_sum = std::max(worst_sum, std::abs(s - 1.0));
            }
            // Seed logits whose softmax is exactly one-hot give a zero residual.
            DenseMatrix fitted(run.bundle.num_synthetic(), run.bundle.num_classes);
            for (std::size_t i = 0; i < fitted.rows(); ++i) fitted(i, static_cast<std::size_t>(run.bundle.y_prime[i])) = 1e4;
            const DenseMatrix out = error_propagate(norm, fitted, run.bundle.y_prime, c.vanilla.logits, PropagationConfig{});
            ep_identity = ep_identity && out == c.vanilla.logits;
            ep_gap = std::max(ep_gap, max_abs_diff(out, c.vanilla.logits));
        }
        const bool ok = full.all_ok();
        const double v = mean(vanilla), l = mean(lp);
        verdict(8, ok && l >= v - 0.005 && min_entry >= 0.0 && worst_sum <= 1e-12 && ep_identity,
                "LP " + num(l) + " vs vanilla " + num(v) + " (need >= vanilla - 0.5 pp); LP row-sum error " +
                    num(worst_sum, 3) + ", min entry " + num(min_entry) + "; EP zero-residual max change " +
                    num(ep_gap, 3));
        if (!ok) note("computed over seeds that condensed; errors: " + full.failures());
    }
}

// ---- criterion 9 ------------------------------------------------------------

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

int run_cli(const std::string &args) {
    const std::string cmd = std::string(GCMAP_CLI_PATH) + " " + args;
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion9() {
    const fs::path work = fs::temp_directory_path() / "gcmap_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);
    const fs::path data = work / "sbm", csv = work / "delta.csv";
    if (run_cli("generate-sbm --seed 0 --out " + data.string() + " > /dev/null") != 0) {
        verdict(9, false, "generate-sbm failed");
        return;
    }
    const GraphBundle expect = sbm_experiment_bundle(0);
    const GraphBundle got = load_bundle(data);
    const bool same_setup = got.graph == expect.graph && got.splits == expect.splits;
    const int code = run_cli("bench --graph " + data.string() + " --sweep delta 0,0.05,0.1,0.2,0.3 --reps 3 --out " +
                             csv.string() + " > /dev/null");
    if (code != 0) {
        verdict(9, false, "bench exited with code " + std::to_string(code));
        return;
    }
    std::istringstream in(slurp(csv));
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        for (std::string c; std::getline(hs, c, ',');) header.push_back(c);
    }
    const auto col = [&](const std::string &name) {
        return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
    };
    std::vector<double> values, sparsity, acc;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
        values.push_back(std::stod(cells[col("value")]));
        sparsity.push_back(std::stod(cells[col("mapping_sparsity")]));
        acc.push_back(std::stod(cells[col("accuracy")]));
    }
    const std::vector<double> want{0.0, 0.05, 0.1, 0.2, 0.3};
    bool monotone = true;
    for (std::size_t k = 1; k < sparsity.size(); ++k) monotone = monotone && sparsity[k] >= sparsity[k - 1];
    std::string sp, ac;
    for (std::size_t k = 0; k < sparsity.size(); ++k) {
        sp += num(sparsity[k]) + " ";
        ac += num(acc[k]) + " ";
    }
    verdict(9, same_setup && values == want && monotone,
            std::to_string(values.size()) + " sweep points in CSV; mapping sparsity " + sp + "(non-decreasing)");
    note("node-batch accuracy along delta (reported, not asserted): " + ac);
    if (!same_setup) note("CLI-generated graph differs from the library SBM setup");
}

// ---- criterion 10 -----------------------------------------------------------

void criterion10() {
    const char *dir = std::getenv("GCMAP_PUBMED_DIR");
    if (dir == nullptr) {
        std::printf("criterion 10: SKIP  long-running Pubmed check; set GCMAP_PUBMED_DIR to a graph bundle to run it\n");
        return;
    }
    const ExperimentData e = prepare_experiment(load_bundle(dir));
    TrainConfig cfg;
    cfg.reduction_rate = 0.0032;
    cfg.relay.head_dims = {e.train_graph.num_classes};
    try {
        const CondensedBundle b = condense_and_deploy(e, cfg, DeployConfig{});
        const double acc = score(infer(b, e.test, BatchMode::Node), e.test);
        verdict(10, acc >= 0.76, "Pubmed node-batch accuracy " + num(acc) + " (>= 0.76)");
    } catch (const Error &err) {
        verdict(10, false, std::string("Pubmed run failed: ") + err.what());
    }
}

} // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criteria5to8();
    criterion9();
    criterion10();
    std::printf("%d criteria failed\n", g_failed);
    return g_failed == 0 ? 0 : 1;
}

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

// Alternating optimization of the synthetic graph (X', Φ) and the mapping M.
// Each outer epoch re-draws the relay weights, runs T synthetic-graph steps
// (each followed by one relay step on S), then T mapping steps with the relay
// frozen. The result is sparsified once at the end.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gcmap/autodiff.hpp"
#include "gcmap/condense.hpp"
#include "gcmap/dense.hpp"
#include "gcmap/error.hpp"
#include "gcmap/graph.hpp"
#include "gcmap/mapping.hpp"
#include "gcmap/optim.hpp"
#include "gcmap/relay.hpp"
#include "gcmap/rng.hpp"
#include "gcmap/sparse.hpp"

namespace gcmap {

enum class MappingInit { ClassAware, Random };

inline MappingInit parse_mapping_init(const std::string &s) {
    if (s == "class_aware") return MappingInit::ClassAware;
    if (s == "random") return MappingInit::Random;
    throw DataError("unknown mapping init '" + s + "' (expected class_aware or random)");
}

inline const char *to_string(MappingInit m) { return m == MappingInit::ClassAware ? "class_aware" : "random"; }

struct TrainConfig {
    std::size_t outer_epochs = 20;  ///< K
    std::size_t inner_steps = 10;   ///< T
    double lr_features = 0.01;      ///< η1, X'
    double lr_affinity = 0.01;      ///< η2, Φ
    double lr_mapping = 0.1;        ///< η3, raw M
    OptimizerKind features_optimizer = OptimizerKind::Adam;
    OptimizerKind affinity_optimizer = OptimizerKind::Adam;
    OptimizerKind mapping_optimizer = OptimizerKind::Adam;
    double lambda = 0.1;
    double beta = 100.0;
    double mu = 0.5;
    double delta = 0.01;
    double mapping_eps = kDefaultMappingEps;
    RelayConfig relay;  ///< empty head_dims means a single linear layer to C
    OptimizerKind relay_optimizer = OptimizerKind::Sgd;
    double relay_lr = 0.01;
    std::vector<std::size_t> affinity_hidden{32};
    std::size_t edge_batch = 256;  ///< b_pos; as many non-edges are added
    bool positives_only = false;
    BatchMode support_mode = BatchMode::Graph;
    MappingInit mapping_init = MappingInit::ClassAware;
    double reduction_rate = 0.05;
    std::size_t n_prime = 0;  ///< overrides reduction_rate when nonzero
    std::uint64_t seed = 0;
    double divergence_limit = 1e12;
};

/// N' = max(C, ⌊r N⌋) unless given explicitly.
inline std::size_t synthetic_size(const TrainConfig &cfg, std::size_t n, std::size_t num_classes) {
    if (cfg.n_prime > 0) return cfg.n_prime;
    const auto k = static_cast<std::size_t>(std::floor(cfg.reduction_rate * static_cast<double>(n) + 1e-9));
    return std::max(k, num_classes);
}

inline RelayConfig resolved_relay(const TrainConfig &cfg, std::size_t num_classes) {
    RelayConfig r = cfg.relay;
    if (r.head_dims.empty()) r.head_dims = {num_classes};
    return r;
}

inline void validate(const TrainConfig &cfg, std::size_t num_classes) {
    detail::require_data(cfg.outer_epochs >= 1 && cfg.inner_steps >= 1, "train config: K and T must be >= 1");
    for (double lr : {cfg.lr_features, cfg.lr_affinity, cfg.lr_mapping, cfg.relay_lr})
        detail::require_data(lr >= 0.0 && std::isfinite(lr), "train config: learning rates must be finite and >= 0");
    detail::require_data(cfg.lambda >= 0.0 && cfg.beta >= 0.0, "train config: lambda and beta must be >= 0");
    detail::require_data(cfg.mu >= 0.0 && cfg.mu < 1.0 && cfg.delta >= 0.0 && cfg.delta < 1.0,
                         "train config: mu and delta must be in [0, 1)");
    detail::require_data(cfg.reduction_rate > 0.0 && cfg.reduction_rate <= 1.0, "train config: r must be in (0, 1]");
    const RelayConfig r = resolved_relay(cfg, num_classes);
    validate(r, num_classes);
    detail::require_data(r.architecture == Architecture::SGC, "train config: the relay for condensation must be sgc");
}

enum class Phase { Synthetic, Mapping };

inline const char *to_string(Phase p) { return p == Phase::Synthetic ? "synthetic" : "mapping"; }

/// One step of either phase. Terms a phase does not evaluate are 0.
struct StepLoss {
    std::size_t epoch = 0;
    std::size_t step = 0;
    Phase phase = Phase::Synthetic;
    double gra = 0.0;
    double str = 0.0;
    double tra = 0.0;
    double ind = 0.0;
};

/// `epoch step phase loss_gra loss_str loss_tra loss_ind`
inline std::string format_log_line(const StepLoss &s) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%zu %zu %s %.10g %.10g %.10g %.10g", s.epoch, s.step, to_string(s.phase), s.gra,
                  s.str, s.tra, s.ind);
    return buf;
}

/// Quantities of the original graph and the support nodes that do not change
/// during training.
struct TrainProblem {
    const SparseGraph *original = nullptr;
    std::size_t depth = 2;
    DenseMatrix propagated;          ///< Â^L X over the original graph
    DenseMatrix support_propagated;  ///< support rows of the propagation over the original-graph assembly
    std::shared_ptr<const CsrMatrix> support_links;
    DenseMatrix support_features;
    DenseMatrix support_tilde;  ///< dense, zero in node-batch mode
};

inline TrainProblem make_problem(const SparseGraph &original, const IncrementalBatch &support, const TrainConfig &cfg) {
    validate(original);
    detail::require_data(original.has_labels(), "trainer: original graph has no labels");
    for (int y : original.labels) detail::require_data(y >= 0, "trainer: every training node needs a label");
    validate(support, original.num_nodes(), original.num_features());
    TrainProblem p;
    p.original = &original;
    p.depth = cfg.relay.depth;
    p.propagated = propagate(normalize_adjacency(original.adj), original.features, p.depth);
    p.support_features = support.x;
    p.support_links = std::make_shared<const CsrMatrix>(support.a);
    if (support.size() == 0) return p;
    const auto host = assemble_original(original, support, cfg.support_mode);
    const DenseMatrix all = propagate(normalize_adjacency(host.adj), host.features, p.depth);
    p.support_propagated = slice_rows(all, original.num_nodes(), all.rows());
    p.support_tilde = detail::batch_tilde(support, cfg.support_mode).to_dense();
    return p;
}

struct TrainState {
    SyntheticGraph synthetic;
    MappingMatrix mapping;
    RelayWeights relay;
    std::size_t epoch = 0;
    std::size_t synthetic_steps = 0;
    std::size_t mapping_steps = 0;
    std::vector<StepLoss> history;

    Optimizer opt_features;
    std::vector<Optimizer> opt_affinity;  ///< weights then biases
    Optimizer opt_mapping;
    RelayOptimizer opt_relay;
    Rng relay_rng;
    Rng edge_rng;
};

inline TrainState init_state(const TrainProblem &p, const TrainConfig &cfg) {
    const SparseGraph &g = *p.original;
    validate(cfg, g.num_classes);
    TrainState s;
    const std::size_t n_prime = synthetic_size(cfg, g.num_nodes(), g.num_classes);
    s.synthetic.y_prime = predefine_labels(g.labels, g.num_classes, n_prime);
    Rng init_rng = make_rng(cfg.seed, SeedStream::SyntheticInit);
    s.synthetic.x_prime = init_synthetic_features(g, s.synthetic.y_prime, init_rng);
    Rng phi_rng = make_rng(cfg.seed, SeedStream::AffinityInit);
    s.synthetic.phi = init_affinity_mlp(g.num_features(), cfg.affinity_hidden, phi_rng);
    if (cfg.mapping_init == MappingInit::ClassAware) {
        s.mapping = init_mapping(g.labels, s.synthetic.y_prime);
    } else {
        Rng m_rng = make_rng(cfg.seed, SeedStream::MappingInit);
        s.mapping = init_mapping_random(g.num_nodes(), n_prime, m_rng);
    }
    s.mapping.eps = cfg.mapping_eps;
    s.opt_features = Optimizer(cfg.features_optimizer, cfg.lr_features);
    const std::size_t groups = 2 * s.synthetic.phi.weights.size();
    s.opt_affinity.assign(groups, Optimizer(cfg.affinity_optimizer, cfg.lr_affinity));
    s.opt_mapping = Optimizer(cfg.mapping_optimizer, cfg.lr_mapping);
    s.relay_rng = make_rng(cfg.seed, SeedStream::RelayInit);
    s.edge_rng = make_rng(cfg.seed, SeedStream::EdgeBatch);
    return s;
}

namespace detail {

inline void guard(double v, const char *what, const TrainConfig &cfg) {
    if (!std::isfinite(v) || std::abs(v) > cfg.divergence_limit)
        throw DivergenceError(std::string("divergence: ") + what + " = " + std::to_string(v));
}

inline void guard(const DenseMatrix &m, const char *what) {
    if (!all_finite(m)) throw DivergenceError(std::string("divergence: non-finite entry in ") + what);
}

inline DenseMatrix synthetic_propagated(const SyntheticGraph &s, std::size_t depth) {
    return propagate(normalize_adjacency_dense(synth_adjacency(s.x_prime, s.phi)), s.x_prime, depth);
}

} // namespace detail

/// Draws fresh relay weights and resets the relay optimizer.
inline void reinit_relay(TrainState &s, const TrainConfig &cfg, std::size_t num_features, std::size_t num_classes) {
    const RelayConfig rc = resolved_relay(cfg, num_classes);
    s.relay = init_relay(num_features, rc, s.relay_rng);
    s.opt_relay = RelayOptimizer(s.relay.w.size(), cfg.relay_optimizer, cfg.relay_lr);
}

/// One L_S step on X' and Φ followed by one relay step on S. M is untouched.
inline StepLoss phase_update_synthetic(TrainState &s, const TrainProblem &p, const TrainConfig &cfg) {
    const SparseGraph &g = *p.original;
    const GradientSet g_t = sgc_head_grad(p.propagated, g.labels, s.relay);
    const DenseMatrix m_hat = normalize_mapping(s.mapping);
    EdgeBatch batch;
    if (cfg.lambda > 0.0) batch = sample_edge_batch(g.adj, cfg.edge_batch, s.edge_rng);

    ad::Tape t;
    ad::Var x = t.leaf(s.synthetic.x_prime);
    const ad::AffinityVars phi = ad::affinity_leaves(t, s.synthetic.phi);
    ad::SyntheticLossInputs in;
    in.g_t = &g_t;
    in.relay = &s.relay;
    in.depth = p.depth;
    in.y_prime = s.synthetic.y_prime;
    in.m_hat = &m_hat;
    in.batch = &batch;
    in.lambda = cfg.lambda;
    in.positives_only = cfg.positives_only;
    const ad::SyntheticLossVars loss = ad::synthetic_loss(x, phi, in);
    StepLoss rec;
    rec.epoch = s.epoch;
    rec.step = s.synthetic_steps;
    rec.phase = Phase::Synthetic;
    rec.gra = t.value(loss.gra)(0, 0);
    rec.str = batch.size() > 0 ? t.value(loss.str)(0, 0) : 0.0;
    detail::guard(t.value(loss.total)(0, 0), "L_S", cfg);
    t.backward(loss.total);

    s.opt_features.step(s.synthetic.x_prime, t.grad(x));
    const std::size_t layers = s.synthetic.phi.weights.size();
    for (std::size_t l = 0; l < layers; ++l) {
        s.opt_affinity[l].step(s.synthetic.phi.weights[l], t.grad(phi.weights[l]));
        s.opt_affinity[layers + l].step(s.synthetic.phi.biases[l], t.grad(phi.biases[l]));
    }
    detail::guard(s.synthetic.x_prime, "X'");

    const DenseMatrix p_s = detail::synthetic_propagated(s.synthetic, p.depth);
    s.opt_relay.step(s.relay, sgc_head_grad(p_s, s.synthetic.y_prime, s.relay));
    for (const auto &w : s.relay.w) detail::guard(w, "relay weights");

    ++s.synthetic_steps;
    s.history.push_back(rec);
    return rec;
}

/// Embeddings entering the mapping losses, all under the current relay.
struct MappingTargets {
    DenseMatrix h;
    DenseMatrix h_prime;
    DenseMatrix h_support;
    DenseMatrix a_prime;
};

inline MappingTargets mapping_targets(const TrainState &s, const TrainProblem &p) {
    MappingTargets m;
    m.a_prime = synth_adjacency(s.synthetic.x_prime, s.synthetic.phi);
    m.h = sgc_head(p.propagated, s.relay).embeddings;
    m.h_prime = sgc_head(propagate(normalize_adjacency_dense(m.a_prime), s.synthetic.x_prime, p.depth), s.relay).embeddings;
    if (p.support_features.rows() > 0) m.h_support = sgc_head(p.support_propagated, s.relay).embeddings;
    return m;
}

/// L_M evaluated on a tape; `raw` must belong to `t`.
inline ad::MappingLossVars mapping_loss_on_tape(ad::Var raw, const TrainState &s, const TrainProblem &p,
                                                const MappingTargets &m, const TrainConfig &cfg) {
    ad::MappingLossInputs in;
    in.h = &m.h;
    in.h_prime = &m.h_prime;
    in.a_prime = &m.a_prime;
    in.x_prime = &s.synthetic.x_prime;
    in.a_sup = p.support_links;
    in.x_sup = &p.support_features;
    in.a_sup_tilde = &p.support_tilde;
    in.h_sup = &m.h_support;
    in.relay = &s.relay;
    in.depth = p.depth;
    in.beta = cfg.beta;
    in.eps = s.mapping.eps;
    return ad::mapping_loss(raw, in);
}

/// One L_M step on the raw mapping. X', Φ and the relay are untouched.
inline StepLoss phase_update_mapping(TrainState &s, const TrainProblem &p, const TrainConfig &cfg) {
    const MappingTargets m = mapping_targets(s, p);
    ad::Tape t;
    ad::Var raw = t.leaf(s.mapping.raw);
    const ad::MappingLossVars loss = mapping_loss_on_tape(raw, s, p, m, cfg);
    StepLoss rec;
    rec.epoch = s.epoch;
    rec.step = s.mapping_steps;
    rec.phase = Phase::Mapping;
    rec.tra = t.value(loss.tra)(0, 0);
    rec.ind = t.value(loss.ind)(0, 0);
    detail::guard(t.value(loss.total)(0, 0), "L_M", cfg);
    t.backward(loss.total);
    s.opt_mapping.step(s.mapping.raw, t.grad(raw));
    detail::guard(s.mapping.raw, "M");
    ++s.mapping_steps;
    s.history.push_back(rec);
    return rec;
}

struct TrainResult {
    SyntheticGraph synthetic;
    DenseMatrix a_prime;  ///< dense, before thresholding
    DenseMatrix m_hat;    ///< normalized, before thresholding
    SparsifiedSynthetic sparse;
    RelayWeights relay;   ///< relay at the end of training
    MappingMatrix mapping;
    std::vector<StepLoss> history;
};

using StepCallback = std::function<void(const StepLoss &)>;

inline TrainResult run(const SparseGraph &original, const IncrementalBatch &support, const TrainConfig &cfg,
                       const StepCallback &on_step = {}) {
    const TrainProblem p = make_problem(original, support, cfg);
    TrainState s = init_state(p, cfg);
    for (std::size_t k = 0; k < cfg.outer_epochs; ++k) {
        s.epoch = k;
        s.synthetic_steps = s.mapping_steps = 0;
        reinit_relay(s, cfg, original.num_features(), original.num_classes);
        for (std::size_t t = 0; t < cfg.inner_steps; ++t) {
            const StepLoss r = phase_update_synthetic(s, p, cfg);
            if (on_step) on_step(r);
        }
        for (std::size_t t = 0; t < cfg.inner_steps; ++t) {
            const StepLoss r = phase_update_mapping(s, p, cfg);
            if (on_step) on_step(r);
        }
    }
    TrainResult out;
    out.a_prime = synth_adjacency(s.synthetic.x_prime, s.synthetic.phi);
    out.m_hat = normalize_mapping(s.mapping);
    out.sparse = sparsify(out.a_prime, out.m_hat, cfg.mu, cfg.delta);
    out.synthetic = std::move(s.synthetic);
    out.relay = std::move(s.relay);
    out.mapping = std::move(s.mapping);
    out.history = std::move(s.history);
    return out;
}

} // namespace gcmap

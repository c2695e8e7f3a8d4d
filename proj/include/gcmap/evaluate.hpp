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

// Shared evaluation path: splitting a graph bundle into training graph,
// support batch and test batch, training the deployment relay, packaging a
// condensed bundle and scoring condensed or coreset inference the same way.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gcmap/baselines.hpp"
#include "gcmap/calibration.hpp"
#include "gcmap/condense.hpp"
#include "gcmap/graph.hpp"
#include "gcmap/graph_io.hpp"
#include "gcmap/inference.hpp"
#include "gcmap/optim.hpp"
#include "gcmap/relay.hpp"
#include "gcmap/rng.hpp"
#include "gcmap/sbm.hpp"
#include "gcmap/trainer.hpp"

namespace gcmap {

enum class DeploySource { Original, Synthetic };

inline DeploySource parse_deploy_source(const std::string &s) {
    if (s == "original") return DeploySource::Original;
    if (s == "synthetic") return DeploySource::Synthetic;
    throw DataError("unknown deploy source '" + s + "' (expected original or synthetic)");
}

inline const char *to_string(DeploySource d) { return d == DeploySource::Original ? "original" : "synthetic"; }

/// Training of the model that is shipped in the bundle.
struct DeployConfig {
    DeploySource source = DeploySource::Original;
    RelayConfig relay;  ///< empty head_dims means a single linear layer to C
    std::size_t epochs = 200;
    double lr = 0.01;
    double weight_decay = 5e-4;
    OptimizerKind optimizer = OptimizerKind::Adam;
};

inline RelayConfig resolved_relay(const DeployConfig &cfg, std::size_t num_classes, std::uint64_t seed) {
    RelayConfig r = cfg.relay;
    if (r.head_dims.empty()) r.head_dims = {num_classes};
    r.weight_init_seed = derive_seed(seed, static_cast<std::uint64_t>(SeedStream::DeployRelay));
    return r;
}

/// Relay trained on `g` (all labels used).
inline RelayWeights train_deploy_relay(const SparseGraph &g, const DeployConfig &cfg, std::uint64_t seed) {
    const RelayConfig rc = resolved_relay(cfg, g.num_classes, seed);
    return train_relay(normalize_adjacency(g.adj), g.features, g.labels, rc, cfg.epochs, cfg.optimizer, cfg.lr,
                       cfg.weight_decay);
}

/// Training graph plus the two batches attached to it.
struct ExperimentData {
    GraphBundle bundle;
    SparseGraph train_graph;   ///< induced by the train split
    IncrementalBatch support;  ///< validation split; labels are never read in training
    IncrementalBatch test;
};

inline ExperimentData prepare_experiment(GraphBundle b) {
    ExperimentData e;
    detail::require_data(!b.splits.train.empty(), "experiment: empty train split");
    e.train_graph = induced_subgraph(b.graph, b.splits.train);
    e.support = make_incremental_batch(b.graph, b.splits.train, b.splits.val);
    e.test = make_incremental_batch(b.graph, b.splits.train, b.splits.test);
    e.bundle = std::move(b);
    return e;
}

/// SBM setup of the end-to-end checks: three classes of 200 training nodes,
/// 100 support nodes and 150 test nodes (50 per class).
inline GraphBundle sbm_experiment_bundle(std::uint64_t seed) {
    SbmParams p;
    p.sizes = {284, 283, 283};
    p.seed = seed;
    GraphBundle b;
    b.graph = sbm_generate(p);
    b.splits = stratified_split(b.graph, {200, 200, 200}, {34, 33, 33}, {50, 50, 50}, seed);
    return b;
}

inline CondensedBundle make_condensed(const TrainResult &r, const TrainConfig &cfg, const RelayConfig &relay_cfg,
                                      RelayWeights relay, std::uint64_t fingerprint, DeploySource source) {
    CondensedBundle b;
    b.a_prime = r.sparse.a_prime;
    b.x_prime = r.synthetic.x_prime;
    b.y_prime = r.synthetic.y_prime;
    b.num_classes = relay.w.back().cols();
    b.mapping = r.sparse.mapping;
    b.relay_config = relay_cfg;
    b.relay = std::move(relay);
    b.meta.mu = cfg.mu;
    b.meta.delta = cfg.delta;
    b.meta.lambda = cfg.lambda;
    b.meta.beta = cfg.beta;
    b.meta.seed = cfg.seed;
    b.meta.fingerprint = fingerprint;
    b.meta.deploy = to_string(source);
    return b;
}

/// Condensation followed by deployment-relay training.
inline CondensedBundle condense_and_deploy(const ExperimentData &e, const TrainConfig &cfg, const DeployConfig &deploy,
                                           const StepCallback &on_step = {}, TrainResult *trace = nullptr) {
    TrainResult r = run(e.train_graph, e.support, cfg, on_step);
    const std::size_t C = e.train_graph.num_classes;
    const RelayConfig rc = resolved_relay(deploy, C, cfg.seed);
    RelayWeights w;
    if (deploy.source == DeploySource::Original) {
        w = train_deploy_relay(e.train_graph, deploy, cfg.seed);
    } else {
        SparseGraph s;
        s.adj = r.sparse.a_prime;
        s.features = r.synthetic.x_prime;
        s.labels = r.synthetic.y_prime;
        s.num_classes = C;
        w = train_deploy_relay(s, deploy, cfg.seed);
    }
    CondensedBundle b = make_condensed(r, cfg, rc, std::move(w), graph_fingerprint(e.train_graph), deploy.source);
    if (trace) *trace = std::move(r);
    return b;
}

/// Shared scoring of any inference report.
inline double score(const InferenceReport &r, const IncrementalBatch &batch) {
    detail::require_data(!batch.labels.empty(), "score: batch carries no labels");
    return accuracy(r.predictions, batch.labels);
}

/// Coreset deployment: a relay trained on the training graph, applied to the
/// induced subgraph. Test links to unselected nodes are dropped.
struct CoresetEvaluation {
    CoresetResult coreset;
    InferenceReport report;
    double accuracy = 0.0;
};

inline CoresetEvaluation evaluate_coreset(const ExperimentData &e, CoresetMethod method, std::size_t n_prime,
                                          const RelayWeights &relay, const RelayConfig &relay_cfg, BatchMode mode,
                                          std::uint64_t seed) {
    const SparseGraph &t = e.train_graph;
    const auto counts = class_budget(t.labels, t.num_classes, n_prime);
    DenseMatrix emb;
    if (method == CoresetMethod::Herding || method == CoresetMethod::KCenter)
        emb = forward(normalize_adjacency(t.adj), t.features, relay, relay_cfg).embeddings;
    CoresetEvaluation out;
    out.coreset = select_coreset(method, t, counts, emb, seed);
    std::vector<Index> base;
    base.reserve(out.coreset.selected.size());
    for (Index k : out.coreset.selected) base.push_back(e.bundle.splits.train[k]);
    const IncrementalBatch batch = make_incremental_batch(e.bundle.graph, base, e.bundle.splits.test);
    out.report = infer_on_original(out.coreset.graph, relay, relay_cfg, batch, mode);
    out.accuracy = score(out.report, batch);
    return out;
}

/// Vanilla and propagation-corrected predictions for one batch.
struct CalibrationOutcome {
    InferenceReport vanilla;
    std::vector<int> calibrated;
    double propagation_seconds = 0.0;  ///< normalization excluded
};

namespace detail {

inline CalibrationOutcome calibrate_assembled(const Assembly<CsrMatrix> &asm_, InferenceReport vanilla,
                                              std::span<const int> seed_labels, const DenseMatrix &seed_logits,
                                              std::size_t num_classes, const PropagationConfig &cfg) {
    CalibrationOutcome out;
    const CsrMatrix norm = normalize_adjacency(asm_.adj);
    const auto t0 = Clock::now();
    if (cfg.variant == PropagationVariant::LP) {
        const DenseMatrix soft = label_propagate(norm, seed_labels, num_classes, cfg);
        out.calibrated = propagated_predictions(soft, vanilla.predictions);
    } else {
        out.calibrated = argmax_rows(error_propagate(norm, seed_logits, seed_labels, vanilla.logits, cfg));
    }
    out.propagation_seconds = seconds_since(t0);
    out.vanilla = std::move(vanilla);
    return out;
}

} // namespace detail

/// Propagation over the synthetic graph with Y' as seeds.
inline CalibrationOutcome calibrate(const CondensedBundle &b, const IncrementalBatch &batch, BatchMode mode,
                                    const PropagationConfig &cfg) {
    validate(cfg);
    InferenceReport vanilla = infer(b, batch, mode);
    const auto asm_ = assemble_inductive(b.a_prime, b.mapping, b.x_prime, batch, mode);
    const DenseMatrix seed_logits = cfg.variant == PropagationVariant::EP ? synthetic_logits(b) : DenseMatrix();
    return detail::calibrate_assembled(asm_, std::move(vanilla), b.y_prime, seed_logits, b.num_classes, cfg);
}

/// Same correction over the original graph with its training labels as seeds.
inline CalibrationOutcome calibrate_on_original(const SparseGraph &g, const RelayWeights &relay, const RelayConfig &rc,
                                                const IncrementalBatch &batch, BatchMode mode,
                                                const PropagationConfig &cfg) {
    validate(cfg);
    InferenceReport vanilla = infer_on_original(g, relay, rc, batch, mode);
    const auto asm_ = assemble_original(g, batch, mode);
    DenseMatrix seed_logits;
    if (cfg.variant == PropagationVariant::EP)
        seed_logits = forward(normalize_adjacency(g.adj), g.features, relay, rc).logits;
    return detail::calibrate_assembled(asm_, std::move(vanilla), g.labels, seed_logits, g.num_classes, cfg);
}

} // namespace gcmap

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

// gcmap command-line driver. Exit codes: 0 success, 2 usage or data error,
// 3 training divergence, 1 anything else.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gcmap/gcmap.hpp"

namespace fs = std::filesystem;
using namespace gcmap;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitDivergence = 3;

/// Config file and per-key flags shared by every command.
struct ConfigFlags {
    std::string file;
    std::map<std::string, std::string> values;
    CLI::App *app = nullptr;

    void attach(CLI::App *sub) {
        app = sub;
        sub->add_option("--config", file, "key=value config file; flags override it");
        for (const auto &name : option_names()) sub->add_option("--" + name, values[name], "config key " + name);
    }

    RunConfig resolve() const {
        RunConfig c;
        if (!file.empty()) apply_file(c, file);
        for (const auto &[k, v] : values)
            if (app->count("--" + k) > 0) set_option(c, k, v);
        return c;
    }
};

std::vector<std::size_t> parse_sizes(const std::string &s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(static_cast<std::size_t>(std::stoull(io::trim(tok))));
        } catch (const std::exception &) {
            throw DataError("expected a comma-separated list of counts, got '" + s + "'");
        }
    }
    return out;
}

/// "a,b,c" or "start:stop:step" (stop inclusive up to rounding).
std::vector<double> parse_sweep(const std::string &s) {
    std::vector<double> out;
    const auto num = [&](const std::string &t) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(t, &pos);
            if (pos == t.size()) return v;
        } catch (const std::exception &) {
        }
        throw DataError("bad sweep value '" + t + "' in '" + s + "'");
    };
    if (s.find(':') != std::string::npos) {
        std::stringstream ss(s);
        std::string a, b, c;
        if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c))
            throw DataError("range sweep must be start:stop:step, got '" + s + "'");
        const double lo = num(a), hi = num(b), step = num(c);
        if (!(step > 0.0) || hi < lo) throw DataError("range sweep needs step > 0 and stop >= start");
        const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
        // Snap to a 1e-12 grid to drop accumulated rounding.
        for (std::size_t k = 0; k < count; ++k)
            out.push_back(std::round((lo + static_cast<double>(k) * step) * 1e12) / 1e12);
    } else {
        std::stringstream ss(s);
        std::string t;
        while (std::getline(ss, t, ',')) out.push_back(num(io::trim(t)));
    }
    if (out.empty()) throw DataError("empty sweep");
    return out;
}

std::string fmt(double v) { return io::format_double(v); }

void write_text(const fs::path &p, const std::string &text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    auto out = io::open_out(p);
    out << text;
}

void write_predictions(const fs::path &p, const std::vector<int> &pred) {
    std::ostringstream s;
    for (int y : pred) s << y << '\n';
    write_text(p, s.str());
}

/// Median wall time of `reps` runs of `f`; `f` returns its own timing.
template <typename F> double median_seconds(std::size_t reps, F &&f) {
    std::vector<double> t;
    for (std::size_t k = 0; k < reps; ++k) t.push_back(f());
    std::sort(t.begin(), t.end());
    return t[t.size() / 2];
}

SparseGraph training_graph_checked(const fs::path &graph_dir, const CondensedBundle &b) {
    const SparseGraph g = training_graph(load_bundle(graph_dir));
    if (graph_fingerprint(g) != b.meta.fingerprint)
        throw DataError("graph " + graph_dir.string() + " is not the graph the bundle was condensed from");
    return g;
}

// ---- commands -------------------------------------------------------------

struct GenerateArgs {
    std::string out;
    std::string sizes = "284,283,283";
    std::string train = "200,200,200";
    std::string val = "34,33,33";
    std::string test = "50,50,50";
    double p_in = 0.05;
    double p_out = 0.005;
    std::size_t features = 16;
    double separation = 1.0;
    std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs &a) {
    SbmParams p;
    p.sizes = parse_sizes(a.sizes);
    p.p_in = a.p_in;
    p.p_out = a.p_out;
    p.num_features = a.features;
    p.mu = a.separation;
    p.seed = a.seed;
    GraphBundle b;
    b.graph = sbm_generate(p);
    b.splits = stratified_split(b.graph, parse_sizes(a.train), parse_sizes(a.val), parse_sizes(a.test), a.seed);
    save_bundle(b, a.out);
    std::cout << "nodes=" << b.graph.num_nodes() << "\nedges=" << b.graph.num_edges() << "\ntrain="
              << b.splits.train.size() << "\nval=" << b.splits.val.size() << "\ntest=" << b.splits.test.size() << '\n';
    return 0;
}

int cmd_make_batch(const std::string &graph, const std::string &split, const std::string &out) {
    const GraphBundle b = load_bundle(graph);
    const std::vector<Index> *ids = nullptr;
    if (split == "val") ids = &b.splits.val;
    else if (split == "test") ids = &b.splits.test;
    else throw DataError("--split must be val or test, got '" + split + "'");
    save_batch(make_incremental_batch(b.graph, b.splits.train, *ids), out);
    std::cout << "n=" << ids->size() << '\n';
    return 0;
}

int cmd_condense(const RunConfig &rc, const std::string &graph, const std::string &out) {
    const ExperimentData e = prepare_experiment(load_bundle(graph));
    const std::size_t C = e.train_graph.num_classes;
    const TrainConfig tc = rc.train_config(C);
    fs::create_directories(out);
    write_effective_config(rc, fs::path(out) / "effective.cfg");
    auto log = io::open_out(fs::path(out) / "run.log");
    TrainResult trace;
    const CondensedBundle b = condense_and_deploy(
        e, tc, rc.deploy_config(C), [&](const StepLoss &s) { log << format_log_line(s) << '\n'; }, &trace);
    save_condensed(b, fs::path(out) / "bundle");
    std::cout << "n=" << e.train_graph.num_nodes() << "\nn_prime=" << b.num_synthetic()
              << "\nnnz_a_prime=" << b.a_prime.nnz() << "\nnnz_mapping=" << b.mapping.nnz()
              << "\nempty_mapping_rows=" << trace.sparse.empty_mapping_rows << '\n';
    if (trace.sparse.empty_mapping_rows > 0)
        std::cerr << "warning: " << trace.sparse.empty_mapping_rows
                  << " original nodes have no mapping entry left after thresholding\n";
    return 0;
}

fs::path bundle_path(const std::string &dir) {
    // Accept either the condense output directory or the bundle inside it.
    return fs::exists(fs::path(dir) / "bundle" / "meta") ? fs::path(dir) / "bundle" : fs::path(dir);
}

int cmd_infer(const RunConfig &rc, const std::string &bundle_dir, const std::string &batch_dir,
              const std::string &graph, bool baseline, const std::string &out) {
    const CondensedBundle b = load_condensed(bundle_path(bundle_dir));
    const IncrementalBatch batch = load_batch(batch_dir);
    if (rc.mode == BatchMode::Graph && !batch.a_tilde)
        throw DataError("graph mode needs " + (fs::path(batch_dir) / "inner.txt").string());
    const InferenceReport r = infer(b, batch, rc.mode);
    std::string report = "mode=" + std::string(to_string(rc.mode)) + "\n" + to_key_values(r, batch.labels);
    if (baseline) {
        if (graph.empty()) throw DataError("--baseline-original needs --graph");
        const SparseGraph g = training_graph_checked(graph, b);
        const InferenceReport o = infer_on_original(g, b.relay, b.relay_config, batch, rc.mode);
        std::istringstream lines(to_key_values(o, batch.labels));
        for (std::string line; std::getline(lines, line);) report += "original_" + line + "\n";
        report += "flop_ratio=" + fmt(o.flops / r.flops) + "\n";
        report += "speedup=" + fmt(o.wall_seconds / r.wall_seconds) + "\n";
    }
    std::cout << report;
    if (!out.empty()) {
        fs::create_directories(out);
        write_text(fs::path(out) / "report.txt", report);
        write_predictions(fs::path(out) / "predictions.txt", r.predictions);
        write_effective_config(rc, fs::path(out) / "effective.cfg");
    }
    return 0;
}

int cmd_calibrate(const RunConfig &rc, const std::string &bundle_dir, const std::string &batch_dir,
                  const std::string &graph, const std::string &out) {
    const CondensedBundle b = load_condensed(bundle_path(bundle_dir));
    const IncrementalBatch batch = load_batch(batch_dir);
    if (batch.labels.empty()) throw DataError("calibrate needs " + (fs::path(batch_dir) / "labels.txt").string());
    std::ostringstream csv;
    csv << "graph,variant,vanilla_accuracy,calibrated_accuracy,propagation_ms\n";
    for (PropagationVariant v : {PropagationVariant::LP, PropagationVariant::EP}) {
        PropagationConfig pc = rc.propagation;
        pc.variant = v;
        const CalibrationOutcome c = calibrate(b, batch, rc.mode, pc);
        csv << "synthetic," << to_string(v) << ',' << fmt(accuracy(c.vanilla.predictions, batch.labels)) << ','
            << fmt(accuracy(c.calibrated, batch.labels)) << ',' << fmt(1e3 * c.propagation_seconds) << '\n';
    }
    if (!graph.empty()) {
        const SparseGraph g = training_graph_checked(graph, b);
        for (PropagationVariant v : {PropagationVariant::LP, PropagationVariant::EP}) {
            PropagationConfig pc = rc.propagation;
            pc.variant = v;
            const CalibrationOutcome c = calibrate_on_original(g, b.relay, b.relay_config, batch, rc.mode, pc);
            csv << "original," << to_string(v) << ',' << fmt(accuracy(c.vanilla.predictions, batch.labels)) << ','
                << fmt(accuracy(c.calibrated, batch.labels)) << ',' << fmt(1e3 * c.propagation_seconds) << '\n';
        }
    }
    std::cout << csv.str();
    if (!out.empty()) write_text(out, csv.str());
    return 0;
}

int cmd_baseline(const RunConfig &rc, const std::string &graph, const std::string &method, const std::string &out) {
    const ExperimentData e = prepare_experiment(load_bundle(graph));
    const std::size_t C = e.train_graph.num_classes;
    const TrainConfig tc = rc.train_config(C);
    const DeployConfig dc = rc.deploy_config(C);
    const RelayConfig relay_cfg = resolved_relay(dc, C, tc.seed);
    const RelayWeights relay = train_deploy_relay(e.train_graph, dc, tc.seed);
    const std::size_t n_prime = synthetic_size(tc, e.train_graph.num_nodes(), C);
    const CoresetEvaluation ev =
        evaluate_coreset(e, parse_coreset_method(method), n_prime, relay, relay_cfg, rc.mode, tc.seed);
    std::cout << "method=" << method << "\nn_prime=" << ev.coreset.selected.size() << "\nmode=" << to_string(rc.mode)
              << "\naccuracy=" << fmt(ev.accuracy) << '\n';
    if (!out.empty()) {
        GraphBundle gb;
        gb.graph = ev.coreset.graph;
        gb.splits.train.resize(gb.graph.num_nodes());
        for (std::size_t k = 0; k < gb.splits.train.size(); ++k) gb.splits.train[k] = static_cast<Index>(k);
        save_bundle(gb, fs::path(out) / "graph");
        std::ostringstream sel;
        for (Index u : ev.coreset.selected) sel << u << '\n';
        write_text(fs::path(out) / "selected.txt", sel.str());
        write_text(fs::path(out) / "accuracy.txt", "accuracy=" + fmt(ev.accuracy) + "\n");
        write_effective_config(rc, fs::path(out) / "effective.cfg");
    }
    return 0;
}

struct BenchRow {
    std::string sweep;
    double value = 0.0;
    CondensedBundle bundle;
};

int cmd_bench(const RunConfig &rc, const std::string &graph, const std::string &sweep, const std::string &values,
              std::size_t reps, const std::string &out) {
    if (sweep != "r" && sweep != "delta") throw DataError("--sweep must be r or delta, got '" + sweep + "'");
    const std::vector<double> points = parse_sweep(values);
    const ExperimentData e = prepare_experiment(load_bundle(graph));
    const std::size_t C = e.train_graph.num_classes;
    const DeployConfig dc = rc.deploy_config(C);

    std::vector<BenchRow> rows;
    if (sweep == "r") {
        for (double r : points) {
            RunConfig p = rc;
            p.train.reduction_rate = r;
            p.train.n_prime = 0;
            rows.push_back({sweep, r, condense_and_deploy(e, p.train_config(C), dc)});
        }
    } else {
        // One training run; each point re-thresholds the same dense M̂.
        const TrainConfig tc = rc.train_config(C);
        TrainResult trace;
        const CondensedBundle base = condense_and_deploy(e, tc, dc, {}, &trace);
        for (double delta : points) {
            CondensedBundle b = base;
            b.mapping = sparsify(trace.a_prime, trace.m_hat, tc.mu, delta).mapping;
            b.meta.delta = delta;
            rows.push_back({sweep, delta, std::move(b)});
        }
    }

    const RelayConfig orig_cfg = rows.front().bundle.relay_config;
    const RelayWeights &orig_relay = rows.front().bundle.relay;
    const InferenceReport o = infer_on_original(e.train_graph, orig_relay, orig_cfg, e.test, rc.mode);
    const double t_orig = median_seconds(reps, [&] {
        return infer_on_original(e.train_graph, orig_relay, orig_cfg, e.test, rc.mode).wall_seconds;
    });

    std::ostringstream csv;
    csv << "sweep,value,n_prime,accuracy,original_accuracy,mapping_sparsity,mapping_nnz,a_prime_nnz,flops,"
           "original_flops,seconds,original_seconds,bytes,original_bytes\n";
    for (const auto &row : rows) {
        const InferenceReport r = infer(row.bundle, e.test, rc.mode);
        const double t = median_seconds(reps, [&] { return infer(row.bundle, e.test, rc.mode).wall_seconds; });
        csv << row.sweep << ',' << fmt(row.value) << ',' << row.bundle.num_synthetic() << ','
            << fmt(score(r, e.test)) << ',' << fmt(score(o, e.test)) << ',' << fmt(sparsity(row.bundle.mapping))
            << ',' << row.bundle.mapping.nnz() << ',' << row.bundle.a_prime.nnz() << ',' << fmt(r.flops) << ','
            << fmt(o.flops) << ',' << fmt(t) << ',' << fmt(t_orig) << ',' << fmt(r.peak_bytes) << ','
            << fmt(o.peak_bytes) << '\n';
    }
    std::cout << csv.str();
    if (!out.empty()) write_text(out, csv.str());
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"gcmap: graph condensation with a node mapping for inductive inference"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto *g = app.add_subcommand("generate-sbm", "write a stochastic block model graph bundle");
    g->add_option("--out", gen.out, "output directory")->required();
    g->add_option("--sizes", gen.sizes, "nodes per class");
    g->add_option("--train", gen.train, "train nodes per class");
    g->add_option("--val", gen.val, "support nodes per class");
    g->add_option("--test", gen.test, "test nodes per class");
    g->add_option("--p-in", gen.p_in, "intra-class edge probability");
    g->add_option("--p-out", gen.p_out, "inter-class edge probability");
    g->add_option("--features", gen.features, "feature dimension");
    g->add_option("--separation", gen.separation, "class mean separation");
    g->add_option("--seed", gen.seed, "generator and split seed");

    std::string mb_graph, mb_split, mb_out;
    auto *mb = app.add_subcommand("make-batch", "export a split of a graph bundle as an inductive batch");
    mb->add_option("--graph", mb_graph, "graph bundle")->required();
    mb->add_option("--split", mb_split, "val or test")->required();
    mb->add_option("--out", mb_out, "output directory")->required();

    std::string graph, out, bundle, batch, method, sweep, values;
    bool baseline_original = false;
    std::size_t reps = 5;

    ConfigFlags cf_condense, cf_infer, cf_cal, cf_base, cf_bench;
    auto *cd = app.add_subcommand("condense", "condense a graph bundle");
    cd->add_option("--graph", graph, "graph bundle with splits")->required();
    cd->add_option("--out", out, "output directory")->required();
    cf_condense.attach(cd);

    auto *inf = app.add_subcommand("infer", "predict an inductive batch through a condensed bundle");
    inf->add_option("--bundle", bundle, "condensed bundle")->required();
    inf->add_option("--batch", batch, "inductive batch directory")->required();
    inf->add_option("--graph", graph, "original graph bundle, for --baseline-original");
    inf->add_flag("--baseline-original", baseline_original, "also run on the original graph");
    inf->add_option("--out", out, "directory for report and predictions");
    cf_infer.attach(inf);

    auto *cal = app.add_subcommand("calibrate", "label and error propagation after inference");
    cal->add_option("--bundle", bundle, "condensed bundle")->required();
    cal->add_option("--batch", batch, "labeled inductive batch directory")->required();
    cal->add_option("--graph", graph, "original graph bundle, for the full-graph comparison");
    cal->add_option("--out", out, "CSV output file");
    cf_cal.attach(cal);

    auto *base = app.add_subcommand("baseline", "coreset baseline at the same budget");
    base->add_option("--graph", graph, "graph bundle with splits")->required();
    base->add_option("--method", method, "random, degree, herding or kcenter")->required();
    base->add_option("--out", out, "output directory for the coreset bundle");
    cf_base.attach(base);

    auto *bench = app.add_subcommand("bench", "sweep the reduction rate or the mapping threshold");
    bench->add_option("--graph", graph, "graph bundle with splits")->required();
    bench->add_option("--sweep", sweep, "r or delta")->required();
    bench->add_option("values", values, "a,b,c or start:stop:step")->required();
    bench->add_option("--reps", reps, "timing repetitions (median)");
    bench->add_option("--out", out, "CSV output file");
    cf_bench.attach(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (g->parsed()) return cmd_generate(gen);
        if (mb->parsed()) return cmd_make_batch(mb_graph, mb_split, mb_out);
        if (cd->parsed()) return cmd_condense(cf_condense.resolve(), graph, out);
        if (inf->parsed()) return cmd_infer(cf_infer.resolve(), bundle, batch, graph, baseline_original, out);
        if (cal->parsed()) return cmd_calibrate(cf_cal.resolve(), bundle, batch, graph, out);
        if (base->parsed()) return cmd_baseline(cf_base.resolve(), graph, method, out);
        if (bench->parsed()) return cmd_bench(cf_bench.resolve(), graph, sweep, values, reps, out);
    } catch (const DivergenceError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const DataError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ShapeError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitUsage;
}

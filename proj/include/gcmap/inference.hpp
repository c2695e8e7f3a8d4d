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

// Condensed-bundle storage and inductive inference on either the synthetic
// graph (through the mapping) or the original graph.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gcmap/dense.hpp"
#include "gcmap/error.hpp"
#include "gcmap/graph.hpp"
#include "gcmap/graph_io.hpp"
#include "gcmap/mapping.hpp"
#include "gcmap/relay.hpp"
#include "gcmap/sparse.hpp"

namespace gcmap {

inline constexpr int kBundleVersion = 1;

/// FNV-1a over the adjacency structure, edge weights and features.
inline std::uint64_t graph_fingerprint(const SparseGraph &g) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void *p, std::size_t n) {
        const auto *b = static_cast<const unsigned char *>(p);
        for (std::size_t k = 0; k < n; ++k) {
            h ^= b[k];
            h *= 1099511628211ULL;
        }
    };
    const std::uint64_t dims[3] = {g.num_nodes(), g.num_features(), g.adj.nnz()};
    mix(dims, sizeof dims);
    mix(g.adj.row_ptr.data(), g.adj.row_ptr.size() * sizeof(g.adj.row_ptr[0]));
    mix(g.adj.col_idx.data(), g.adj.col_idx.size() * sizeof(Index));
    mix(g.adj.vals.data(), g.adj.vals.size() * sizeof(double));
    mix(g.features.data(), g.features.size() * sizeof(double));
    return h;
}

struct BundleMetadata {
    double mu = 0.5;
    double delta = 0.01;
    double lambda = 0.1;
    double beta = 100.0;
    std::uint64_t seed = 0;
    std::uint64_t fingerprint = 0;
    std::string deploy = "original";  ///< graph the deployment relay was trained on

    friend bool operator==(const BundleMetadata &, const BundleMetadata &) = default;
};

/// Synthetic graph, sparse mapping and deployment relay.
struct CondensedBundle {
    CsrMatrix a_prime;
    DenseMatrix x_prime;
    std::vector<int> y_prime;
    std::size_t num_classes = 0;
    CsrMatrix mapping;  ///< N x N'
    RelayConfig relay_config;
    RelayWeights relay;
    BundleMetadata meta;

    std::size_t num_original() const noexcept { return mapping.rows; }
    std::size_t num_synthetic() const noexcept { return a_prime.rows; }

    friend bool operator==(const CondensedBundle &, const CondensedBundle &) = default;
};

inline void validate(const CondensedBundle &b) {
    const std::size_t n_prime = b.a_prime.rows;
    detail::require_data(b.a_prime.cols == n_prime, "bundle: A' not square");
    detail::require_data(b.x_prime.rows() == n_prime, "bundle: X' rows != N'");
    detail::require_data(b.y_prime.size() == n_prime, "bundle: Y' length != N'");
    detail::require_data(b.mapping.cols == n_prime, "bundle: mapping columns != N'");
    for (int y : b.y_prime)
        detail::require_data(y >= 0 && static_cast<std::size_t>(y) < b.num_classes, "bundle: Y' label out of range");
    detail::require_data(!b.relay.w.empty(), "bundle: relay has no weights");
    detail::require_data(b.relay.w.back().cols() == b.num_classes,
                         "bundle: relay head emits " + std::to_string(b.relay.w.back().cols()) + " classes, Y' has " +
                             std::to_string(b.num_classes));
    validate(b.relay_config, b.num_classes);
    detail::check_weights(b.x_prime.cols(), b.relay, b.relay_config);
}

namespace io {

inline std::string join_dims(const std::vector<std::size_t> &v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
    return s;
}

inline std::vector<std::size_t> split_dims(const std::string &s, const std::string &what) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(tok, &pos);
            if (pos != tok.size() || v <= 0) throw DataError("");
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception &) {
            throw DataError(what + ": bad dimension list '" + s + "'");
        }
    }
    return out;
}

inline double parse_real(const std::map<std::string, std::string> &kv, const std::string &key, const std::string &file) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw DataError(file + ": missing key '" + key + "'");
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw DataError("");
        return v;
    } catch (const std::exception &) {
        throw DataError(file + ": key '" + key + "' is not a number");
    }
}

inline std::uint64_t parse_u64(const std::map<std::string, std::string> &kv, const std::string &key,
                               const std::string &file) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw DataError(file + ": missing key '" + key + "'");
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(it->second, &pos, 0);
        if (pos != it->second.size()) throw DataError("");
        return v;
    } catch (const std::exception &) {
        throw DataError(file + ": key '" + key + "' is not an unsigned integer");
    }
}

} // namespace io

inline void save_condensed(const CondensedBundle &b, const std::filesystem::path &dir) {
    validate(b);
    std::filesystem::create_directories(dir);
    {
        auto out = io::open_out(dir / "meta");
        char fp[32];
        std::snprintf(fp, sizeof fp, "0x%016llx", static_cast<unsigned long long>(b.meta.fingerprint));
        out << "version=" << kBundleVersion << '\n'
            << "num_original=" << b.num_original() << '\n'
            << "num_synthetic=" << b.num_synthetic() << '\n'
            << "num_features=" << b.x_prime.cols() << '\n'
            << "num_classes=" << b.num_classes << '\n'
            << "architecture=" << to_string(b.relay_config.architecture) << '\n'
            << "depth=" << b.relay_config.depth << '\n'
            << "head_dims=" << io::join_dims(b.relay_config.head_dims) << '\n'
            << "weight_init_seed=" << b.relay_config.weight_init_seed << '\n'
            << "mu=" << io::format_double(b.meta.mu) << '\n'
            << "delta=" << io::format_double(b.meta.delta) << '\n'
            << "lambda=" << io::format_double(b.meta.lambda) << '\n'
            << "beta=" << io::format_double(b.meta.beta) << '\n'
            << "seed=" << b.meta.seed << '\n'
            << "fingerprint=" << fp << '\n'
            << "deploy=" << b.meta.deploy << '\n';
    }
    io::write_coo(dir / "a_prime.coo", b.a_prime);
    io::write_coo(dir / "mapping.coo", b.mapping);
    {
        auto out = io::open_out(dir / "x_prime.bin", true);
        io::write_matrix_f64(out, b.x_prime);
    }
    {
        auto out = io::open_out(dir / "y_prime.txt");
        for (int y : b.y_prime) out << y << '\n';
    }
    auto out = io::open_out(dir / "relay.bin", true);
    io::write_pod(out, static_cast<std::uint32_t>(b.relay.w.size()));
    for (const auto &w : b.relay.w) io::write_matrix_f64(out, w);
}

inline CondensedBundle load_condensed(const std::filesystem::path &dir) {
    const auto meta = io::read_key_values(dir / "meta");
    const std::string mf = (dir / "meta").string();
    const std::size_t version = io::parse_count(meta, "version", mf);
    detail::require_data(version == static_cast<std::size_t>(kBundleVersion),
                         mf + ": bundle version " + std::to_string(version) + ", expected " +
                             std::to_string(kBundleVersion));
    CondensedBundle b;
    b.num_classes = io::parse_count(meta, "num_classes", mf);
    const std::size_t n = io::parse_count(meta, "num_original", mf);
    const std::size_t n_prime = io::parse_count(meta, "num_synthetic", mf);
    const std::size_t d = io::parse_count(meta, "num_features", mf);
    const auto arch = meta.find("architecture");
    detail::require_data(arch != meta.end(), mf + ": missing key 'architecture'");
    b.relay_config.architecture = parse_architecture(arch->second);
    b.relay_config.depth = io::parse_count(meta, "depth", mf);
    const auto hd = meta.find("head_dims");
    detail::require_data(hd != meta.end(), mf + ": missing key 'head_dims'");
    b.relay_config.head_dims = io::split_dims(hd->second, mf);
    b.relay_config.weight_init_seed = io::parse_u64(meta, "weight_init_seed", mf);
    b.meta.mu = io::parse_real(meta, "mu", mf);
    b.meta.delta = io::parse_real(meta, "delta", mf);
    b.meta.lambda = io::parse_real(meta, "lambda", mf);
    b.meta.beta = io::parse_real(meta, "beta", mf);
    b.meta.seed = io::parse_u64(meta, "seed", mf);
    b.meta.fingerprint = io::parse_u64(meta, "fingerprint", mf);
    if (const auto it = meta.find("deploy"); it != meta.end()) b.meta.deploy = it->second;

    b.a_prime = io::read_coo(dir / "a_prime.coo");
    b.mapping = io::read_coo(dir / "mapping.coo");
    {
        auto in = io::open_in(dir / "x_prime.bin", true);
        b.x_prime = io::read_matrix_f64(in, (dir / "x_prime.bin").string());
    }
    {
        auto in = io::open_in(dir / "y_prime.txt");
        std::string line;
        while (std::getline(in, line)) {
            line = io::trim(line);
            if (line.empty()) continue;
            try {
                b.y_prime.push_back(std::stoi(line));
            } catch (const std::exception &) {
                throw DataError((dir / "y_prime.txt").string() + ": bad label '" + line + "'");
            }
        }
    }
    {
        auto in = io::open_in(dir / "relay.bin", true);
        const std::string rf = (dir / "relay.bin").string();
        const auto count = io::read_pod<std::uint32_t>(in, rf);
        for (std::uint32_t k = 0; k < count; ++k) b.relay.w.push_back(io::read_matrix_f64(in, rf));
    }
    detail::require_data(b.mapping.rows == n && b.a_prime.rows == n_prime && b.x_prime.cols() == d,
                         mf + ": dimensions disagree with the stored matrices");
    validate(b);
    return b;
}

/// Operation count and analytic operand footprint of one inference.
struct CostEstimate {
    double flops = 0.0;
    double bytes = 0.0;
};

/// Propagation L·2·nnz·width plus the dense head, for `rows` assembled rows
/// whose last `outputs` are scored. SGC propagates d-wide features; GCN
/// propagates each layer's output width.
inline CostEstimate flop_count(std::size_t nnz, std::size_t rows, std::size_t d, const RelayConfig &cfg) {
    CostEstimate c;
    const double z = static_cast<double>(nnz);
    const double r = static_cast<double>(rows);
    if (cfg.architecture == Architecture::SGC) {
        c.flops = static_cast<double>(cfg.depth) * 2.0 * z * static_cast<double>(d);
        std::size_t fan_in = d;
        for (std::size_t w : cfg.head_dims) {
            c.flops += 2.0 * r * static_cast<double>(fan_in) * static_cast<double>(w);
            fan_in = w;
        }
    } else {
        std::size_t fan_in = d;
        for (std::size_t w : cfg.head_dims) {
            c.flops += 2.0 * r * static_cast<double>(fan_in) * static_cast<double>(w) + 2.0 * z * static_cast<double>(w);
            fan_in = w;
        }
    }
    c.bytes = z * static_cast<double>(sizeof(Index) + sizeof(double)) + r * static_cast<double>(d * sizeof(double));
    return c;
}

struct InferenceReport {
    std::vector<int> predictions;
    DenseMatrix logits;  ///< n x C
    double assembly_seconds = 0.0;
    double forward_seconds = 0.0;
    double wall_seconds = 0.0;
    double flops = 0.0;
    double peak_bytes = 0.0;
    std::size_t nnz = 0;   ///< assembled adjacency, self-loops included
    std::size_t rows = 0;  ///< assembled size
};

/// Fraction of predictions matching labels; rows labeled -1 are skipped.
inline double accuracy(std::span<const int> predictions, std::span<const int> labels) {
    detail::require_shape(predictions.size() == labels.size(), "accuracy: length mismatch");
    std::size_t hit = 0, total = 0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (labels[k] < 0) continue;
        ++total;
        hit += predictions[k] == labels[k];
    }
    return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

/// key=value lines; accuracy is included when the batch carried labels.
inline std::string to_key_values(const InferenceReport &r, std::span<const int> labels = {}) {
    std::ostringstream out;
    out << "n=" << r.predictions.size() << '\n'
        << "rows=" << r.rows << '\n'
        << "nnz=" << r.nnz << '\n'
        << "flops=" << io::format_double(r.flops) << '\n'
        << "peak_bytes=" << io::format_double(r.peak_bytes) << '\n'
        << "assembly_seconds=" << io::format_double(r.assembly_seconds) << '\n'
        << "forward_seconds=" << io::format_double(r.forward_seconds) << '\n'
        << "wall_seconds=" << io::format_double(r.wall_seconds) << '\n';
    if (!labels.empty() && labels.size() == r.predictions.size())
        out << "accuracy=" << io::format_double(accuracy(r.predictions, labels)) << '\n';
    return out.str();
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline InferenceReport run_assembled(const Assembly<CsrMatrix> &asm_, std::size_t host_rows, const RelayWeights &relay,
                                     const RelayConfig &cfg, Clock::time_point t0) {
    InferenceReport r;
    const CsrMatrix norm = normalize_adjacency(asm_.adj);
    const auto t1 = Clock::now();
    r.assembly_seconds = std::chrono::duration<double>(t1 - t0).count();
    const ForwardResult f = forward(norm, asm_.features, relay, cfg);
    r.logits = slice_rows(f.logits, host_rows, f.logits.rows());
    r.predictions = argmax_rows(r.logits);
    r.forward_seconds = seconds_since(t1);
    r.wall_seconds = seconds_since(t0);
    r.nnz = norm.nnz();
    r.rows = norm.rows;
    const CostEstimate c = flop_count(r.nnz, r.rows, asm_.features.cols(), cfg);
    r.flops = c.flops;
    r.peak_bytes = c.bytes;
    return r;
}

} // namespace detail

/// Inductive nodes attached to the synthetic graph through the mapping.
inline InferenceReport infer(const CondensedBundle &b, const IncrementalBatch &batch, BatchMode mode) {
    const auto t0 = detail::Clock::now();
    validate(batch, b.num_original(), b.x_prime.cols());
    const auto asm_ = assemble_inductive(b.a_prime, b.mapping, b.x_prime, batch, mode);
    return detail::run_assembled(asm_, batch.size() == 0 ? 0 : b.num_synthetic(), b.relay, b.relay_config, t0);
}

/// Baseline: inductive nodes attached to the original graph. With an empty
/// batch the logits cover the original nodes.
inline InferenceReport infer_on_original(const SparseGraph &g, const RelayWeights &relay, const RelayConfig &cfg,
                                         const IncrementalBatch &batch, BatchMode mode) {
    const auto t0 = detail::Clock::now();
    validate(batch, g.num_nodes(), g.num_features());
    const auto asm_ = assemble_original(g, batch, mode);
    return detail::run_assembled(asm_, batch.size() == 0 ? 0 : g.num_nodes(), relay, cfg, t0);
}

/// Relay logits on the synthetic graph alone.
inline DenseMatrix synthetic_logits(const CondensedBundle &b) {
    return forward(normalize_adjacency(b.a_prime), b.x_prime, b.relay, b.relay_config).logits;
}

} // namespace gcmap

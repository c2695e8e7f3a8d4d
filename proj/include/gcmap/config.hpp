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

// Flat key=value run configuration. Every key has a parser and a printer so
// the effective configuration can be written out and read back unchanged.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gcmap/calibration.hpp"
#include "gcmap/evaluate.hpp"
#include "gcmap/graph_io.hpp"
#include "gcmap/mapping.hpp"
#include "gcmap/trainer.hpp"

namespace gcmap {

struct RunConfig {
    TrainConfig train;
    DeployConfig deploy;
    PropagationConfig propagation;
    BatchMode mode = BatchMode::Node;
    std::vector<std::size_t> relay_hidden;   ///< hidden widths of the condensation relay head
    std::vector<std::size_t> deploy_hidden;  ///< hidden widths of the deployed model

    /// Train config with the relay head ending in C outputs.
    TrainConfig train_config(std::size_t num_classes) const {
        TrainConfig t = train;
        t.relay.head_dims = relay_hidden;
        t.relay.head_dims.push_back(num_classes);
        return t;
    }

    DeployConfig deploy_config(std::size_t num_classes) const {
        DeployConfig d = deploy;
        d.relay.head_dims = deploy_hidden;
        d.relay.head_dims.push_back(num_classes);
        return d;
    }
};

namespace config_detail {

inline double to_real(const std::string &key, const std::string &v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos == v.size()) return x;
    } catch (const std::exception &) {
    }
    throw DataError("config: '" + key + "' expects a number, got '" + v + "'");
}

inline std::uint64_t to_u64(const std::string &key, const std::string &v) {
    try {
        std::size_t pos = 0;
        if (!v.empty() && v[0] != '-') {
            const unsigned long long x = std::stoull(v, &pos);
            if (pos == v.size()) return x;
        }
    } catch (const std::exception &) {
    }
    throw DataError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
}

inline bool to_bool(const std::string &key, const std::string &v) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw DataError("config: '" + key + "' expects true or false, got '" + v + "'");
}

inline std::vector<std::size_t> to_dims(const std::string &key, const std::string &v) {
    if (v.empty() || v == "none") return {};
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto x = to_u64(key, io::trim(tok));
        if (x == 0) throw DataError("config: '" + key + "' has a zero width");
        out.push_back(static_cast<std::size_t>(x));
    }
    return out;
}

inline std::string from_dims(const std::vector<std::size_t> &v) { return v.empty() ? "none" : io::join_dims(v); }

inline std::string from_bool(bool b) { return b ? "true" : "false"; }

struct Entry {
    std::function<void(RunConfig &, const std::string &)> set;
    std::function<std::string(const RunConfig &)> get;
};

#define GCMAP_REAL(name, field)                                                                                     \
    {                                                                                                               \
        name, {[](RunConfig &c, const std::string &v) { c.field = to_real(name, v); },                             \
               [](const RunConfig &c) { return io::format_double(c.field); }}                                       \
    }
#define GCMAP_COUNT(name, field)                                                                                    \
    {                                                                                                               \
        name, {[](RunConfig &c, const std::string &v) { c.field = static_cast<decltype(c.field)>(to_u64(name, v)); }, \
               [](const RunConfig &c) { return std::to_string(c.field); }}                                          \
    }
#define GCMAP_ENUM(name, field, parse)                                                                              \
    {                                                                                                               \
        name, {[](RunConfig &c, const std::string &v) { c.field = parse(v); },                                     \
               [](const RunConfig &c) { return std::string(to_string(c.field)); }}                                  \
    }

inline const std::map<std::string, Entry> &registry() {
    static const std::map<std::string, Entry> r = {
        GCMAP_COUNT("outer_epochs", train.outer_epochs),
        GCMAP_COUNT("inner_steps", train.inner_steps),
        GCMAP_REAL("lr_features", train.lr_features),
        GCMAP_REAL("lr_affinity", train.lr_affinity),
        GCMAP_REAL("lr_mapping", train.lr_mapping),
        GCMAP_ENUM("features_optimizer", train.features_optimizer, parse_optimizer),
        GCMAP_ENUM("affinity_optimizer", train.affinity_optimizer, parse_optimizer),
        GCMAP_ENUM("mapping_optimizer", train.mapping_optimizer, parse_optimizer),
        GCMAP_REAL("lambda", train.lambda),
        GCMAP_REAL("beta", train.beta),
        GCMAP_REAL("mu", train.mu),
        GCMAP_REAL("delta", train.delta),
        GCMAP_REAL("mapping_eps", train.mapping_eps),
        GCMAP_COUNT("relay_depth", train.relay.depth),
        GCMAP_ENUM("relay_optimizer", train.relay_optimizer, parse_optimizer),
        GCMAP_REAL("relay_lr", train.relay_lr),
        GCMAP_COUNT("edge_batch", train.edge_batch),
        GCMAP_ENUM("support_mode", train.support_mode, parse_batch_mode),
        GCMAP_ENUM("mapping_init", train.mapping_init, parse_mapping_init),
        GCMAP_REAL("r", train.reduction_rate),
        GCMAP_COUNT("n_prime", train.n_prime),
        GCMAP_COUNT("seed", train.seed),
        GCMAP_REAL("divergence_limit", train.divergence_limit),
        GCMAP_ENUM("deploy_source", deploy.source, parse_deploy_source),
        GCMAP_ENUM("deploy_architecture", deploy.relay.architecture, parse_architecture),
        GCMAP_COUNT("deploy_depth", deploy.relay.depth),
        GCMAP_COUNT("deploy_epochs", deploy.epochs),
        GCMAP_REAL("deploy_lr", deploy.lr),
        GCMAP_REAL("deploy_weight_decay", deploy.weight_decay),
        GCMAP_ENUM("deploy_optimizer", deploy.optimizer, parse_optimizer),
        GCMAP_COUNT("lp_iterations", propagation.iterations),
        GCMAP_REAL("lp_alpha", propagation.alpha),
        GCMAP_REAL("ep_scale", propagation.scale),
        GCMAP_ENUM("calibration", propagation.variant, parse_propagation_variant),
        GCMAP_ENUM("mode", mode, parse_batch_mode),
        {"structure_loss_positives_only",
         {[](RunConfig &c, const std::string &v) { c.train.positives_only = to_bool("structure_loss_positives_only", v); },
          [](const RunConfig &c) { return from_bool(c.train.positives_only); }}},
        {"lp_clamp",
         {[](RunConfig &c, const std::string &v) { c.propagation.clamp = to_bool("lp_clamp", v); },
          [](const RunConfig &c) { return from_bool(c.propagation.clamp); }}},
        {"affinity_hidden",
         {[](RunConfig &c, const std::string &v) { c.train.affinity_hidden = to_dims("affinity_hidden", v); },
          [](const RunConfig &c) { return from_dims(c.train.affinity_hidden); }}},
        {"relay_hidden",
         {[](RunConfig &c, const std::string &v) { c.relay_hidden = to_dims("relay_hidden", v); },
          [](const RunConfig &c) { return from_dims(c.relay_hidden); }}},
        {"deploy_hidden",
         {[](RunConfig &c, const std::string &v) { c.deploy_hidden = to_dims("deploy_hidden", v); },
          [](const RunConfig &c) { return from_dims(c.deploy_hidden); }}},
    };
    return r;
}

#undef GCMAP_REAL
#undef GCMAP_COUNT
#undef GCMAP_ENUM

} // namespace config_detail

/// Sets one key; unknown keys and malformed values throw DataError.
inline void set_option(RunConfig &c, const std::string &key, const std::string &value) {
    const auto &r = config_detail::registry();
    const auto it = r.find(key);
    if (it == r.end()) throw DataError("config: unknown key '" + key + "'");
    it->second.set(c, value);
}

inline std::vector<std::string> option_names() {
    std::vector<std::string> out;
    for (const auto &[k, e] : config_detail::registry()) out.push_back(k);
    return out;
}

inline std::map<std::string, std::string> effective_options(const RunConfig &c) {
    std::map<std::string, std::string> out;
    for (const auto &[k, e] : config_detail::registry()) out[k] = e.get(c);
    return out;
}

inline void apply_file(RunConfig &c, const std::filesystem::path &p) {
    for (const auto &[k, v] : io::read_key_values(p)) set_option(c, k, v);
}

inline void write_effective_config(const RunConfig &c, const std::filesystem::path &p) {
    auto out = io::open_out(p);
    for (const auto &[k, v] : effective_options(c)) out << k << '=' << v << '\n';
}

} // namespace gcmap

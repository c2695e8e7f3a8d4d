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

// Graph-bundle directory layout:
//   meta          key=value lines: num_nodes, num_features, num_classes, directed
//   edges.txt     "u v [w]" per line, 0-based; undirected edges listed once
//   features.bin  little-endian u32 N, u32 d, then N*d float32 row-major
//   labels.txt    one class id per line, -1 = unlabeled
//   splits.txt    "train <id>" / "val <id>" / "test <id>"
//
// Inductive-batch directory layout:
//   meta          num_nodes (n), num_original (N), num_features
//   links.txt     "i u [w]": inductive node i links to original node u
//   features.bin  as above, n rows
//   inner.txt     optional "i j [w]" among inductive nodes, listed once
//   labels.txt    optional, one class id per line

#include <algorithm>
#include <cmath>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gcmap/error.hpp"
#include "gcmap/graph.hpp"

namespace gcmap {

namespace io {

static_assert(std::endian::native == std::endian::little, "bundle I/O assumes a little-endian host");

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::ifstream open_in(const std::filesystem::path &p, bool binary = false) {
    std::ifstream in(p, binary ? std::ios::binary : std::ios::in);
    if (!in) throw DataError("missing file: " + p.string());
    return in;
}

inline std::ofstream open_out(const std::filesystem::path &p, bool binary = false) {
    std::ofstream out(p, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + p.string());
    return out;
}

/// key=value file; blank lines and '#' comments skipped.
inline std::map<std::string, std::string> read_key_values(const std::filesystem::path &p) {
    auto in = open_in(p);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError(p.string() + ": expected key=value, got '" + line + "'");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline std::size_t parse_count(const std::map<std::string, std::string> &kv, const std::string &key,
                               const std::string &file) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw DataError(file + ": missing key '" + key + "'");
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(it->second, &pos);
        if (pos != it->second.size() || v < 0) throw DataError("");
        return static_cast<std::size_t>(v);
    } catch (const std::exception &) {
        throw DataError(file + ": key '" + key + "' is not a non-negative integer");
    }
}

template <typename T> void write_pod(std::ostream &out, const T &v) {
    out.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T> T read_pod(std::istream &in, const std::string &what) {
    T v{};
    in.read(reinterpret_cast<char *>(&v), sizeof(T));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) throw DataError("truncated file: " + what);
    return v;
}

/// u32 rows, u32 cols, then float32 payload.
inline void write_features_f32(const std::filesystem::path &p, const DenseMatrix &x) {
    auto out = open_out(p, true);
    write_pod(out, static_cast<std::uint32_t>(x.rows()));
    write_pod(out, static_cast<std::uint32_t>(x.cols()));
    std::vector<float> buf(x.size());
    std::transform(x.values().begin(), x.values().end(), buf.begin(), [](double v) { return static_cast<float>(v); });
    out.write(reinterpret_cast<const char *>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

inline DenseMatrix read_features_f32(const std::filesystem::path &p) {
    auto in = open_in(p, true);
    const auto rows = read_pod<std::uint32_t>(in, p.string());
    const auto cols = read_pod<std::uint32_t>(in, p.string());
    std::vector<float> buf(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
        throw DataError("truncated file: " + p.string());
    return DenseMatrix(rows, cols, std::vector<double>(buf.begin(), buf.end()));
}

/// u32 rows, u32 cols, then float64 payload.
inline void write_matrix_f64(std::ostream &out, const DenseMatrix &x) {
    write_pod(out, static_cast<std::uint32_t>(x.rows()));
    write_pod(out, static_cast<std::uint32_t>(x.cols()));
    out.write(reinterpret_cast<const char *>(x.data()), static_cast<std::streamsize>(x.size() * sizeof(double)));
}

inline DenseMatrix read_matrix_f64(std::istream &in, const std::string &what) {
    const auto rows = read_pod<std::uint32_t>(in, what);
    const auto cols = read_pod<std::uint32_t>(in, what);
    std::vector<double> buf(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(double))) throw DataError("truncated file: " + what);
    return DenseMatrix(rows, cols, std::move(buf));
}

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

/// "i j v" lines for every stored entry.
inline void write_coo(const std::filesystem::path &p, const CsrMatrix &m) {
    auto out = open_out(p);
    out << "# " << m.rows << ' ' << m.cols << '\n';
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k)
            out << i << ' ' << m.col_idx[k] << ' ' << format_double(m.vals[k]) << '\n';
}

inline CsrMatrix read_coo(const std::filesystem::path &p) {
    auto in = open_in(p);
    std::string line;
    std::size_t rows = 0, cols = 0;
    bool have_header = false;
    std::vector<Triplet> t;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        std::istringstream ls(line[0] == '#' ? line.substr(1) : line);
        if (line[0] == '#') {
            if (!(ls >> rows >> cols)) throw DataError(p.string() + ": malformed header");
            have_header = true;
            continue;
        }
        long long i, j;
        double v;
        if (!(ls >> i >> j >> v) || i < 0 || j < 0) throw DataError(p.string() + ": malformed line '" + line + "'");
        t.push_back({static_cast<Index>(i), static_cast<Index>(j), v});
    }
    if (!have_header) throw DataError(p.string() + ": missing '# rows cols' header");
    for (const auto &e : t)
        if (e.row >= rows || e.col >= cols) throw DataError(p.string() + ": index out of range");
    return CsrMatrix::from_triplets(rows, cols, std::move(t));
}

} // namespace io

/// Reads a graph-bundle directory. Missing edge weights default to 1.0;
/// undirected edges are symmetrized and repeated pairs (either orientation)
/// are kept once.
inline GraphBundle load_bundle(const std::filesystem::path &dir) {
    const auto meta = io::read_key_values(dir / "meta");
    const std::string mf = (dir / "meta").string();
    const std::size_t n = io::parse_count(meta, "num_nodes", mf);
    const std::size_t d = io::parse_count(meta, "num_features", mf);
    const std::size_t c = io::parse_count(meta, "num_classes", mf);
    const std::size_t directed = meta.count("directed") ? io::parse_count(meta, "directed", mf) : 0;
    detail::require_data(directed <= 1, mf + ": directed must be 0 or 1");

    GraphBundle b;
    SparseGraph &g = b.graph;
    g.num_classes = c;
    g.directed = directed == 1;

    {
        auto in = io::open_in(dir / "edges.txt");
        std::set<std::pair<Index, Index>> seen;
        std::vector<Triplet> t;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            line = io::trim(line);
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ls(line);
            long long u, v;
            double w = 1.0;
            if (!(ls >> u >> v)) throw DataError("edges.txt:" + std::to_string(lineno) + ": expected 'u v [w]'");
            if (!(ls >> w)) w = 1.0;
            if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n)
                throw DataError("edges.txt:" + std::to_string(lineno) + ": node index out of range");
            if (!(w > 0.0) || !std::isfinite(w))
                throw DataError("edges.txt:" + std::to_string(lineno) + ": edge weight must be > 0");
            auto a = static_cast<Index>(u), z = static_cast<Index>(v);
            if (!g.directed && a > z) std::swap(a, z);
            if (!seen.emplace(a, z).second) continue;
            t.push_back({a, z, w});
            if (!g.directed && a != z) t.push_back({z, a, w});
        }
        g.adj = CsrMatrix::from_triplets(n, n, std::move(t));
    }

    g.features = io::read_features_f32(dir / "features.bin");
    detail::require_data(g.features.rows() == n && g.features.cols() == d,
                         "features.bin: header " + shape_str(g.features) + " does not match meta " +
                             std::to_string(n) + "x" + std::to_string(d));

    {
        auto in = io::open_in(dir / "labels.txt");
        std::string line;
        while (std::getline(in, line)) {
            line = io::trim(line);
            if (line.empty()) continue;
            long long y;
            try {
                y = std::stoll(line);
            } catch (const std::exception &) {
                throw DataError("labels.txt: not an integer: '" + line + "'");
            }
            if (y < -1 || y >= static_cast<long long>(c)) throw DataError("label out of range: " + line);
            g.labels.push_back(static_cast<int>(y));
        }
        detail::require_data(g.labels.size() == n, "labels.txt: expected " + std::to_string(n) + " lines, got " +
                                                       std::to_string(g.labels.size()));
    }

    {
        auto in = io::open_in(dir / "splits.txt");
        std::string line;
        std::vector<char> used(n, 0);
        while (std::getline(in, line)) {
            line = io::trim(line);
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ls(line);
            std::string which;
            long long id;
            if (!(ls >> which >> id)) throw DataError("splits.txt: malformed line '" + line + "'");
            if (id < 0 || static_cast<std::size_t>(id) >= n) throw DataError("splits.txt: node index out of range");
            if (used[static_cast<std::size_t>(id)]) throw DataError("splits.txt: node in more than one split");
            used[static_cast<std::size_t>(id)] = 1;
            const auto u = static_cast<Index>(id);
            if (which == "train")
                b.splits.train.push_back(u);
            else if (which == "val")
                b.splits.val.push_back(u);
            else if (which == "test")
                b.splits.test.push_back(u);
            else
                throw DataError("splits.txt: unknown split '" + which + "'");
        }
    }
    validate(g);
    return b;
}

inline void save_bundle(const GraphBundle &b, const std::filesystem::path &dir) {
    const SparseGraph &g = b.graph;
    validate(g);
    std::filesystem::create_directories(dir);
    {
        auto out = io::open_out(dir / "meta");
        out << "num_nodes=" << g.num_nodes() << "\nnum_features=" << g.num_features()
            << "\nnum_classes=" << g.num_classes << "\ndirected=" << (g.directed ? 1 : 0) << '\n';
    }
    {
        auto out = io::open_out(dir / "edges.txt");
        for (std::size_t i = 0; i < g.num_nodes(); ++i) {
            for (std::size_t k = g.adj.row_ptr[i]; k < g.adj.row_ptr[i + 1]; ++k) {
                const Index j = g.adj.col_idx[k];
                if (!g.directed && j < i) continue;
                out << i << ' ' << j;
                if (g.adj.vals[k] != 1.0) out << ' ' << io::format_double(g.adj.vals[k]);
                out << '\n';
            }
        }
    }
    io::write_features_f32(dir / "features.bin", g.features);
    {
        auto out = io::open_out(dir / "labels.txt");
        for (std::size_t i = 0; i < g.num_nodes(); ++i) out << (g.has_labels() ? g.labels[i] : -1) << '\n';
    }
    {
        auto out = io::open_out(dir / "splits.txt");
        for (Index u : b.splits.train) out << "train " << u << '\n';
        for (Index u : b.splits.val) out << "val " << u << '\n';
        for (Index u : b.splits.test) out << "test " << u << '\n';
    }
}

namespace io {

/// "i j [w]" lines into triplets; `symmetric` mirrors each off-diagonal pair.
inline std::vector<Triplet> read_pairs(const std::filesystem::path &p, std::size_t rows, std::size_t cols,
                                       bool symmetric) {
    auto in = open_in(p);
    const std::string name = p.filename().string();
    std::vector<Triplet> t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        long long i, j;
        double w = 1.0;
        if (!(ls >> i >> j)) throw DataError(name + ":" + std::to_string(lineno) + ": expected 'i j [w]'");
        if (!(ls >> w)) w = 1.0;
        if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= rows || static_cast<std::size_t>(j) >= cols)
            throw DataError(name + ":" + std::to_string(lineno) + ": index out of range");
        t.push_back({static_cast<Index>(i), static_cast<Index>(j), w});
        if (symmetric && i != j) t.push_back({static_cast<Index>(j), static_cast<Index>(i), w});
    }
    return t;
}

inline void write_pairs(const std::filesystem::path &p, const CsrMatrix &m, bool upper_only) {
    auto out = open_out(p);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
            const Index j = m.col_idx[k];
            if (upper_only && j < i) continue;
            out << i << ' ' << j;
            if (m.vals[k] != 1.0) out << ' ' << format_double(m.vals[k]);
            out << '\n';
        }
}

} // namespace io

inline void save_batch(const IncrementalBatch &b, const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir);
    {
        auto out = io::open_out(dir / "meta");
        out << "num_nodes=" << b.size() << "\nnum_original=" << b.a.cols << "\nnum_features=" << b.x.cols() << '\n';
    }
    io::write_pairs(dir / "links.txt", b.a, false);
    io::write_features_f32(dir / "features.bin", b.x);
    std::filesystem::remove(dir / "inner.txt");
    std::filesystem::remove(dir / "labels.txt");
    if (b.a_tilde) io::write_pairs(dir / "inner.txt", *b.a_tilde, true);
    if (!b.labels.empty()) {
        auto out = io::open_out(dir / "labels.txt");
        for (int y : b.labels) out << y << '\n';
    }
}

inline IncrementalBatch load_batch(const std::filesystem::path &dir) {
    const auto meta = io::read_key_values(dir / "meta");
    const std::string mf = (dir / "meta").string();
    const std::size_t n = io::parse_count(meta, "num_nodes", mf);
    const std::size_t big_n = io::parse_count(meta, "num_original", mf);
    const std::size_t d = io::parse_count(meta, "num_features", mf);
    IncrementalBatch b;
    b.a = CsrMatrix::from_triplets(n, big_n, io::read_pairs(dir / "links.txt", n, big_n, false));
    b.x = io::read_features_f32(dir / "features.bin");
    detail::require_data(b.x.rows() == n && b.x.cols() == d, "features.bin: header " + shape_str(b.x) +
                                                                 " does not match meta " + std::to_string(n) + "x" +
                                                                 std::to_string(d));
    if (std::filesystem::exists(dir / "inner.txt"))
        b.a_tilde = CsrMatrix::from_triplets(n, n, io::read_pairs(dir / "inner.txt", n, n, true));
    if (std::filesystem::exists(dir / "labels.txt")) {
        auto in = io::open_in(dir / "labels.txt");
        std::string line;
        while (std::getline(in, line)) {
            line = io::trim(line);
            if (line.empty()) continue;
            try {
                b.labels.push_back(std::stoi(line));
            } catch (const std::exception &) {
                throw DataError("labels.txt: not an integer: '" + line + "'");
            }
        }
    }
    validate(b, big_n, d);
    return b;
}

/// The graph to condense: the subgraph induced by the training split.
inline SparseGraph training_graph(const GraphBundle &b) { return induced_subgraph(b.graph, b.splits.train); }

} // namespace gcmap

#pragma once

#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "idofew/errors.hpp"

namespace idofew {

// Hard cluster assignment plus the per-sweep (or per-iteration) objective
// trace. Empty clusters are permitted at output and reported.
struct Clustering {
    std::size_t n_clusters = 0;
    std::vector<std::size_t> assignment;
    std::vector<double> objective_trace;
    std::size_t n_sweeps = 0;

    std::size_t n_empty_clusters() const {
        std::vector<bool> used(n_clusters, false);
        for (std::size_t a : assignment) used[a] = true;
        std::size_t empty = 0;
        for (bool u : used)
            if (!u) ++empty;
        return empty;
    }
};

// JSONL dump: {"doc": id, "cluster": int} per line, in document order.
inline void dump_clustering(const Clustering& clustering,
                            const std::vector<std::string>& doc_ids,
                            const std::string& path) {
    if (doc_ids.size() != clustering.assignment.size())
        throw LengthMismatch("clustering dump: ids and assignment differ in length");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write clustering dump: " + path);
    for (std::size_t i = 0; i < doc_ids.size(); ++i) {
        nlohmann::json rec;
        rec["doc"] = doc_ids[i];
        rec["cluster"] = clustering.assignment[i];
        out << rec.dump() << '\n';
    }
}

inline Clustering load_clustering_dump(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open clustering dump: " + path);
    Clustering c;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.contains("cluster"))
            throw MalformedRecord(line_no, "expected {\"doc\":..., \"cluster\":...}");
        c.assignment.push_back(rec["cluster"].get<std::size_t>());
    }
    for (std::size_t a : c.assignment) c.n_clusters = std::max(c.n_clusters, a + 1);
    return c;
}

// One objective value per line.
inline void dump_trace(const std::vector<double>& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trace dump: " + path);
    out.precision(17);
    for (double v : trace) out << v << '\n';
}

}  // namespace idofew

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "idofew/clustering.hpp"
#include "idofew/errors.hpp"
#include "idofew/rng.hpp"
#include "idofew/tfidf.hpp"

namespace idofew {

// Per-cluster conditional term distribution and accumulated document prior.
struct ClusterProfile {
    std::vector<double> centroid_distribution;
    double mass = 0.0;
};

namespace detail {

constexpr std::uint64_t kSibInitStream = 0x51B0001;
constexpr std::uint64_t kSibOrderStream = 0x51B0002;

inline void check_distribution(const std::vector<double>& p, const char* name) {
    double sum = 0.0;
    for (double v : p) {
        if (v < 0.0) throw InvalidDistribution(std::string(name) + ": negative entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw InvalidDistribution(std::string(name) + ": mass " + std::to_string(sum) +
                                  " != 1");
}

inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace detail

// Weighted Jensen-Shannon divergence with mixture weights proportional to
// (w_p, w_q). In [0, ln 2] for equal weights.
inline double js_divergence(const std::vector<double>& p, const std::vector<double>& q,
                            double w_p, double w_q) {
    if (p.size() != q.size()) throw DimensionMismatch("js_divergence: size mismatch");
    if (w_p < 0.0 || w_q < 0.0 || !(w_p + w_q > 0.0))
        throw ValidationError("js_divergence: weights must be nonnegative, sum positive");
    detail::check_distribution(p, "js_divergence p");
    detail::check_distribution(q, "js_divergence q");

    const double pi_p = w_p / (w_p + w_q);
    const double pi_q = w_q / (w_p + w_q);
    double js = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = pi_p * p[i] + pi_q * q[i];
        if (p[i] > 0.0) js += pi_p * p[i] * std::log(p[i] / m);
        if (q[i] > 0.0) js += pi_q * q[i] * std::log(q[i] / m);
    }
    return std::max(js, 0.0);
}

// Cost of merging a document into a cluster: the combined prior times the
// prior-weighted JS divergence. Joining an empty cluster is free.
inline double merge_cost(const std::vector<double>& doc_dist, double doc_prior,
                         const ClusterProfile& profile) {
    if (profile.mass <= 0.0) return 0.0;
    return (doc_prior + profile.mass) *
           js_divergence(doc_dist, profile.centroid_distribution, doc_prior, profile.mass);
}

// Uniform random assignment of n_docs items to k clusters.
inline Clustering init_partition(std::size_t n_docs, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ValidationError("init_partition: k must be >= 2");
    if (n_docs < k) throw TooFewDocuments(n_docs, k);
    Rng rng(derive_seed(seed, detail::kSibInitStream));
    Clustering c;
    c.n_clusters = k;
    c.assignment.resize(n_docs);
    for (auto& a : c.assignment) a = static_cast<std::size_t>(rng.uniform_int(k));
    return c;
}

struct SibOptions {
    std::size_t max_sweeps = 15;
    double tol = 0.02;  // stop when the changed fraction per sweep drops below this
    std::uint64_t seed = 0;
    // Test hooks: explicit initial assignment / per-sweep visit orders.
    std::vector<std::size_t> init;
    std::vector<std::vector<std::size_t>> visit_orders;
#ifndef NDEBUG
    bool check_consistency = true;
#else
    bool check_consistency = false;
#endif
};

namespace detail {

// Incremental sweep state. For each cluster it keeps the weighted sum vector
// s_c = sum of prior * row over members, its mass M_c, and
// slogs_c = sum_i s_ci ln s_ci. The cost of merging (row, prior w) into c is
//
//   w * sum_i p_i ln p_i  -  [slogs'_c - slogs_c]  +  g(M_c + w) - g(M_c)
//
// with g(x) = x ln x, which equals (w + M_c) * JS_{w,M_c}(p, s_c / M_c): both
// sides are the mutual-information loss of the merge. Summed over documents,
// those losses are path-independent, so the trace below is the total merge
// cost of the partition relative to all-singletons.
struct SibState {
    std::size_t k = 0;
    std::vector<std::vector<double>> sums;
    std::vector<double> mass;
    std::vector<double> slogs;

    SibState(std::size_t k_, std::size_t n_cols) : k(k_) {
        sums.assign(k, std::vector<double>(n_cols, 0.0));
        mass.assign(k, 0.0);
        slogs.assign(k, 0.0);
    }

    void add(std::size_t c, const std::vector<SparseMatrix::Entry>& row, double w) {
        auto& s = sums[c];
        for (const auto& [col, p] : row) {
            const double old = s[col];
            const double ns = old + w * p;
            slogs[c] += xlogx(ns) - xlogx(old);
            s[col] = ns;
        }
        mass[c] += w;
    }

    void remove(std::size_t c, const std::vector<SparseMatrix::Entry>& row, double w) {
        auto& s = sums[c];
        for (const auto& [col, p] : row) {
            const double old = s[col];
            double ns = old - w * p;
            if (ns < 0.0) ns = 0.0;
            slogs[c] += xlogx(ns) - xlogx(old);
            s[col] = ns;
        }
        mass[c] -= w;
        if (mass[c] < 0.0) mass[c] = 0.0;
    }

    double add_cost(std::size_t c, const std::vector<SparseMatrix::Entry>& row, double w,
                    double doc_neg_entropy) const {
        if (mass[c] <= 0.0) return 0.0;
        const auto& s = sums[c];
        double delta = 0.0;
        for (const auto& [col, p] : row) delta += xlogx(s[col] + w * p) - xlogx(s[col]);
        return w * doc_neg_entropy - delta + xlogx(mass[c] + w) - xlogx(mass[c]);
    }

    ClusterProfile profile(std::size_t c) const {
        ClusterProfile p;
        p.mass = mass[c];
        p.centroid_distribution.assign(sums[c].size(), 0.0);
        if (p.mass > 0.0)
            for (std::size_t i = 0; i < sums[c].size(); ++i)
                p.centroid_distribution[i] = sums[c][i] / p.mass;
        return p;
    }
};

inline SibState build_state(const SparseMatrix& matrix,
                            const std::vector<std::size_t>& assignment,
                            const std::vector<std::size_t>& active, std::size_t k,
                            double prior) {
    SibState st(k, matrix.n_cols);
    for (std::size_t d : active) st.add(assignment[d], matrix.rows[d], prior);
    return st;
}

inline double partition_objective(const std::vector<double>& doc_neg_entropy,
                                  const std::vector<std::size_t>& active, double prior,
                                  const SibState& st) {
    double obj = 0.0;
    for (std::size_t d : active) obj += prior * doc_neg_entropy[d];
    for (std::size_t c = 0; c < st.k; ++c) obj -= st.slogs[c] - xlogx(st.mass[c]);
    return obj;
}

}  // namespace detail

// Total merge cost of an arbitrary assignment (the quantity sib_cluster's
// objective_trace reports).
inline double sib_objective(const SparseMatrix& matrix,
                            const std::vector<std::size_t>& assignment, std::size_t k) {
    if (assignment.size() != matrix.n_rows)
        throw LengthMismatch("sib_objective: assignment length mismatch");
    std::vector<std::size_t> active;
    std::vector<double> neg_h(matrix.n_rows, 0.0);
    for (std::size_t d = 0; d < matrix.n_rows; ++d) {
        if (matrix.rows[d].empty()) continue;
        active.push_back(d);
        for (const auto& [col, p] : matrix.rows[d]) neg_h[d] += detail::xlogx(p);
    }
    const double prior = matrix.n_rows ? 1.0 / static_cast<double>(matrix.n_rows) : 0.0;
    auto st = detail::build_state(matrix, assignment, active, k, prior);
    return detail::partition_objective(neg_h, active, prior, st);
}

// Sequential IB over row-normalized term distributions. Each sweep visits the
// documents in a seeded random order, pulls each out of its cluster, and
// re-merges it where the merge cost is lowest (ties to the lowest cluster
// index). Documents with empty rows are pinned to cluster 0.
inline Clustering sib_cluster(const SparseMatrix& matrix, std::size_t k,
                              const SibOptions& opts = {}) {
    const std::size_t n = matrix.n_rows;
    if (k < 2) throw ValidationError("sib_cluster: k must be >= 2");
    if (n < k) throw TooFewDocuments(n, k);

    std::vector<std::size_t> active;
    std::vector<double> neg_h(n, 0.0);
    for (std::size_t d = 0; d < n; ++d) {
        const auto& row = matrix.rows[d];
        if (row.empty()) continue;
        double sum = 0.0;
        for (const auto& [col, p] : row) {
            if (p < 0.0) throw InvalidDistribution("sib_cluster: negative row entry");
            sum += p;
            neg_h[d] += detail::xlogx(p);
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw InvalidDistribution("sib_cluster: row " + std::to_string(d) +
                                      " is not a probability vector");
        active.push_back(d);
    }

    std::vector<std::size_t> assignment;
    if (!opts.init.empty()) {
        if (opts.init.size() != n)
            throw LengthMismatch("sib_cluster: init assignment length mismatch");
        for (std::size_t a : opts.init)
            if (a >= k) throw ValidationError("sib_cluster: init cluster out of range");
        assignment = opts.init;
    } else {
        assignment = init_partition(n, k, opts.seed).assignment;
    }
    for (std::size_t d = 0; d < n; ++d)
        if (matrix.rows[d].empty()) assignment[d] = 0;

    const double prior = 1.0 / static_cast<double>(n);
    auto state = detail::build_state(matrix, assignment, active, k, prior);
    Rng order_rng(derive_seed(opts.seed, detail::kSibOrderStream));

    Clustering out;
    out.n_clusters = k;
    for (std::size_t sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        std::vector<std::size_t> visit;
        if (sweep < opts.visit_orders.size()) {
            visit = opts.visit_orders[sweep];
        } else {
            visit = active;
            order_rng.shuffle(visit);
        }

        std::size_t changed = 0;
        for (std::size_t d : visit) {
            if (matrix.rows[d].empty()) continue;
            const auto& row = matrix.rows[d];
            const std::size_t c_old = assignment[d];
            state.remove(c_old, row, prior);
            std::size_t best = 0;
            double best_cost = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double cost = state.add_cost(c, row, prior, neg_h[d]);
                if (cost < best_cost) {
                    best_cost = cost;
                    best = c;
                }
            }
            state.add(best, row, prior);
            if (best != c_old) ++changed;
            assignment[d] = best;
        }

        // Rebuild from scratch at sweep end: bounds incremental drift and, in
        // debug builds, verifies the incremental bookkeeping.
        auto fresh = detail::build_state(matrix, assignment, active, k, prior);
        if (opts.check_consistency) {
            for (std::size_t c = 0; c < k; ++c) {
                if (std::abs(fresh.mass[c] - state.mass[c]) > 1e-9)
                    throw RuntimeError("sib_cluster: profile mass drifted");
                for (std::size_t i = 0; i < matrix.n_cols; ++i)
                    if (std::abs(fresh.sums[c][i] - state.sums[c][i]) > 1e-9)
                        throw RuntimeError("sib_cluster: profile sums drifted");
            }
        }
        state = std::move(fresh);

        out.objective_trace.push_back(
            detail::partition_objective(neg_h, active, prior, state));
        ++out.n_sweeps;

        if (active.empty()) break;
        if (static_cast<double>(changed) / static_cast<double>(active.size()) < opts.tol)
            break;
    }

    for (std::size_t i = 1; i < out.objective_trace.size(); ++i) {
        const double prev = out.objective_trace[i - 1];
        if (out.objective_trace[i] > prev + 1e-9 * std::max(1.0, std::abs(prev)))
            throw RuntimeError("sib_cluster: objective increased between sweeps");
    }

    out.assignment = std::move(assignment);
    return out;
}

inline Clustering sib_cluster(const SparseMatrix& matrix, std::size_t k,
                              std::size_t max_sweeps, double tol, std::uint64_t seed) {
    SibOptions opts;
    opts.max_sweeps = max_sweeps;
    opts.tol = tol;
    opts.seed = seed;
    return sib_cluster(matrix, k, opts);
}

}  // namespace idofew

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "idofew/clustering.hpp"
#include "idofew/errors.hpp"
#include "idofew/rng.hpp"

namespace idofew {

// Row-major dense matrix of doubles.
struct DenseMatrix {
    std::size_t n_rows = 0;
    std::size_t dim = 0;
    std::vector<double> values;

    static DenseMatrix zeros(std::size_t n_rows, std::size_t dim) {
        DenseMatrix m;
        m.n_rows = n_rows;
        m.dim = dim;
        m.values.assign(n_rows * dim, 0.0);
        return m;
    }

    double* row(std::size_t i) { return values.data() + i * dim; }
    const double* row(std::size_t i) const { return values.data() + i * dim; }
};

struct Centroids {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<double> means;  // row-major k x dim

    double* mean(std::size_t c) { return means.data() + c * dim; }
    const double* mean(std::size_t c) const { return means.data() + c * dim; }
};

namespace detail {

constexpr std::uint64_t kKmeansInitStream = 0xC3A0001;

inline double sq_dist(const double* a, const double* b, std::size_t dim) {
    double d = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

}  // namespace detail

// k-means++ seeding: first centroid uniform, then D^2 sampling. When every
// remaining point coincides with a chosen centroid the lowest-index unchosen
// row is taken, so k = n_rows always yields a permutation of the rows.
inline Centroids kmeanspp_init(const DenseMatrix& X, std::size_t k, std::uint64_t seed) {
    if (k == 0) throw ValidationError("kmeanspp_init: k must be positive");
    if (X.n_rows < k) throw TooFewPoints(X.n_rows, k);

    Rng rng(derive_seed(seed, detail::kKmeansInitStream));
    Centroids c;
    c.k = k;
    c.dim = X.dim;
    c.means.reserve(k * X.dim);

    std::vector<bool> chosen(X.n_rows, false);
    const auto pick = [&](std::size_t row) {
        chosen[row] = true;
        c.means.insert(c.means.end(), X.row(row), X.row(row) + X.dim);
    };

    pick(static_cast<std::size_t>(rng.uniform_int(X.n_rows)));
    std::vector<double> d2(X.n_rows, 0.0);
    for (std::size_t j = 0; j < X.n_rows; ++j)
        d2[j] = detail::sq_dist(X.row(j), c.mean(0), X.dim);

    for (std::size_t t = 1; t < k; ++t) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t next = X.n_rows;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t j = 0; j < X.n_rows; ++j) {
                acc += d2[j];
                if (d2[j] > 0.0 && acc > target) {
                    next = j;
                    break;
                }
            }
            if (next == X.n_rows) {  // rounding pushed the target past the end
                for (std::size_t j = X.n_rows; j-- > 0;)
                    if (d2[j] > 0.0) {
                        next = j;
                        break;
                    }
            }
        } else {
            for (std::size_t j = 0; j < X.n_rows; ++j)
                if (!chosen[j]) {
                    next = j;
                    break;
                }
        }
        pick(next);
        for (std::size_t j = 0; j < X.n_rows; ++j)
            d2[j] = std::min(d2[j], detail::sq_dist(X.row(j), c.mean(t), X.dim));
    }
    return c;
}

// Nearest centroid in squared Euclidean distance; ties to the lowest index.
inline std::vector<std::size_t> assign(const DenseMatrix& X, const Centroids& c) {
    if (X.dim != c.dim) throw DimensionMismatch("assign: dimension mismatch");
    std::vector<std::size_t> a(X.n_rows, 0);
    for (std::size_t i = 0; i < X.n_rows; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < c.k; ++j) {
            const double d = detail::sq_dist(X.row(i), c.mean(j), X.dim);
            if (d < best) {
                best = d;
                a[i] = j;
            }
        }
    }
    return a;
}

// Member means. An empty cluster is re-seeded to the point farthest from its
// current (stale) centroid, ties to the lowest row index.
inline Centroids update(const DenseMatrix& X, const std::vector<std::size_t>& assignment,
                        const Centroids& current) {
    if (assignment.size() != X.n_rows)
        throw LengthMismatch("update: assignment length mismatch");
    Centroids out;
    out.k = current.k;
    out.dim = X.dim;
    out.means.assign(current.k * X.dim, 0.0);

    std::vector<std::size_t> counts(current.k, 0);
    for (std::size_t i = 0; i < X.n_rows; ++i) {
        const std::size_t c = assignment[i];
        if (c >= current.k) throw ValidationError("update: cluster index out of range");
        ++counts[c];
        double* m = out.mean(c);
        const double* x = X.row(i);
        for (std::size_t d = 0; d < X.dim; ++d) m[d] += x[d];
    }
    for (std::size_t c = 0; c < current.k; ++c) {
        if (counts[c] > 0) {
            double* m = out.mean(c);
            for (std::size_t d = 0; d < X.dim; ++d) m[d] /= static_cast<double>(counts[c]);
        } else {
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < X.n_rows; ++i) {
                const double d = detail::sq_dist(X.row(i), current.mean(c), X.dim);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            std::copy(X.row(far), X.row(far) + X.dim, out.mean(c));
        }
    }
    return out;
}

inline double sse(const DenseMatrix& X, const Centroids& c,
                  const std::vector<std::size_t>& assignment) {
    if (X.dim != c.dim) throw DimensionMismatch("sse: dimension mismatch");
    if (assignment.size() != X.n_rows) throw LengthMismatch("sse: assignment length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < X.n_rows; ++i)
        total += detail::sq_dist(X.row(i), c.mean(assignment[i]), X.dim);
    return total;
}

struct KMeansOptions {
    std::size_t max_iter = 300;
    double tol = 1e-6;  // max centroid shift (Euclidean) below which to stop
    std::uint64_t seed = 0;
    std::optional<Centroids> init;  // overrides k-means++ seeding
};

// Lloyd iterations from k-means++ seeding. objective_trace records the SSE of
// each (assignment, updated centroids) pair.
inline Clustering kmeans_cluster(const DenseMatrix& X, std::size_t k,
                                 const KMeansOptions& opts = {}) {
    if (k < 2) throw ValidationError("kmeans_cluster: k must be >= 2");
    if (X.n_rows < k) throw TooFewPoints(X.n_rows, k);
    for (double v : X.values)
        if (!std::isfinite(v)) throw ValidationError("kmeans_cluster: non-finite input");

    Centroids cent = opts.init ? *opts.init : kmeanspp_init(X, k, opts.seed);
    if (cent.k != k || cent.dim != X.dim)
        throw DimensionMismatch("kmeans_cluster: init centroids shape mismatch");

    Clustering out;
    out.n_clusters = k;
    for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
        out.assignment = assign(X, cent);
        Centroids next = update(X, out.assignment, cent);
        out.objective_trace.push_back(sse(X, next, out.assignment));
        ++out.n_sweeps;

        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c)
            shift = std::max(shift,
                             std::sqrt(detail::sq_dist(cent.mean(c), next.mean(c), X.dim)));
        cent = std::move(next);
        if (shift < opts.tol) break;
    }

    for (std::size_t i = 1; i < out.objective_trace.size(); ++i) {
        const double prev = out.objective_trace[i - 1];
        if (out.objective_trace[i] > prev + 1e-9 * std::max(1.0, std::abs(prev)))
            throw RuntimeError("kmeans_cluster: SSE increased between iterations");
    }
    return out;
}

inline Clustering kmeans_cluster(const DenseMatrix& X, std::size_t k, std::size_t max_iter,
                                 double tol, std::uint64_t seed) {
    KMeansOptions opts;
    opts.max_iter = max_iter;
    opts.tol = tol;
    opts.seed = seed;
    return kmeans_cluster(X, k, opts);
}

}  // namespace idofew

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "idofew/eval.hpp"
#include "idofew/kmeans.hpp"
#include "idofew/rng.hpp"
#include "oracles.hpp"

using namespace idofew;

namespace {

DenseMatrix points(std::vector<std::vector<double>> rows) {
    DenseMatrix m = DenseMatrix::zeros(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), m.row(i));
    return m;
}

Centroids centroids_of(std::vector<std::vector<double>> rows) {
    Centroids c;
    c.k = rows.size();
    c.dim = rows.empty() ? 0 : rows[0].size();
    for (const auto& r : rows) c.means.insert(c.means.end(), r.begin(), r.end());
    return c;
}

}  // namespace

TEST_CASE("kmeanspp_init with k equal to n picks a permutation of the rows") {
    auto X = points({{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {5.0, 5.0}});
    auto c = kmeanspp_init(X, 4, 3);
    std::set<std::pair<double, double>> got, want;
    for (std::size_t i = 0; i < 4; ++i) {
        got.insert({c.mean(i)[0], c.mean(i)[1]});
        want.insert({X.row(i)[0], X.row(i)[1]});
    }
    REQUIRE(got == want);
}

TEST_CASE("kmeanspp_init on identical rows repeats that row") {
    auto X = points({{2.0, 3.0}, {2.0, 3.0}, {2.0, 3.0}});
    auto c = kmeanspp_init(X, 2, 1);
    for (std::size_t i = 0; i < 2; ++i) {
        REQUIRE(c.mean(i)[0] == 2.0);
        REQUIRE(c.mean(i)[1] == 3.0);
    }
}

TEST_CASE("kmeanspp_init is deterministic per seed") {
    Rng rng(17);
    DenseMatrix X = DenseMatrix::zeros(50, 3);
    for (double& v : X.values) v = rng.gaussian();
    auto a = kmeanspp_init(X, 5, 9);
    auto b = kmeanspp_init(X, 5, 9);
    REQUIRE(a.means == b.means);
    REQUIRE_THROWS_AS(kmeanspp_init(X, 51, 0), TooFewPoints);
}

TEST_CASE("assign picks the nearest centroid") {
    auto X = points({{0.0}, {10.0}});
    auto c = centroids_of({{1.0}, {9.0}});
    REQUIRE(assign(X, c) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("assign breaks ties toward the lowest centroid index") {
    auto X = points({{5.0}});
    auto c = centroids_of({{1.0}, {9.0}});
    REQUIRE(assign(X, c) == std::vector<std::size_t>{0});
}

TEST_CASE("assign with a single centroid sends everything to cluster 0") {
    auto X = points({{1.0}, {2.0}, {-4.0}});
    auto c = centroids_of({{0.5}});
    REQUIRE(assign(X, c) == std::vector<std::size_t>{0, 0, 0});
}

TEST_CASE("update averages cluster members") {
    auto X = points({{0.0, 0.0}, {2.0, 2.0}, {7.0, 7.0}});
    auto current = centroids_of({{0.0, 0.0}, {5.0, 5.0}});
    auto next = update(X, {0, 0, 1}, current);
    REQUIRE(next.mean(0)[0] == 1.0);
    REQUIRE(next.mean(0)[1] == 1.0);
    REQUIRE(next.mean(1)[0] == 7.0);  // singleton cluster equals the point
}

TEST_CASE("update re-seeds an empty cluster to the farthest point") {
    auto X = points({{0.0}, {1.0}, {100.0}});
    auto current = centroids_of({{0.0}, {2.0}});
    auto next = update(X, {0, 0, 0}, current);
    REQUIRE(next.mean(1)[0] == 100.0);
}

TEST_CASE("sse sums squared residuals") {
    auto X = points({{0.0}, {2.0}});
    auto c = centroids_of({{1.0}});
    REQUIRE_THAT(sse(X, c, {0, 0}), Catch::Matchers::WithinAbs(2.0, 1e-12));

    auto exact = centroids_of({{0.0}, {2.0}});
    REQUIRE_THAT(sse(X, exact, {0, 1}), Catch::Matchers::WithinAbs(0.0, 1e-15));

    auto X3 = points({{0.0}, {6.0}});
    auto c3 = centroids_of({{3.0}});
    REQUIRE_THAT(sse(X3, c3, {0, 0}), Catch::Matchers::WithinAbs(9.0 * 2.0, 1e-12));
}

TEST_CASE("four square corners with k=4 fit exactly") {
    auto X = points({{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}, {1.0, 1.0}});
    auto clustering = kmeans_cluster(X, 4, KMeansOptions{.seed = 0});
    REQUIRE_THAT(clustering.objective_trace.back(), Catch::Matchers::WithinAbs(0.0, 1e-15));
    std::set<std::size_t> distinct(clustering.assignment.begin(), clustering.assignment.end());
    REQUIRE(distinct.size() == 4);
}

TEST_CASE("two tight blobs are recovered exactly") {
    Rng rng(23);
    DenseMatrix X = DenseMatrix::zeros(60, 2);
    std::vector<std::size_t> planted(60);
    for (std::size_t i = 0; i < 60; ++i) {
        const bool second = i >= 30;
        planted[i] = second ? 1 : 0;
        X.row(i)[0] = (second ? 20.0 : 0.0) + 0.1 * rng.gaussian();
        X.row(i)[1] = 0.1 * rng.gaussian();
    }
    auto clustering = kmeans_cluster(X, 2, KMeansOptions{.seed = 1});
    const double score =
        nmi(Labeling::make(clustering.assignment, 2), Labeling::make(planted, 2));
    REQUIRE_THAT(score, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("SSE trace is non-increasing and deterministic") {
    Rng rng(29);
    DenseMatrix X = DenseMatrix::zeros(80, 4);
    for (double& v : X.values) v = rng.gaussian();
    auto a = kmeans_cluster(X, 5, KMeansOptions{.seed = 11});
    auto b = kmeans_cluster(X, 5, KMeansOptions{.seed = 11});
    REQUIRE(a.assignment == b.assignment);
    REQUIRE(a.objective_trace == b.objective_trace);
    for (std::size_t i = 1; i < a.objective_trace.size(); ++i)
        REQUIRE(a.objective_trace[i] <= a.objective_trace[i - 1] + 1e-9);
}

TEST_CASE("a stable assignment is a fixed point") {
    Rng rng(37);
    DenseMatrix X = DenseMatrix::zeros(40, 2);
    for (double& v : X.values) v = rng.gaussian();
    auto clustering = kmeans_cluster(X, 3, KMeansOptions{.seed = 2});

    // Reconstruct final centroids and iterate once more by hand.
    Centroids final_c = centroids_of({{0, 0}, {0, 0}, {0, 0}});
    final_c = update(X, clustering.assignment, final_c);
    auto again = assign(X, final_c);
    auto c2 = update(X, again, final_c);
    auto third = assign(X, c2);
    REQUIRE(again == third);
}

TEST_CASE("small instances reach the exhaustive two-partition optimum") {
    Rng rng(41);
    for (int instance = 0; instance < 20; ++instance) {
        const std::size_t n = 4 + rng.uniform_int(5);  // 4..8 points
        DenseMatrix X = DenseMatrix::zeros(n, 2);
        for (double& v : X.values) v = 3.0 * rng.gaussian();
        const double brute = oracle::min_two_partition_sse(X);

        double best = std::numeric_limits<double>::infinity();
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            auto clustering = kmeans_cluster(X, 2, KMeansOptions{.seed = seed});
            for (std::size_t i = 1; i < clustering.objective_trace.size(); ++i)
                REQUIRE(clustering.objective_trace[i] <=
                        clustering.objective_trace[i - 1] + 1e-9);
            best = std::min(best, clustering.objective_trace.back());
        }
        REQUIRE_THAT(best, Catch::Matchers::WithinAbs(brute, 1e-9));
    }
}

TEST_CASE("permuting rows permutes the assignment under a fixed init") {
    Rng rng(43);
    const std::size_t n = 50;
    DenseMatrix X = DenseMatrix::zeros(n, 3);
    for (double& v : X.values) v = rng.gaussian();

    auto init = kmeanspp_init(X, 4, 5);
    KMeansOptions opts;
    opts.init = init;
    auto a = kmeans_cluster(X, 4, opts);

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng perm_rng(6);
    perm_rng.shuffle(perm);
    DenseMatrix Xp = DenseMatrix::zeros(n, 3);
    for (std::size_t j = 0; j < n; ++j)
        std::copy(X.row(perm[j]), X.row(perm[j]) + 3, Xp.row(j));
    auto b = kmeans_cluster(Xp, 4, opts);

    std::vector<std::size_t> b_unpermuted(n);
    for (std::size_t j = 0; j < n; ++j) b_unpermuted[perm[j]] = b.assignment[j];
    const double score =
        nmi(Labeling::make(a.assignment, 4), Labeling::make(b_unpermuted, 4));
    REQUIRE_THAT(score, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("scaling points and centroids scales SSE quadratically") {
    Rng rng(47);
    DenseMatrix X = DenseMatrix::zeros(10, 2);
    for (double& v : X.values) v = rng.gaussian();
    auto c = kmeanspp_init(X, 3, 0);
    auto a = assign(X, c);
    const double base = sse(X, c, a);

    DenseMatrix X3 = X;
    for (double& v : X3.values) v *= 3.0;
    Centroids c3 = c;
    for (double& v : c3.means) v *= 3.0;
    REQUIRE_THAT(sse(X3, c3, a), Catch::Matchers::WithinRel(9.0 * base, 1e-12));
}

TEST_CASE("kmeans_cluster validates its inputs") {
    auto X = points({{0.0}, {1.0}});
    REQUIRE_THROWS_AS(kmeans_cluster(X, 3, KMeansOptions{}), TooFewPoints);
    REQUIRE_THROWS_AS(kmeans_cluster(X, 1, KMeansOptions{}), ValidationError);
    auto bad = points({{std::numeric_limits<double>::quiet_NaN()}, {1.0}});
    REQUIRE_THROWS_AS(kmeans_cluster(bad, 2, KMeansOptions{}), ValidationError);
    REQUIRE_THROWS_AS(assign(points({{1.0, 2.0}}), centroids_of({{1.0}})),
                      DimensionMismatch);
}

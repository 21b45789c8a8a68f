#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "idofew/embed.hpp"
#include "idofew/rng.hpp"
#include "idofew/tfidf.hpp"

using namespace idofew;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& content) {
        static int counter = 0;
        path = "embed_test_tmp_" + std::to_string(counter++) + ".jsonl";
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

TokenizedCorpus toks(std::vector<std::vector<std::string>> docs) {
    TokenizedCorpus out;
    for (std::size_t i = 0; i < docs.size(); ++i)
        out.push_back({"d" + std::to_string(i), std::move(docs[i])});
    return out;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

double sparse_cosine(const std::vector<SparseMatrix::Entry>& a,
                     const std::vector<SparseMatrix::Entry>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].first == b[j].first) dot += a[i++].second * b[j++].second;
        else if (a[i].first < b[j].first) ++i;
        else ++j;
    }
    for (const auto& [c, v] : a) na += v * v;
    for (const auto& [c, v] : b) nb += v * v;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

}  // namespace

TEST_CASE("truncate keeps the first max_len tokens") {
    std::vector<std::string> long_doc(300, "w");
    REQUIRE(truncate(long_doc).size() == 256);
    std::vector<std::string> short_doc(10, "w");
    REQUIRE(truncate(short_doc) == short_doc);
    REQUIRE(truncate({}).empty());
}

TEST_CASE("file provider returns stored vectors by id") {
    TempFile f(R"({"id":"d1","vector":[0.1,0.2]})"
               "\n");
    auto provider = file_provider(f.path, 2);
    REQUIRE(provider->dim() == 2);
    auto v = provider->embed({"d1", {}});
    REQUIRE(v == std::vector<double>{0.1, 0.2});
    REQUIRE_THROWS_AS(provider->embed({"absent", {}}), MissingEmbedding);
}

TEST_CASE("file provider rejects wrong-length vectors at load") {
    TempFile f(R"({"id":"d1","vector":[0.1,0.2,0.3]})"
               "\n");
    REQUIRE_THROWS_AS(file_provider(f.path, 2), DimensionMismatch);
}

TEST_CASE("file provider rejects malformed lines") {
    TempFile f("{\"id\":\"d1\"}\n");
    REQUIRE_THROWS_AS(file_provider(f.path, 2), MalformedRecord);
}

TEST_CASE("projection provider is deterministic and maps empty docs to zero") {
    auto corpus = toks({{"alpha", "beta"}, {"beta", "gamma"}, {"delta"}});
    auto vocab = build_vocabulary(corpus, 100);
    auto p1 = projection_provider(vocab, 16, 42);
    auto p2 = projection_provider(vocab, 16, 42);

    TokenizedDocument doc{"x", {"alpha", "gamma"}};
    REQUIRE(p1->embed(doc) == p2->embed(doc));

    auto zero = p1->embed({"y", {}});
    for (double v : zero) REQUIRE(v == 0.0);

    auto oov = p1->embed({"z", {"unseen"}});
    for (double v : oov) REQUIRE(v == 0.0);
}

TEST_CASE("projected vectors are unit length when nonzero") {
    auto corpus = toks({{"alpha", "beta"}, {"beta", "gamma"}});
    auto vocab = build_vocabulary(corpus, 100);
    auto p = projection_provider(vocab, 64, 7);
    auto v = p->embed({"x", {"alpha"}});
    double norm = 0.0;
    for (double x : v) norm += x * x;
    REQUIRE_THAT(std::sqrt(norm), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("disjoint-vocabulary documents stay nearly orthogonal at dim 384") {
    std::vector<std::vector<std::string>> docs;
    for (int i = 0; i < 6; ++i) docs.push_back({"a" + std::to_string(i)});
    for (int i = 0; i < 6; ++i) docs.push_back({"b" + std::to_string(i)});
    auto corpus = toks(std::move(docs));
    auto vocab = build_vocabulary(corpus, 100);

    TokenizedDocument da{"x", {"a0", "a1", "a2", "a3"}};
    TokenizedDocument db{"y", {"b0", "b1", "b2", "b3"}};
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto p = projection_provider(vocab, 384, seed);
        if (std::abs(cosine(p->embed(da), p->embed(db))) < 0.2) ++ok;
    }
    REQUIRE(ok >= 99);
}

TEST_CASE("projection approximately preserves TF-IDF cosine geometry") {
    Rng rng(55);
    std::vector<std::vector<std::string>> docs;
    for (int i = 0; i < 20; ++i) {
        std::vector<std::string> d;
        const std::size_t len = 5 + rng.uniform_int(10);
        for (std::size_t t = 0; t < len; ++t)
            d.push_back("w" + std::to_string(rng.uniform_int(30)));
        docs.push_back(std::move(d));
    }
    auto corpus = toks(std::move(docs));
    auto vocab = build_vocabulary(corpus, 100);
    auto matrix = vectorize(corpus, vocab);

    std::size_t total = 0, close = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto p = projection_provider(vocab, 384, seed);
        std::vector<std::vector<double>> embedded;
        for (const auto& doc : corpus) embedded.push_back(p->embed(doc));
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            for (std::size_t j = i + 1; j < corpus.size(); ++j) {
                const double ct = sparse_cosine(matrix.rows[i], matrix.rows[j]);
                const double ce = cosine(embedded[i], embedded[j]);
                ++total;
                if (std::abs(ce - ct) < 0.15) ++close;
            }
        }
    }
    REQUIRE(static_cast<double>(close) >= 0.95 * static_cast<double>(total));
}

TEST_CASE("embed_documents stacks rows and applies truncation") {
    auto corpus = toks({{"alpha"}, {"beta"}});
    auto vocab = build_vocabulary(corpus, 100);
    auto p = projection_provider(vocab, 8, 3);

    auto m = embed_documents(corpus, *p);
    REQUIRE(m.n_rows == 2);
    REQUIRE(m.dim == 8);

    // A document truncated to length 2 embeds like its two-token prefix.
    TokenizedCorpus long_doc = {{"x", {"alpha", "beta", "alpha", "beta"}}};
    auto full = embed_documents(long_doc, *p, 2);
    auto prefix = p->embed({"x", {"alpha", "beta"}});
    for (std::size_t j = 0; j < 8; ++j) REQUIRE(full.row(0)[j] == prefix[j]);
}

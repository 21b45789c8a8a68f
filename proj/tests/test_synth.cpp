#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "idofew/eval.hpp"
#include "idofew/sib.hpp"
#include "idofew/stopwords.hpp"
#include "idofew/synth.hpp"
#include "idofew/tfidf.hpp"

using namespace idofew;

namespace {

double sib_nmi_vs_gold(const Corpus& corpus, std::size_t k, std::uint64_t seed) {
    auto tokens = preprocess_corpus(corpus, builtin_stopwords());
    auto vocab = build_vocabulary(tokens, 10000);
    auto matrix = row_normalize(vectorize(tokens, vocab));
    SibOptions opts;
    opts.seed = seed;
    auto clustering = sib_cluster(matrix, k, opts);

    std::vector<std::size_t> gold;
    for (const auto& d : corpus.documents) {
        auto it = std::lower_bound(corpus.label_set.begin(), corpus.label_set.end(),
                                   *d.gold_label);
        gold.push_back(static_cast<std::size_t>(it - corpus.label_set.begin()));
    }
    return nmi(Labeling::make(clustering.assignment, k),
               Labeling::make(gold, corpus.label_set.size()));
}

}  // namespace

TEST_CASE("generate is deterministic and exactly balanced") {
    PlantedSpec spec;
    spec.n_classes = 4;
    spec.docs_per_class = 500;
    spec.seed = 3;
    Corpus a = generate(spec);
    Corpus b = generate(spec);
    REQUIRE(a.size() == 2000);
    REQUIRE(a.label_set.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a.documents[i].id == b.documents[i].id);
        REQUIRE(a.documents[i].text == b.documents[i].text);
    }
    std::map<std::string, int> counts;
    for (const auto& d : a.documents) ++counts[*d.gold_label];
    for (const auto& [label, count] : counts) REQUIRE(count == 500);
}

TEST_CASE("zero noise yields disjoint class vocabularies") {
    PlantedSpec spec;
    spec.n_classes = 3;
    spec.docs_per_class = 10;
    spec.noise = 0.0;
    spec.seed = 1;
    Corpus c = generate(spec);
    auto tokens = preprocess_corpus(c, builtin_stopwords());
    auto vocab = build_vocabulary(tokens, 10000);
    auto matrix = vectorize(tokens, vocab);

    for (std::size_t i = 0; i < c.size(); ++i) {
        for (std::size_t j = i + 1; j < c.size(); ++j) {
            if (*c.documents[i].gold_label == *c.documents[j].gold_label) continue;
            double dot = 0.0;
            std::size_t a = 0, b = 0;
            const auto& ra = matrix.rows[i];
            const auto& rb = matrix.rows[j];
            while (a < ra.size() && b < rb.size()) {
                if (ra[a].first == rb[b].first) dot += ra[a++].second * rb[b++].second;
                else if (ra[a].first < rb[b].first) ++a;
                else ++b;
            }
            REQUIRE(dot == 0.0);
        }
    }
}

TEST_CASE("generator validates its spec") {
    PlantedSpec bad;
    bad.noise = 1.0;
    REQUIRE_THROWS_AS(generate(bad), ValidationError);
    PlantedSpec no_shared;
    no_shared.noise = 0.5;
    no_shared.shared_vocab = 0;
    REQUIRE_THROWS_AS(generate(no_shared), ValidationError);
}

TEST_CASE("SIB recoverability degrades monotonically with noise") {
    const std::vector<double> noises = {0.0, 0.3, 0.6, 0.9};
    std::vector<double> means, sds;
    for (double noise : noises) {
        std::vector<double> scores;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            PlantedSpec spec;
            spec.n_classes = 2;
            spec.docs_per_class = 100;
            spec.vocab_per_class = 20;
            spec.shared_vocab = 200;
            spec.doc_length = 20;
            spec.noise = noise;
            spec.seed = seed;
            scores.push_back(sib_nmi_vs_gold(generate(spec), 2, seed));
        }
        double mean = 0.0;
        for (double s : scores) mean += s;
        mean /= static_cast<double>(scores.size());
        double var = 0.0;
        for (double s : scores) var += (s - mean) * (s - mean);
        means.push_back(mean);
        sds.push_back(std::sqrt(var / static_cast<double>(scores.size())));
    }
    for (std::size_t i = 1; i < means.size(); ++i)
        REQUIRE(means[i] <= means[i - 1] + sds[i - 1] + sds[i]);
    // High noise ruins recovery outright.
    REQUIRE(means.back() < 0.5);
}

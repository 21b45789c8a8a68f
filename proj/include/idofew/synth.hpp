#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "idofew/corpus.hpp"
#include "idofew/errors.hpp"
#include "idofew/rng.hpp"

namespace idofew {

// Planted-cluster corpus: each document draws tokens from its class's private
// vocabulary with probability 1 - noise, otherwise from the shared vocabulary.
struct PlantedSpec {
    std::size_t n_classes = 4;
    std::size_t docs_per_class = 500;
    std::size_t vocab_per_class = 50;
    std::size_t shared_vocab = 30;
    std::size_t doc_length = 30;
    double noise = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_classes == 0 || docs_per_class == 0 || vocab_per_class == 0 ||
            doc_length == 0)
            throw ValidationError("planted spec: counts must be positive");
        if (noise > 0.0 && shared_vocab == 0)
            throw ValidationError("planted spec: noise > 0 needs shared vocabulary");
        if (!(noise >= 0.0 && noise < 1.0))
            throw ValidationError("planted spec: noise must be in [0, 1)");
    }
};

inline Corpus generate(const PlantedSpec& spec) {
    spec.validate();
    Rng rng(derive_seed(spec.seed, 0x5A97ULL));
    std::vector<Document> docs;
    docs.reserve(spec.n_classes * spec.docs_per_class);
    std::size_t doc_no = 0;
    for (std::size_t cls = 0; cls < spec.n_classes; ++cls) {
        for (std::size_t i = 0; i < spec.docs_per_class; ++i, ++doc_no) {
            std::string text;
            for (std::size_t t = 0; t < spec.doc_length; ++t) {
                if (t > 0) text.push_back(' ');
                if (spec.noise > 0.0 && rng.uniform() < spec.noise) {
                    text += "sw" + std::to_string(rng.uniform_int(spec.shared_vocab));
                } else {
                    text += "c" + std::to_string(cls) + "w" +
                            std::to_string(rng.uniform_int(spec.vocab_per_class));
                }
            }
            Document d;
            d.id = "doc" + std::to_string(doc_no);
            d.text = std::move(text);
            d.gold_label = "class" + std::to_string(cls);
            docs.push_back(std::move(d));
        }
    }
    return Corpus::from_documents(std::move(docs));
}

}  // namespace idofew

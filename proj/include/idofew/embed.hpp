#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "idofew/corpus.hpp"
#include "idofew/errors.hpp"
#include "idofew/kmeans.hpp"
#include "idofew/rng.hpp"
#include "idofew/tfidf.hpp"

namespace idofew {

// First min(|tokens|, max_len) tokens.
inline std::vector<std::string> truncate(std::vector<std::string> tokens,
                                         std::size_t max_len = 256) {
    if (tokens.size() > max_len) tokens.resize(max_len);
    return tokens;
}

// Deterministic text -> fixed-size vector map. Implementations must return
// bitwise-identical vectors for identical input.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dim() const = 0;
    virtual std::vector<double> embed(const TokenizedDocument& doc) const = 0;
};

// Looks up vectors precomputed by an external sentence encoder, keyed by
// document id. File format: JSONL {"id": string, "vector": [dim reals]}.
class FileEmbeddingProvider : public EmbeddingProvider {
public:
    FileEmbeddingProvider(const std::string& path, std::size_t dim) : dim_(dim) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open embedding file: " + path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
            if (rec.is_discarded() || !rec.contains("id") || !rec.contains("vector"))
                throw MalformedRecord(line_no, "expected {\"id\":..., \"vector\":[...]}");
            std::vector<double> v = rec["vector"].get<std::vector<double>>();
            if (v.size() != dim_)
                throw DimensionMismatch("embedding for \"" + rec["id"].get<std::string>() +
                                        "\" has length " + std::to_string(v.size()) +
                                        ", expected " + std::to_string(dim_));
            for (double x : v)
                if (!std::isfinite(x))
                    throw ValidationError("non-finite embedding entry at line " +
                                          std::to_string(line_no));
            vectors_[rec["id"].get<std::string>()] = std::move(v);
        }
    }

    std::size_t dim() const override { return dim_; }

    std::vector<double> embed(const TokenizedDocument& doc) const override {
        auto it = vectors_.find(doc.id);
        if (it == vectors_.end()) throw MissingEmbedding(doc.id);
        return it->second;
    }

    bool contains(const std::string& id) const { return vectors_.count(id) > 0; }
    std::size_t size() const { return vectors_.size(); }

private:
    std::size_t dim_;
    std::unordered_map<std::string, std::vector<double>> vectors_;
};

// Random-projection fallback: the document's TF-IDF row times a seeded
// Gaussian matrix, L2-normalized. Zero rows map to the zero vector.
class ProjectionEmbeddingProvider : public EmbeddingProvider {
public:
    ProjectionEmbeddingProvider(Vocabulary vocab, std::size_t dim, std::uint64_t seed)
        : vocab_(std::move(vocab)), dim_(dim) {
        if (dim_ < 2) throw ValidationError("projection provider: dim must be >= 2");
        vocab_.rebuild_index();
        Rng rng(derive_seed(seed, 0xE3BED01ULL));
        projection_.resize(vocab_.size() * dim_);
        for (double& v : projection_) v = rng.gaussian();
    }

    std::size_t dim() const override { return dim_; }

    std::vector<double> embed(const TokenizedDocument& doc) const override {
        std::vector<double> out(dim_, 0.0);
        auto row = vectorize_document(doc, vocab_);
        for (const auto& [col, w] : row) {
            const double* g = projection_.data() + col * dim_;
            for (std::size_t j = 0; j < dim_; ++j) out[j] += w * g[j];
        }
        double norm = 0.0;
        for (double v : out) norm += v * v;
        if (norm > 0.0) {
            norm = std::sqrt(norm);
            for (double& v : out) v /= norm;
        }
        return out;
    }

    const Vocabulary& vocabulary() const { return vocab_; }

private:
    Vocabulary vocab_;
    std::size_t dim_;
    std::vector<double> projection_;
};

inline std::shared_ptr<EmbeddingProvider> file_provider(const std::string& path,
                                                        std::size_t dim) {
    return std::make_shared<FileEmbeddingProvider>(path, dim);
}

inline std::shared_ptr<EmbeddingProvider> projection_provider(Vocabulary vocab,
                                                              std::size_t dim,
                                                              std::uint64_t seed) {
    return std::make_shared<ProjectionEmbeddingProvider>(std::move(vocab), dim, seed);
}

// Truncates each document and stacks the embeddings into a matrix, one row
// per document in input order.
inline DenseMatrix embed_documents(const TokenizedCorpus& docs,
                                   const EmbeddingProvider& provider,
                                   std::size_t max_len = 256) {
    DenseMatrix m = DenseMatrix::zeros(docs.size(), provider.dim());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        TokenizedDocument t{docs[i].id, truncate(docs[i].tokens, max_len)};
        auto v = provider.embed(t);
        if (v.size() != provider.dim())
            throw DimensionMismatch("provider returned wrong embedding length");
        std::copy(v.begin(), v.end(), m.row(i));
    }
    return m;
}

}  // namespace idofew

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "idofew/corpus.hpp"
#include "idofew/errors.hpp"

namespace idofew {

// Retained terms ordered by (total corpus frequency desc, term asc), with
// per-term document frequency and the corpus document count.
struct Vocabulary {
    std::vector<std::string> terms;
    std::vector<std::size_t> df;
    std::size_t n_docs = 0;

    std::size_t size() const { return terms.size(); }

    // -1 when the term was not retained.
    long long term_id(const std::string& term) const {
        auto it = index_.find(term);
        return it == index_.end() ? -1 : static_cast<long long>(it->second);
    }

    void rebuild_index() {
        index_.clear();
        index_.reserve(terms.size());
        for (std::size_t i = 0; i < terms.size(); ++i) index_[terms[i]] = i;
    }

private:
    std::unordered_map<std::string, std::size_t> index_;
};

// Sparse row-major matrix; per-row (column, weight) pairs with strictly
// increasing columns.
struct SparseMatrix {
    using Entry = std::pair<std::size_t, double>;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<std::vector<Entry>> rows;
};

inline Vocabulary build_vocabulary(const TokenizedCorpus& corpus, std::size_t max_terms) {
    if (corpus.empty()) throw EmptyCorpus();

    std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> stats;  // (freq, df)
    std::unordered_map<std::string, std::size_t> doc_counts;
    for (const auto& doc : corpus) {
        doc_counts.clear();
        for (const auto& tok : doc.tokens) ++doc_counts[tok];
        for (const auto& [term, tf] : doc_counts) {
            auto& st = stats[term];
            st.first += tf;
            st.second += 1;
        }
    }

    std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> ranked(
        stats.begin(), stats.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second.first != b.second.first) return a.second.first > b.second.first;
        return a.first < b.first;
    });
    if (ranked.size() > max_terms) ranked.resize(max_terms);

    Vocabulary vocab;
    vocab.n_docs = corpus.size();
    vocab.terms.reserve(ranked.size());
    vocab.df.reserve(ranked.size());
    for (auto& [term, st] : ranked) {
        vocab.terms.push_back(term);
        vocab.df.push_back(st.second);
    }
    vocab.rebuild_index();
    return vocab;
}

// 1 + ln(1 + tf); applied only to nonzero counts (absent terms get weight 0).
inline double log_tf(std::size_t tf) { return 1.0 + std::log(1.0 + static_cast<double>(tf)); }

// ln(N / df_r).
inline double idf(const Vocabulary& vocab, std::size_t term_id) {
    return std::log(static_cast<double>(vocab.n_docs) /
                    static_cast<double>(vocab.df[term_id]));
}

inline std::vector<SparseMatrix::Entry> vectorize_document(const TokenizedDocument& doc,
                                                           const Vocabulary& vocab) {
    std::unordered_map<std::size_t, std::size_t> counts;
    for (const auto& tok : doc.tokens) {
        long long id = vocab.term_id(tok);
        if (id >= 0) ++counts[static_cast<std::size_t>(id)];
    }
    std::vector<SparseMatrix::Entry> row;
    row.reserve(counts.size());
    for (const auto& [col, tf] : counts) {
        double w = log_tf(tf) * idf(vocab, col);
        if (w != 0.0) row.emplace_back(col, w);
    }
    std::sort(row.begin(), row.end());
    return row;
}

inline SparseMatrix vectorize(const TokenizedCorpus& corpus, const Vocabulary& vocab) {
    SparseMatrix m;
    m.n_rows = corpus.size();
    m.n_cols = vocab.size();
    m.rows.reserve(corpus.size());
    for (const auto& doc : corpus) m.rows.push_back(vectorize_document(doc, vocab));
    return m;
}

// L1 normalization per row; empty rows stay empty.
inline SparseMatrix row_normalize(const SparseMatrix& m) {
    SparseMatrix out = m;
    for (auto& row : out.rows) {
        double sum = 0.0;
        for (const auto& [col, w] : row) sum += w;
        if (sum > 0.0)
            for (auto& [col, w] : row) w /= sum;
    }
    return out;
}

inline void dump_matrix(const SparseMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write matrix dump: " + path);
    for (std::size_t i = 0; i < m.n_rows; ++i) {
        nlohmann::json rec;
        rec["row"] = i;
        auto entries = nlohmann::json::array();
        for (const auto& [col, w] : m.rows[i])
            entries.push_back(nlohmann::json::array({col, w}));
        rec["entries"] = std::move(entries);
        out << rec.dump() << '\n';
    }
}

}  // namespace idofew

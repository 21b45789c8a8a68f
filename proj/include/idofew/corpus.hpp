#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "idofew/errors.hpp"
#include "idofew/rng.hpp"

namespace idofew {

struct Document {
    std::string id;
    std::string text;
    std::optional<std::string> gold_label;
};

// Documents in a stable order plus the sorted set of distinct gold labels.
struct Corpus {
    std::vector<Document> documents;
    std::vector<std::string> label_set;

    std::size_t size() const { return documents.size(); }

    static Corpus from_documents(std::vector<Document> docs) {
        std::unordered_set<std::string> seen;
        std::set<std::string> labels;
        for (const auto& d : docs) {
            if (d.id.empty()) throw ValidationError("document with empty id");
            if (!seen.insert(d.id).second) throw DuplicateId(d.id);
            if (d.gold_label) labels.insert(*d.gold_label);
        }
        Corpus c;
        c.documents = std::move(docs);
        c.label_set.assign(labels.begin(), labels.end());
        return c;
    }
};

struct TokenizedDocument {
    std::string id;
    std::vector<std::string> tokens;
};

using TokenizedCorpus = std::vector<TokenizedDocument>;

struct LoadOptions {
    bool allow_empty = false;  // reject documents with empty text unless set
};

// JSONL loader: one record per line with fields "id", "text" and optional
// "label" (string or null). Blank lines are skipped.
inline Corpus load_corpus(const std::string& path, const LoadOptions& opts = {}) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file: " + path);

    std::vector<Document> docs;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object())
            throw MalformedRecord(line_no, "not a JSON object");
        if (!rec.contains("id") || !rec["id"].is_string())
            throw MalformedRecord(line_no, "missing or non-string \"id\"");
        if (!rec.contains("text") || !rec["text"].is_string())
            throw MalformedRecord(line_no, "missing or non-string \"text\"");

        Document d;
        d.id = rec["id"].get<std::string>();
        d.text = rec["text"].get<std::string>();
        if (d.id.empty()) throw MalformedRecord(line_no, "empty \"id\"");
        if (d.text.empty() && !opts.allow_empty)
            throw MalformedRecord(line_no, "empty \"text\"");
        if (rec.contains("label") && !rec["label"].is_null()) {
            if (!rec["label"].is_string())
                throw MalformedRecord(line_no, "\"label\" must be string or null");
            d.gold_label = rec["label"].get<std::string>();
        }
        if (!seen.insert(d.id).second) throw DuplicateId(d.id);
        docs.push_back(std::move(d));
    }
    return Corpus::from_documents(std::move(docs));
}

inline void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write corpus file: " + path);
    for (const auto& d : corpus.documents) {
        nlohmann::json rec;
        rec["id"] = d.id;
        rec["text"] = d.text;
        rec["label"] = d.gold_label ? nlohmann::json(*d.gold_label) : nlohmann::json(nullptr);
        out << rec.dump() << '\n';
    }
}

namespace detail {

// Unicode codepoints treated as punctuation in addition to ASCII. ASCII
// handling below already drops every non-alphanumeric character (the corpora
// this targets use $, !, ... as separators), so only the common non-ASCII
// punctuation blocks are listed.
inline bool is_unicode_punct(std::uint32_t cp) {
    return (cp >= 0x2000 && cp <= 0x206F)     // general punctuation
           || (cp >= 0x2E00 && cp <= 0x2E7F)  // supplemental punctuation
           || (cp >= 0x3000 && cp <= 0x303F)  // CJK symbols and punctuation
           || (cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
           (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65) ||
           cp == 0x00A1 || cp == 0x00A7 || cp == 0x00AB || cp == 0x00B6 ||
           cp == 0x00B7 || cp == 0x00BB || cp == 0x00BF;
}

// Lowercases ASCII and removes punctuation. Non-ASCII codepoints pass through
// unless they fall in a punctuation block.
inline std::string clean_token(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    std::size_t i = 0;
    while (i < raw.size()) {
        unsigned char c = static_cast<unsigned char>(raw[i]);
        if (c < 0x80) {
            if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
            if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))
                out.push_back(static_cast<char>(c));
            ++i;
            continue;
        }
        // Decode one UTF-8 sequence; malformed bytes are kept verbatim.
        std::size_t len = (c >= 0xF0) ? 4 : (c >= 0xE0) ? 3 : (c >= 0xC0) ? 2 : 1;
        if (len == 1 || i + len > raw.size()) {
            out.push_back(raw[i]);
            ++i;
            continue;
        }
        std::uint32_t cp = c & (0xFFu >> (len + 1));
        bool valid = true;
        for (std::size_t j = 1; j < len; ++j) {
            unsigned char cc = static_cast<unsigned char>(raw[i + j]);
            if ((cc & 0xC0) != 0x80) {
                valid = false;
                break;
            }
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (!valid) {
            out.push_back(raw[i]);
            ++i;
            continue;
        }
        if (!is_unicode_punct(cp)) out.append(raw, i, len);
        i += len;
    }
    return out;
}

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace detail

// Lowercase, whitespace-split, strip punctuation, drop stop words and empty
// tokens. An empty token list is a valid result.
inline TokenizedDocument preprocess(const Document& doc,
                                    const std::unordered_set<std::string>& stopwords) {
    TokenizedDocument out;
    out.id = doc.id;
    std::size_t i = 0;
    const std::string& text = doc.text;
    while (i < text.size()) {
        while (i < text.size() && detail::is_space(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !detail::is_space(text[i])) ++i;
        if (i == start) continue;
        std::string tok = detail::clean_token(text.substr(start, i - start));
        if (!tok.empty() && !stopwords.count(tok)) out.tokens.push_back(std::move(tok));
    }
    return out;
}

inline TokenizedCorpus preprocess_corpus(const Corpus& corpus,
                                         const std::unordered_set<std::string>& stopwords) {
    TokenizedCorpus out;
    out.reserve(corpus.size());
    for (const auto& d : corpus.documents) out.push_back(preprocess(d, stopwords));
    return out;
}

namespace detail {

inline Corpus subset(const Corpus& corpus, const std::vector<std::size_t>& rows) {
    std::vector<Document> docs;
    docs.reserve(rows.size());
    for (std::size_t r : rows) docs.push_back(corpus.documents[r]);
    return Corpus::from_documents(std::move(docs));
}

}  // namespace detail

// Seeded shuffle, then split at floor(train_ratio * n). The halves partition
// the corpus; both are in shuffled order.
inline std::pair<Corpus, Corpus> split(const Corpus& corpus, double train_ratio,
                                       std::uint64_t seed) {
    if (!(train_ratio > 0.0 && train_ratio < 1.0))
        throw ValidationError("train_ratio must be in (0, 1)");
    if (corpus.size() == 0) throw EmptyCorpus();

    Rng rng(seed);
    auto perm = rng.permutation(corpus.size());
    const auto n_train =
        static_cast<std::size_t>(std::floor(train_ratio * static_cast<double>(corpus.size())));
    std::vector<std::size_t> train_rows(perm.begin(), perm.begin() + n_train);
    std::vector<std::size_t> test_rows(perm.begin() + n_train, perm.end());
    return {detail::subset(corpus, train_rows), detail::subset(corpus, test_rows)};
}

// Row indices of a uniform sample without replacement of size
// max(1, round(fraction * n)), in draw order.
inline std::vector<std::size_t> sample_fraction_rows(std::size_t n, double fraction,
                                                     std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ValidationError("fraction must be in (0, 1]");
    if (n == 0) throw EmptyCorpus();
    auto m = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(fraction * static_cast<double>(n))));
    m = std::min(m, n);
    Rng rng(seed);
    auto perm = rng.permutation(n);
    perm.resize(m);
    return perm;
}

inline Corpus sample_fraction(const Corpus& corpus, double fraction, std::uint64_t seed) {
    return detail::subset(corpus, sample_fraction_rows(corpus.size(), fraction, seed));
}

// Row indices of m gold-labeled documents. Stratified draws cycle the classes
// in label_set order so per-class counts differ by at most one where class
// sizes permit.
inline std::vector<std::size_t> sample_labeled_rows(const Corpus& corpus, std::size_t m,
                                                    std::uint64_t seed, bool stratified) {
    std::vector<std::size_t> labeled;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        if (corpus.documents[i].gold_label) labeled.push_back(i);
    if (labeled.size() < m) throw NotEnoughLabels(labeled.size(), m);

    Rng rng(seed);
    std::vector<std::size_t> rows;
    if (!stratified) {
        rng.shuffle(labeled);
        rows.assign(labeled.begin(), labeled.begin() + m);
    } else {
        std::vector<std::vector<std::size_t>> by_class(corpus.label_set.size());
        for (std::size_t i : labeled) {
            const auto& lbl = *corpus.documents[i].gold_label;
            auto it = std::lower_bound(corpus.label_set.begin(), corpus.label_set.end(), lbl);
            by_class[static_cast<std::size_t>(it - corpus.label_set.begin())].push_back(i);
        }
        for (auto& cls : by_class) rng.shuffle(cls);
        std::vector<std::size_t> next(by_class.size(), 0);
        while (rows.size() < m) {
            bool drew = false;
            for (std::size_t c = 0; c < by_class.size() && rows.size() < m; ++c) {
                if (next[c] < by_class[c].size()) {
                    rows.push_back(by_class[c][next[c]++]);
                    drew = true;
                }
            }
            if (!drew) break;  // unreachable: total labeled >= m
        }
    }
    return rows;
}

inline Corpus sample_labeled(const Corpus& corpus, std::size_t m, std::uint64_t seed,
                             bool stratified) {
    return detail::subset(corpus, sample_labeled_rows(corpus, m, seed, stratified));
}

}  // namespace idofew

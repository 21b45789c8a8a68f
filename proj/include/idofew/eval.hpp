#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "idofew/errors.hpp"

namespace idofew {

// Per-item class indices in [0, n_classes).
struct Labeling {
    std::vector<std::size_t> labels;
    std::size_t n_classes = 0;

    static Labeling make(std::vector<std::size_t> labels, std::size_t n_classes) {
        if (n_classes < 1) throw ValidationError("labeling needs n_classes >= 1");
        for (std::size_t l : labels)
            if (l >= n_classes) throw LabelOutOfRange("label index out of range");
        return Labeling{std::move(labels), n_classes};
    }

    std::size_t size() const { return labels.size(); }
};

inline double accuracy(const Labeling& pred, const Labeling& gold) {
    if (pred.size() != gold.size()) throw LengthMismatch("accuracy: length mismatch");
    if (pred.size() == 0) throw EmptyInput("accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred.labels[i] == gold.labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

// Empirical class-frequency entropy in nats; 0 ln 0 := 0.
inline double entropy(const Labeling& l) {
    if (l.size() == 0) throw EmptyInput("entropy: empty input");
    std::vector<std::size_t> counts(l.n_classes, 0);
    for (std::size_t lab : l.labels) ++counts[lab];
    const double n = static_cast<double>(l.size());
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return h;
}

// Empirical mutual information in nats; zero-count cells contribute 0.
inline double mutual_information(const Labeling& a, const Labeling& b) {
    if (a.size() != b.size()) throw LengthMismatch("mutual_information: length mismatch");
    if (a.size() == 0) throw EmptyInput("mutual_information: empty input");
    std::vector<std::size_t> joint(a.n_classes * b.n_classes, 0);
    std::vector<std::size_t> ca(a.n_classes, 0), cb(b.n_classes, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++joint[a.labels[i] * b.n_classes + b.labels[i]];
        ++ca[a.labels[i]];
        ++cb[b.labels[i]];
    }
    const double n = static_cast<double>(a.size());
    std::vector<double> terms;
    terms.reserve(a.n_classes * b.n_classes);
    for (std::size_t i = 0; i < a.n_classes; ++i) {
        for (std::size_t j = 0; j < b.n_classes; ++j) {
            const std::size_t nij = joint[i * b.n_classes + j];
            if (nij == 0) continue;
            const double pij = static_cast<double>(nij) / n;
            const double pi = static_cast<double>(ca[i]) / n;
            const double pj = static_cast<double>(cb[j]) / n;
            terms.push_back(pij * std::log(pij / (pi * pj)));
        }
    }
    // Summing in sorted order makes the result independent of argument order,
    // so nmi(a, b) == nmi(b, a) exactly.
    std::sort(terms.begin(), terms.end());
    double mi = 0.0;
    for (double t : terms) mi += t;
    return mi;
}

// I / sqrt(H_a * H_b). Both labelings constant -> 1; exactly one constant -> 0.
// The result is checked against [0, 1] (up to rounding) on every call.
inline double nmi(const Labeling& a, const Labeling& b) {
    if (a.size() != b.size()) throw LengthMismatch("nmi: length mismatch");
    if (a.size() == 0) throw EmptyInput("nmi: empty input");
    const double ha = entropy(a), hb = entropy(b);
    if (ha == 0.0 && hb == 0.0) return 1.0;
    if (ha == 0.0 || hb == 0.0) return 0.0;
    const double mi = mutual_information(a, b);
    double value = mi / std::sqrt(ha * hb);
    if (value < -1e-9 || value > 1.0 + 1e-9)
        throw RuntimeError("nmi outside [0, 1]: " + std::to_string(value));
    return std::clamp(value, 0.0, 1.0);
}

}  // namespace idofew

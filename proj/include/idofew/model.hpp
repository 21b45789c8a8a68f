#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "idofew/errors.hpp"
#include "idofew/kmeans.hpp"
#include "idofew/rng.hpp"

namespace idofew {

// Reference classifier: affine -> ReLU -> affine -> softmax. The encoder
// (first affine map) is what inter-training shapes and later stages reuse.
struct InterTrainableClassifier {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t n_classes = 0;
    Eigen::MatrixXd w1;  // hidden x input
    Eigen::VectorXd b1;  // hidden
    Eigen::MatrixXd w2;  // classes x hidden
    Eigen::VectorXd b2;  // classes
};

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    std::string optimizer = "adam";
    std::uint64_t seed = 0;

    void validate() const {
        if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
        if (optimizer != "adam") throw ConfigError("train: unknown optimizer " + optimizer);
    }
};

namespace detail {

constexpr std::uint64_t kModelInitStream = 0x30DE1001;
constexpr std::uint64_t kHeadInitStream = 0x30DE1002;
constexpr std::uint64_t kTrainStream = 0x30DE1003;

// Row-major fill so initialization is independent of Eigen's storage order.
inline void fill_gaussian(Eigen::MatrixXd& m, double scale, Rng& rng) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = scale * rng.gaussian();
}

}  // namespace detail

inline InterTrainableClassifier new_classifier(std::size_t input_dim, std::size_t hidden_dim,
                                               std::size_t n_classes, std::uint64_t seed) {
    if (input_dim == 0 || hidden_dim == 0) throw ValidationError("classifier dims must be positive");
    if (n_classes < 2) throw ValidationError("classifier needs n_classes >= 2");

    InterTrainableClassifier m;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    m.n_classes = n_classes;
    Rng rng(derive_seed(seed, detail::kModelInitStream));
    m.w1.resize(static_cast<Eigen::Index>(hidden_dim), static_cast<Eigen::Index>(input_dim));
    detail::fill_gaussian(m.w1, 1.0 / std::sqrt(static_cast<double>(input_dim)), rng);
    m.b1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(hidden_dim));
    m.w2.resize(static_cast<Eigen::Index>(n_classes), static_cast<Eigen::Index>(hidden_dim));
    detail::fill_gaussian(m.w2, 1.0 / std::sqrt(static_cast<double>(hidden_dim)), rng);
    m.b2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_classes));
    return m;
}

// Encoder kept verbatim, head re-initialized for the new class count. The
// fresh head draws from a down-scaled seeded Gaussian (0.01 / sqrt(fan_in)):
// a replacement head must start near zero so that the few gradient steps of a
// small-label fine-tune are not spent cancelling random initial logits.
inline InterTrainableClassifier reset_head(const InterTrainableClassifier& model,
                                           std::size_t new_n_classes, std::uint64_t seed) {
    if (new_n_classes < 2) throw ValidationError("reset_head: n_classes must be >= 2");
    InterTrainableClassifier m = model;
    m.n_classes = new_n_classes;
    Rng rng(derive_seed(seed, detail::kHeadInitStream));
    m.w2.resize(static_cast<Eigen::Index>(new_n_classes),
                static_cast<Eigen::Index>(model.hidden_dim));
    detail::fill_gaussian(m.w2, 0.01 / std::sqrt(static_cast<double>(model.hidden_dim)), rng);
    m.b2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(new_n_classes));
    return m;
}

namespace detail {

using ConstMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

inline ConstMap map_rows(const DenseMatrix& X, std::size_t first, std::size_t count) {
    return ConstMap(X.values.data() + first * X.dim, static_cast<Eigen::Index>(count),
                    static_cast<Eigen::Index>(X.dim));
}

struct Forward {
    Eigen::MatrixXd z1;      // batch x hidden, pre-activation
    Eigen::MatrixXd hidden;  // batch x hidden
    Eigen::MatrixXd probs;   // batch x classes
};

inline Forward forward(const InterTrainableClassifier& m, const ConstMap& X) {
    Forward f;
    f.z1 = (X * m.w1.transpose()).rowwise() + m.b1.transpose();
    f.hidden = f.z1.cwiseMax(0.0);
    Eigen::MatrixXd logits = (f.hidden * m.w2.transpose()).rowwise() + m.b2.transpose();
    Eigen::VectorXd rowmax = logits.rowwise().maxCoeff();
    logits.colwise() -= rowmax;
    f.probs = logits.array().exp();
    Eigen::VectorXd rowsum = f.probs.rowwise().sum();
    f.probs.array().colwise() /= rowsum.array();
    return f;
}

}  // namespace detail

struct Gradients {
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::VectorXd b2;
};

// Mean softmax cross-entropy over the given rows.
inline double batch_loss(const InterTrainableClassifier& m, const DenseMatrix& X,
                         const std::vector<std::size_t>& labels) {
    if (X.dim != m.input_dim) throw DimensionMismatch("batch_loss: input dim mismatch");
    if (labels.size() != X.n_rows) throw LengthMismatch("batch_loss: labels length mismatch");
    auto f = detail::forward(m, detail::map_rows(X, 0, X.n_rows));
    double loss = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= m.n_classes) throw LabelOutOfRange("batch_loss: label out of range");
        loss -= std::log(std::max(f.probs(static_cast<Eigen::Index>(i),
                                          static_cast<Eigen::Index>(labels[i])),
                                  1e-300));
    }
    return loss / static_cast<double>(labels.size());
}

// Analytic gradients of batch_loss with respect to every parameter.
inline double batch_gradients(const InterTrainableClassifier& m, const DenseMatrix& X,
                              const std::vector<std::size_t>& labels, Gradients& g) {
    if (X.dim != m.input_dim) throw DimensionMismatch("batch_gradients: input dim mismatch");
    if (labels.size() != X.n_rows)
        throw LengthMismatch("batch_gradients: labels length mismatch");
    const auto Xb = detail::map_rows(X, 0, X.n_rows);
    auto f = detail::forward(m, Xb);
    const double inv_n = 1.0 / static_cast<double>(labels.size());

    double loss = 0.0;
    Eigen::MatrixXd dlogits = f.probs;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= m.n_classes)
            throw LabelOutOfRange("batch_gradients: label out of range");
        const auto r = static_cast<Eigen::Index>(i);
        const auto c = static_cast<Eigen::Index>(labels[i]);
        loss -= std::log(std::max(f.probs(r, c), 1e-300));
        dlogits(r, c) -= 1.0;
    }
    loss *= inv_n;
    dlogits *= inv_n;

    g.w2 = dlogits.transpose() * f.hidden;
    g.b2 = dlogits.colwise().sum();
    Eigen::MatrixXd dhidden = dlogits * m.w2;
    dhidden = (f.z1.array() > 0.0).select(dhidden, 0.0);
    g.w1 = dhidden.transpose() * Xb;
    g.b1 = dhidden.colwise().sum();
    return loss;
}

struct TrainResult {
    InterTrainableClassifier model;
    std::vector<double> loss_trace;  // mean loss per epoch
};

// Adam over seeded shuffled mini-batches. The input model is never mutated.
inline TrainResult train(const InterTrainableClassifier& model, const DenseMatrix& X,
                         const std::vector<std::size_t>& labels, const TrainConfig& cfg) {
    cfg.validate();
    if (X.dim != model.input_dim) throw DimensionMismatch("train: input dim mismatch");
    if (labels.size() != X.n_rows) throw LengthMismatch("train: labels length mismatch");
    if (X.n_rows == 0) throw EmptyInput("train: no rows");
    for (std::size_t l : labels)
        if (l >= model.n_classes) throw LabelOutOfRange("train: label out of range");

    TrainResult result;
    result.model = model;
    auto& m = result.model;

    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    Gradients g;
    Gradients m1{Eigen::MatrixXd::Zero(m.w1.rows(), m.w1.cols()),
                 Eigen::VectorXd::Zero(m.b1.size()),
                 Eigen::MatrixXd::Zero(m.w2.rows(), m.w2.cols()),
                 Eigen::VectorXd::Zero(m.b2.size())};
    Gradients m2 = m1;
    std::size_t step = 0;

    const auto adam_update = [&](Eigen::MatrixXd& param, const Eigen::MatrixXd& grad,
                                 Eigen::MatrixXd& mom1, Eigen::MatrixXd& mom2) {
        mom1 = beta1 * mom1 + (1.0 - beta1) * grad;
        mom2 = beta2 * mom2.array().matrix() + (1.0 - beta2) * grad.array().square().matrix();
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        param.array() -=
            cfg.learning_rate * (mom1.array() / c1) / ((mom2.array() / c2).sqrt() + eps);
    };
    const auto adam_update_v = [&](Eigen::VectorXd& param, const Eigen::VectorXd& grad,
                                   Eigen::VectorXd& mom1, Eigen::VectorXd& mom2) {
        mom1 = beta1 * mom1 + (1.0 - beta1) * grad;
        mom2 = beta2 * mom2.array().matrix() + (1.0 - beta2) * grad.array().square().matrix();
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        param.array() -=
            cfg.learning_rate * (mom1.array() / c1) / ((mom2.array() / c2).sqrt() + eps);
    };

    Rng shuffle_rng(derive_seed(cfg.seed, detail::kTrainStream));
    const std::size_t n = X.n_rows;
    DenseMatrix batch_x;
    std::vector<std::size_t> batch_y;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto perm = shuffle_rng.permutation(n);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, n - start);
            batch_x = DenseMatrix::zeros(count, X.dim);
            batch_y.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t src = perm[start + i];
                std::copy(X.row(src), X.row(src) + X.dim, batch_x.row(i));
                batch_y[i] = labels[src];
            }
            const double loss = batch_gradients(m, batch_x, batch_y, g);
            ++step;
            adam_update(m.w1, g.w1, m1.w1, m2.w1);
            adam_update_v(m.b1, g.b1, m1.b1, m2.b1);
            adam_update(m.w2, g.w2, m1.w2, m2.w2);
            adam_update_v(m.b2, g.b2, m1.b2, m2.b2);
            epoch_loss += loss * static_cast<double>(count);
        }
        result.loss_trace.push_back(epoch_loss / static_cast<double>(n));
    }
    return result;
}

// Encoder output (post-ReLU hidden features), one row per input row.
inline DenseMatrix encode(const InterTrainableClassifier& m, const DenseMatrix& X) {
    if (X.dim != m.input_dim) throw DimensionMismatch("encode: input dim mismatch");
    auto f = detail::forward(m, detail::map_rows(X, 0, X.n_rows));
    DenseMatrix out = DenseMatrix::zeros(X.n_rows, m.hidden_dim);
    for (std::size_t i = 0; i < X.n_rows; ++i)
        for (std::size_t j = 0; j < m.hidden_dim; ++j)
            out.row(i)[j] = f.hidden(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
}

// Softmax probabilities, one row per input row.
inline DenseMatrix predict_proba(const InterTrainableClassifier& m, const DenseMatrix& X) {
    if (X.dim != m.input_dim) throw DimensionMismatch("predict_proba: input dim mismatch");
    auto f = detail::forward(m, detail::map_rows(X, 0, X.n_rows));
    DenseMatrix out = DenseMatrix::zeros(X.n_rows, m.n_classes);
    for (std::size_t i = 0; i < X.n_rows; ++i)
        for (std::size_t j = 0; j < m.n_classes; ++j)
            out.row(i)[j] = f.probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
}

// Argmax over head logits; ties to the lowest class index.
inline std::vector<std::size_t> predict(const InterTrainableClassifier& m,
                                        const DenseMatrix& X) {
    if (X.dim != m.input_dim) throw DimensionMismatch("predict: input dim mismatch");
    auto f = detail::forward(m, detail::map_rows(X, 0, X.n_rows));
    std::vector<std::size_t> out(X.n_rows, 0);
    for (std::size_t i = 0; i < X.n_rows; ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m.n_classes; ++j) {
            const double p =
                f.probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (p > best) {
                best = p;
                out[i] = j;
            }
        }
    }
    return out;
}

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_f64(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline double read_f64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

constexpr std::uint32_t kModelMagic = 0x57464449;  // "IDFW" little-endian
constexpr std::uint32_t kModelVersion = 1;

}  // namespace detail

// Binary checkpoint: magic, version, dims, then little-endian f64 parameters
// in order w1 (row-major), b1, w2 (row-major), b2.
inline void save_model(const InterTrainableClassifier& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model checkpoint: " + path);
    detail::write_u32(out, detail::kModelMagic);
    detail::write_u32(out, detail::kModelVersion);
    detail::write_u32(out, static_cast<std::uint32_t>(m.input_dim));
    detail::write_u32(out, static_cast<std::uint32_t>(m.hidden_dim));
    detail::write_u32(out, static_cast<std::uint32_t>(m.n_classes));
    for (Eigen::Index r = 0; r < m.w1.rows(); ++r)
        for (Eigen::Index c = 0; c < m.w1.cols(); ++c) detail::write_f64(out, m.w1(r, c));
    for (Eigen::Index i = 0; i < m.b1.size(); ++i) detail::write_f64(out, m.b1(i));
    for (Eigen::Index r = 0; r < m.w2.rows(); ++r)
        for (Eigen::Index c = 0; c < m.w2.cols(); ++c) detail::write_f64(out, m.w2(r, c));
    for (Eigen::Index i = 0; i < m.b2.size(); ++i) detail::write_f64(out, m.b2(i));
    if (!out) throw IoError("failed writing model checkpoint: " + path);
}

inline InterTrainableClassifier load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model checkpoint: " + path);
    if (detail::read_u32(in) != detail::kModelMagic)
        throw ValidationError("model checkpoint: bad magic");
    const auto version = detail::read_u32(in);
    if (version != detail::kModelVersion)
        throw ValidationError("model checkpoint: unsupported version " +
                              std::to_string(version));
    InterTrainableClassifier m;
    m.input_dim = detail::read_u32(in);
    m.hidden_dim = detail::read_u32(in);
    m.n_classes = detail::read_u32(in);
    m.w1.resize(static_cast<Eigen::Index>(m.hidden_dim), static_cast<Eigen::Index>(m.input_dim));
    m.b1.resize(static_cast<Eigen::Index>(m.hidden_dim));
    m.w2.resize(static_cast<Eigen::Index>(m.n_classes), static_cast<Eigen::Index>(m.hidden_dim));
    m.b2.resize(static_cast<Eigen::Index>(m.n_classes));
    for (Eigen::Index r = 0; r < m.w1.rows(); ++r)
        for (Eigen::Index c = 0; c < m.w1.cols(); ++c) m.w1(r, c) = detail::read_f64(in);
    for (Eigen::Index i = 0; i < m.b1.size(); ++i) m.b1(i) = detail::read_f64(in);
    for (Eigen::Index r = 0; r < m.w2.rows(); ++r)
        for (Eigen::Index c = 0; c < m.w2.cols(); ++c) m.w2(r, c) = detail::read_f64(in);
    for (Eigen::Index i = 0; i < m.b2.size(); ++i) m.b2(i) = detail::read_f64(in);
    if (!in) throw ValidationError("model checkpoint: truncated file");
    return m;
}

}  // namespace idofew

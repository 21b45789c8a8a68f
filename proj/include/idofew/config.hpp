#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "idofew/errors.hpp"
#include "idofew/model.hpp"

namespace idofew {

struct StageConfig {
    std::string algorithm;  // "sib" (TF-IDF features) or "kmeans" (embeddings)
    std::size_t clusters = 20;
    double text_fraction = 1.0;
};

// Full parameterization of a pipeline run. Defaults mirror the reference
// setup: TF-IDF capped at 10,000 terms, SIB capped at 15 sweeps, KMeans at
// 300 iterations, 20 clusters per stage, 5% stage-2 fraction, 64 gold labels.
struct ExperimentConfig {
    std::string dataset_path;
    std::string stopwords_path;  // empty -> built-in list
    std::uint64_t seed = 0;
    bool seed_explicit = false;  // true when the config file set the seed
    double train_ratio = 0.8;

    StageConfig stage1{"sib", 20, 1.0};
    bool stage2_enabled = true;
    StageConfig stage2{"kmeans", 20, 0.05};

    std::string provider = "projection";  // "projection" or "file"
    std::string embedding_file;
    std::size_t embed_dim = 384;
    std::size_t embed_max_len = 256;

    std::size_t n_labels = 64;
    std::optional<double> n_labels_fraction;  // set by label-budget sweeps
    bool stratified = true;

    TrainConfig train;

    std::size_t tfidf_max_terms = 10000;
    std::size_t sib_max_sweeps = 15;
    double sib_tol = 0.02;
    std::size_t kmeans_max_iter = 300;
    double kmeans_tol = 1e-6;
    std::size_t hidden_dim = 128;

    std::vector<std::size_t> cluster_sweep = {10, 20, 30, 50, 70, 80, 100};
    std::vector<double> fraction_sweep = {0.05, 0.10, 0.20};

    std::string dump_dir;  // empty -> no clustering/trace dumps

    void validate() const {
        if (!(train_ratio > 0.0 && train_ratio < 1.0))
            throw ConfigError("data: train_ratio must be in (0, 1)");
        for (const StageConfig* s : {&stage1, &stage2}) {
            if (s->algorithm != "sib" && s->algorithm != "kmeans")
                throw ConfigError("stage: algorithm must be \"sib\" or \"kmeans\"");
            if (s->clusters < 2) throw ConfigError("stage: clusters must be >= 2");
            if (!(s->text_fraction > 0.0 && s->text_fraction <= 1.0))
                throw ConfigError("stage: text_fraction must be in (0, 1]");
        }
        if (provider != "projection" && provider != "file")
            throw ConfigError("stage2: provider must be \"projection\" or \"file\"");
        if (provider == "file" && embedding_file.empty())
            throw ConfigError("stage2: provider \"file\" needs embedding_file");
        if (embed_dim < 2) throw ConfigError("embed: dim must be >= 2");
        if (embed_max_len < 1) throw ConfigError("embed: max_len must be >= 1");
        if (n_labels < 1) throw ConfigError("finetune: n_labels must be >= 1");
        if (n_labels_fraction && !(*n_labels_fraction > 0.0 && *n_labels_fraction <= 1.0))
            throw ConfigError("finetune: label budget fraction must be in (0, 1]");
        train.validate();
        if (tfidf_max_terms < 1) throw ConfigError("tfidf: max_terms must be >= 1");
        if (sib_max_sweeps < 1) throw ConfigError("sib: max_sweeps must be >= 1");
        if (!(sib_tol >= 0.0)) throw ConfigError("sib: tol must be >= 0");
        if (kmeans_max_iter < 1) throw ConfigError("kmeans: max_iter must be >= 1");
        if (!(kmeans_tol >= 0.0)) throw ConfigError("kmeans: tol must be >= 0");
        if (hidden_dim < 1) throw ConfigError("model: hidden_dim must be >= 1");
        for (std::size_t c : cluster_sweep)
            if (c < 2) throw ConfigError("eval: cluster_sweep values must be >= 2");
        for (double f : fraction_sweep)
            if (!(f > 0.0 && f <= 1.0))
                throw ConfigError("eval: fraction_sweep values must be in (0, 1]");
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["seed"] = seed;
        j["data"] = {{"path", dataset_path},
                     {"stopwords", stopwords_path},
                     {"train_ratio", train_ratio}};
        j["stage1"] = {{"algorithm", stage1.algorithm},
                       {"clusters", stage1.clusters},
                       {"text_fraction", stage1.text_fraction}};
        j["stage2"] = {{"enabled", stage2_enabled},
                       {"algorithm", stage2.algorithm},
                       {"clusters", stage2.clusters},
                       {"text_fraction", stage2.text_fraction},
                       {"provider", provider},
                       {"embedding_file", embedding_file}};
        j["embed"] = {{"dim", embed_dim}, {"max_len", embed_max_len}};
        j["finetune"] = {{"n_labels", n_labels}, {"stratified", stratified}};
        j["train"] = {{"epochs", train.epochs},
                      {"batch_size", train.batch_size},
                      {"learning_rate", train.learning_rate},
                      {"optimizer", train.optimizer}};
        j["tfidf"] = {{"max_terms", tfidf_max_terms}};
        j["sib"] = {{"max_sweeps", sib_max_sweeps}, {"tol", sib_tol}};
        j["kmeans"] = {{"max_iter", kmeans_max_iter}, {"tol", kmeans_tol}};
        j["model"] = {{"hidden_dim", hidden_dim}};
        j["eval"] = {{"cluster_sweep", cluster_sweep}, {"fraction_sweep", fraction_sweep}};
        return j;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

inline std::string strip_comment(const std::string& line) {
    bool in_quote = false;
    char quote = '\0';
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quote) {
            if (c == quote) in_quote = false;
        } else if (c == '"' || c == '\'') {
            in_quote = true;
            quote = c;
        } else if (c == '#' || c == ';') {
            return line.substr(0, i);
        }
    }
    return line;
}

inline double parse_double(const std::string& v, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line_no) + ": expected a number, got \"" +
                          v + "\"");
    }
}

inline std::uint64_t parse_uint(const std::string& v, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const unsigned long long u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return u;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line_no) +
                          ": expected a nonnegative integer, got \"" + v + "\"");
    }
}

inline bool parse_bool(const std::string& v, std::size_t line_no) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("line " + std::to_string(line_no) + ": expected true/false, got \"" +
                      v + "\"");
}

template <typename T, typename Fn>
std::vector<T> parse_list(const std::string& v, std::size_t line_no, Fn parse_one) {
    std::vector<T> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_one(item, line_no));
    }
    return out;
}

}  // namespace detail

// Flat sectioned key-value format: "[section]" headers, "key = value" lines,
// '#'/';' comments, comma-separated lists. Flat TOML files parse as-is.
inline ExperimentConfig parse_config_text(std::istream& in) {
    using namespace detail;
    ExperimentConfig cfg;
    std::string section;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        const std::string full = section.empty() ? key : section + "." + key;

        if (full == "seed") {
            cfg.seed = parse_uint(value, line_no);
            cfg.seed_explicit = true;
        }
        else if (full == "data.path") cfg.dataset_path = value;
        else if (full == "data.stopwords") cfg.stopwords_path = value;
        else if (full == "data.train_ratio") cfg.train_ratio = parse_double(value, line_no);
        else if (full == "stage1.algorithm") cfg.stage1.algorithm = value;
        else if (full == "stage1.clusters") cfg.stage1.clusters = parse_uint(value, line_no);
        else if (full == "stage1.text_fraction") cfg.stage1.text_fraction = parse_double(value, line_no);
        else if (full == "stage2.enabled") cfg.stage2_enabled = parse_bool(value, line_no);
        else if (full == "stage2.algorithm") cfg.stage2.algorithm = value;
        else if (full == "stage2.clusters") cfg.stage2.clusters = parse_uint(value, line_no);
        else if (full == "stage2.text_fraction") cfg.stage2.text_fraction = parse_double(value, line_no);
        else if (full == "stage2.provider") cfg.provider = value;
        else if (full == "stage2.embedding_file") cfg.embedding_file = value;
        else if (full == "embed.dim") cfg.embed_dim = parse_uint(value, line_no);
        else if (full == "embed.max_len") cfg.embed_max_len = parse_uint(value, line_no);
        else if (full == "finetune.n_labels") cfg.n_labels = parse_uint(value, line_no);
        else if (full == "finetune.stratified") cfg.stratified = parse_bool(value, line_no);
        else if (full == "train.epochs") cfg.train.epochs = parse_uint(value, line_no);
        else if (full == "train.batch_size") cfg.train.batch_size = parse_uint(value, line_no);
        else if (full == "train.learning_rate") cfg.train.learning_rate = parse_double(value, line_no);
        else if (full == "train.optimizer") cfg.train.optimizer = value;
        else if (full == "tfidf.max_terms") cfg.tfidf_max_terms = parse_uint(value, line_no);
        else if (full == "sib.max_sweeps") cfg.sib_max_sweeps = parse_uint(value, line_no);
        else if (full == "sib.tol") cfg.sib_tol = parse_double(value, line_no);
        else if (full == "kmeans.max_iter") cfg.kmeans_max_iter = parse_uint(value, line_no);
        else if (full == "kmeans.tol") cfg.kmeans_tol = parse_double(value, line_no);
        else if (full == "model.hidden_dim") cfg.hidden_dim = parse_uint(value, line_no);
        else if (full == "eval.cluster_sweep")
            cfg.cluster_sweep = parse_list<std::size_t>(value, line_no, [](const std::string& s, std::size_t ln) {
                return static_cast<std::size_t>(parse_uint(s, ln));
            });
        else if (full == "eval.fraction_sweep")
            cfg.fraction_sweep = parse_list<double>(value, line_no, [](const std::string& s, std::size_t ln) {
                return parse_double(s, ln);
            });
        else
            throw ConfigError("line " + std::to_string(line_no) + ": unknown key \"" + full +
                              "\"");
    }
    return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    return parse_config_text(in);
}

}  // namespace idofew

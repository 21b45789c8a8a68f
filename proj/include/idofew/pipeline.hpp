#pragma once

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <future>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "idofew/clustering.hpp"
#include "idofew/config.hpp"
#include "idofew/corpus.hpp"
#include "idofew/embed.hpp"
#include "idofew/errors.hpp"
#include "idofew/eval.hpp"
#include "idofew/kmeans.hpp"
#include "idofew/model.hpp"
#include "idofew/rng.hpp"
#include "idofew/sib.hpp"
#include "idofew/stopwords.hpp"
#include "idofew/tfidf.hpp"
#include "idofew/version.hpp"

namespace idofew {

enum class Variant {
    SibKmeans,
    SibSib,
    KmeansKmeans,
    KmeansSib,
    SingleSib,
    SingleKmeans,
    BaselineFewlabel,
    BaselineZerolabel,
};

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::SibKmeans: return "SIB-KMEANS";
        case Variant::SibSib: return "SIB-SIB";
        case Variant::KmeansKmeans: return "KMEANS-KMEANS";
        case Variant::KmeansSib: return "KMEANS-SIB";
        case Variant::SingleSib: return "SINGLE-SIB";
        case Variant::SingleKmeans: return "SINGLE-KMEANS";
        case Variant::BaselineFewlabel: return "BASELINE-FEWLABEL";
        case Variant::BaselineZerolabel: return "BASELINE-ZEROLABEL";
    }
    return "?";
}

inline Variant parse_variant(const std::string& s) {
    for (Variant v : {Variant::SibKmeans, Variant::SibSib, Variant::KmeansKmeans,
                      Variant::KmeansSib, Variant::SingleSib, Variant::SingleKmeans,
                      Variant::BaselineFewlabel, Variant::BaselineZerolabel})
        if (s == to_string(v)) return v;
    throw ConfigError("unknown variant \"" + s + "\"");
}

struct StageReport {
    std::string name;
    std::string algorithm;
    std::string features;
    std::size_t n_docs = 0;
    std::size_t clusters = 0;
    std::size_t n_empty_clusters = 0;
    std::size_t sweeps = 0;
    double objective_final = 0.0;
    double nmi_vs_gold = 0.0;
    double interior_test_accuracy = 0.0;
    double wall_clock_sec = 0.0;
};

struct RunReport {
    std::string variant;
    std::uint64_t seed = 0;
    nlohmann::ordered_json config_echo;
    std::vector<StageReport> stages;
    std::size_t n_labels_used = 0;
    bool stratified = false;
    double finetune_wall_clock_sec = 0.0;
    double final_accuracy = 0.0;
    double total_wall_clock_sec = 0.0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["schema_version"] = kReportSchemaVersion;
        j["artifact_version"] = kVersion;
        j["variant"] = variant;
        j["seed"] = seed;
        j["config"] = config_echo;
        auto stages_json = nlohmann::ordered_json::array();
        for (const auto& s : stages) {
            nlohmann::ordered_json sj;
            sj["name"] = s.name;
            sj["algorithm"] = s.algorithm;
            sj["features"] = s.features;
            sj["n_docs"] = s.n_docs;
            sj["clusters"] = s.clusters;
            sj["n_empty_clusters"] = s.n_empty_clusters;
            sj["sweeps"] = s.sweeps;
            sj["objective_final"] = s.objective_final;
            sj["nmi_vs_gold"] = s.nmi_vs_gold;
            sj["interior_test_accuracy"] = s.interior_test_accuracy;
            sj["wall_clock_sec"] = s.wall_clock_sec;
            stages_json.push_back(std::move(sj));
        }
        j["stages"] = std::move(stages_json);
        j["finetune"] = {{"n_labels", n_labels_used},
                         {"stratified", stratified},
                         {"wall_clock_sec", finetune_wall_clock_sec}};
        j["final_accuracy"] = final_accuracy;
        j["total_wall_clock_sec"] = total_wall_clock_sec;
        return j;
    }
};

// Inter-training step: fit the classifier to predict cluster indices from
// embeddings. Takes no labels by construction, so pseudo-label stages cannot
// see gold annotations.
inline TrainResult stage_pseudo_train(const InterTrainableClassifier& model,
                                      const DenseMatrix& embeddings,
                                      const Clustering& clustering, const TrainConfig& cfg) {
    if (clustering.assignment.size() != embeddings.n_rows)
        throw LengthMismatch("stage_pseudo_train: clustering does not cover the subset");
    if (model.n_classes != clustering.n_clusters)
        throw ValidationError(
            "stage_pseudo_train: head width must equal n_clusters (call reset_head)");
    return train(model, embeddings, clustering.assignment, cfg);
}

namespace detail {

// Seed substream ids, one per random decision in a run.
enum PipelineStream : std::uint64_t {
    kSplitStream = 1,
    kProviderStream = 2,
    kStage1Sample = 10,
    kStage1Cluster = 11,
    kStage1ModelInit = 12,
    kStage1Train = 13,
    kStage2Sample = 20,
    kStage2Cluster = 21,
    kStage2Head = 22,
    kStage2Train = 23,
    kFinetuneSample = 30,
    kFinetuneHead = 31,
    kFinetuneTrain = 32,
    kZeroLabelModel = 33,
};

struct StagePlan {
    std::string algorithm;  // "sib" or "kmeans"
    std::size_t clusters = 0;
    double fraction = 1.0;
};

struct RunPlan {
    std::string name;
    std::optional<StagePlan> stage1;
    std::optional<StagePlan> stage2;
    bool train_finetune = true;  // false for BASELINE-ZEROLABEL
};

inline RunPlan resolve_plan(const ExperimentConfig& cfg, std::optional<Variant> variant) {
    RunPlan plan;
    const StagePlan s1{cfg.stage1.algorithm, cfg.stage1.clusters, cfg.stage1.text_fraction};
    const StagePlan s2{cfg.stage2.algorithm, cfg.stage2.clusters, cfg.stage2.text_fraction};
    if (!variant) {
        plan.stage1 = s1;
        if (cfg.stage2_enabled) plan.stage2 = s2;
    } else {
        auto with_alg = [](StagePlan p, const char* alg) {
            p.algorithm = alg;
            return p;
        };
        switch (*variant) {
            case Variant::SibKmeans:
                plan.stage1 = with_alg(s1, "sib");
                plan.stage2 = with_alg(s2, "kmeans");
                break;
            case Variant::SibSib:
                plan.stage1 = with_alg(s1, "sib");
                plan.stage2 = with_alg(s2, "sib");
                break;
            case Variant::KmeansKmeans:
                plan.stage1 = with_alg(s1, "kmeans");
                plan.stage2 = with_alg(s2, "kmeans");
                break;
            case Variant::KmeansSib:
                plan.stage1 = with_alg(s1, "kmeans");
                plan.stage2 = with_alg(s2, "sib");
                break;
            case Variant::SingleSib: plan.stage1 = with_alg(s1, "sib"); break;
            case Variant::SingleKmeans: plan.stage1 = with_alg(s1, "kmeans"); break;
            case Variant::BaselineFewlabel: break;
            case Variant::BaselineZerolabel: plan.train_finetune = false; break;
        }
    }
    if (variant) {
        plan.name = to_string(*variant);
    } else if (plan.stage1 && plan.stage2) {
        std::string a = plan.stage1->algorithm, b = plan.stage2->algorithm;
        for (auto* s : {&a, &b})
            for (char& c : *s) c = static_cast<char>(std::toupper(c));
        plan.name = a + "-" + b;
    } else {
        std::string a = plan.stage1->algorithm;
        for (char& c : a) c = static_cast<char>(std::toupper(c));
        plan.name = "SINGLE-" + a;
    }
    return plan;
}

inline DenseMatrix gather_rows(const DenseMatrix& m, const std::vector<std::size_t>& rows) {
    DenseMatrix out = DenseMatrix::zeros(rows.size(), m.dim);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(m.row(rows[i]), m.row(rows[i]) + m.dim, out.row(i));
    return out;
}

inline TokenizedCorpus gather_tokens(const TokenizedCorpus& docs,
                                     const std::vector<std::size_t>& rows) {
    TokenizedCorpus out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(docs[r]);
    return out;
}

inline std::size_t label_index(const std::vector<std::string>& label_set,
                               const std::string& label) {
    auto it = std::lower_bound(label_set.begin(), label_set.end(), label);
    if (it == label_set.end() || *it != label)
        throw ValidationError("label \"" + label + "\" not in the corpus label set");
    return static_cast<std::size_t>(it - label_set.begin());
}

// Majority gold class per cluster (ties to the lowest class index; clusters
// with no labeled members map to class 0).
inline std::vector<std::size_t> majority_class_map(const Clustering& clustering,
                                                   const std::vector<std::size_t>& rows,
                                                   const Corpus& train,
                                                   const std::vector<std::string>& label_set) {
    std::vector<std::vector<std::size_t>> counts(clustering.n_clusters,
                                                 std::vector<std::size_t>(label_set.size(), 0));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& doc = train.documents[rows[i]];
        if (!doc.gold_label) continue;
        ++counts[clustering.assignment[i]][label_index(label_set, *doc.gold_label)];
    }
    std::vector<std::size_t> map(clustering.n_clusters, 0);
    for (std::size_t c = 0; c < clustering.n_clusters; ++c) {
        std::size_t best = 0, best_count = 0;
        for (std::size_t cls = 0; cls < label_set.size(); ++cls) {
            if (counts[c][cls] > best_count) {
                best_count = counts[c][cls];
                best = cls;
            }
        }
        map[c] = best;
    }
    return map;
}

struct TestSet {
    std::vector<std::size_t> rows;  // labeled rows within the test corpus
    DenseMatrix embeddings;
    Labeling gold;
};

inline double elapsed_sec(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

// Executes the staged pipeline: optional pseudo-label stages (SIB over TF-IDF
// and/or KMeans over embeddings), then fine-tuning on a handful of gold
// labels. `variant` overrides the stage layout configured in `cfg`.
inline RunReport run_pipeline(const Corpus& corpus, const ExperimentConfig& cfg,
                              std::optional<Variant> variant = std::nullopt) {
    cfg.validate();
    if (corpus.size() == 0) throw EmptyCorpus();
    if (corpus.label_set.size() < 2)
        throw ValidationError("pipeline needs a corpus with at least 2 gold classes");

    const auto plan = detail::resolve_plan(cfg, variant);
    const std::uint64_t seed = cfg.seed;
    const auto t_total = std::chrono::steady_clock::now();

    RunReport report;
    report.variant = plan.name;
    report.seed = seed;
    report.config_echo = cfg.to_json();
    report.stratified = cfg.stratified;

    const auto stopwords =
        cfg.stopwords_path.empty() ? builtin_stopwords() : load_stopwords(cfg.stopwords_path);
    auto [train_set, test_set_corpus] =
        split(corpus, cfg.train_ratio, derive_seed(seed, detail::kSplitStream));
    const TokenizedCorpus train_tok = preprocess_corpus(train_set, stopwords);
    const TokenizedCorpus test_tok = preprocess_corpus(test_set_corpus, stopwords);
    const std::vector<std::string>& label_set = corpus.label_set;

    std::shared_ptr<EmbeddingProvider> provider;
    if (cfg.provider == "file") {
        provider = file_provider(cfg.embedding_file, cfg.embed_dim);
    } else {
        provider = projection_provider(build_vocabulary(train_tok, cfg.tfidf_max_terms),
                                       cfg.embed_dim, derive_seed(seed, detail::kProviderStream));
    }
    const DenseMatrix train_emb = embed_documents(train_tok, *provider, cfg.embed_max_len);
    const DenseMatrix test_emb = embed_documents(test_tok, *provider, cfg.embed_max_len);

    detail::TestSet test;
    {
        std::vector<std::size_t> gold_idx;
        for (std::size_t i = 0; i < test_set_corpus.size(); ++i) {
            if (!test_set_corpus.documents[i].gold_label) continue;
            test.rows.push_back(i);
            gold_idx.push_back(
                detail::label_index(label_set, *test_set_corpus.documents[i].gold_label));
        }
        if (test.rows.empty()) throw ValidationError("test split has no gold labels");
        test.embeddings = detail::gather_rows(test_emb, test.rows);
        test.gold = Labeling::make(std::move(gold_idx), label_set.size());
    }

    if (!cfg.dump_dir.empty()) std::filesystem::create_directories(cfg.dump_dir);

    std::optional<InterTrainableClassifier> model;

    const auto run_stage = [&](const detail::StagePlan& sp, const char* name,
                               std::uint64_t sample_stream, std::uint64_t cluster_stream,
                               std::uint64_t model_stream, std::uint64_t train_stream) {
        const auto t0 = std::chrono::steady_clock::now();
        StageReport sr;
        sr.name = name;
        sr.algorithm = sp.algorithm;
        sr.features = sp.algorithm == "sib" ? "tfidf" : "embedding";
        sr.clusters = sp.clusters;

        const auto rows = sample_fraction_rows(train_set.size(), sp.fraction,
                                               derive_seed(seed, sample_stream));
        sr.n_docs = rows.size();

        Clustering clustering;
        if (sp.algorithm == "sib") {
            const auto subset_tok = detail::gather_tokens(train_tok, rows);
            const auto vocab = build_vocabulary(subset_tok, cfg.tfidf_max_terms);
            const auto matrix = row_normalize(vectorize(subset_tok, vocab));
            SibOptions opts;
            opts.max_sweeps = cfg.sib_max_sweeps;
            opts.tol = cfg.sib_tol;
            opts.seed = derive_seed(seed, cluster_stream);
            clustering = sib_cluster(matrix, sp.clusters, opts);
        } else {
            KMeansOptions opts;
            opts.max_iter = cfg.kmeans_max_iter;
            opts.tol = cfg.kmeans_tol;
            opts.seed = derive_seed(seed, cluster_stream);
            clustering = kmeans_cluster(detail::gather_rows(train_emb, rows), sp.clusters, opts);
        }
        sr.n_empty_clusters = clustering.n_empty_clusters();
        sr.sweeps = clustering.n_sweeps;
        sr.objective_final =
            clustering.objective_trace.empty() ? 0.0 : clustering.objective_trace.back();

        // NMI against the gold labels of the clustered subset.
        {
            std::vector<std::size_t> pseudo, gold;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto& doc = train_set.documents[rows[i]];
                if (!doc.gold_label) continue;
                pseudo.push_back(clustering.assignment[i]);
                gold.push_back(detail::label_index(label_set, *doc.gold_label));
            }
            sr.nmi_vs_gold = pseudo.empty()
                                 ? 0.0
                                 : nmi(Labeling::make(std::move(pseudo), clustering.n_clusters),
                                       Labeling::make(std::move(gold), label_set.size()));
        }

        if (!cfg.dump_dir.empty()) {
            std::vector<std::string> ids;
            ids.reserve(rows.size());
            for (std::size_t r : rows) ids.push_back(train_set.documents[r].id);
            const auto base = std::filesystem::path(cfg.dump_dir) / name;
            dump_clustering(clustering, ids, base.string() + "_clusters.jsonl");
            dump_trace(clustering.objective_trace, base.string() + "_trace.txt");
        }

        // Inter-train on the pseudo-labels; the encoder is warm-started from
        // the previous stage when one exists.
        if (model) {
            model = reset_head(*model, clustering.n_clusters, derive_seed(seed, model_stream));
        } else {
            model = new_classifier(provider->dim(), cfg.hidden_dim, clustering.n_clusters,
                                   derive_seed(seed, model_stream));
        }
        TrainConfig tc = cfg.train;
        tc.seed = derive_seed(seed, train_stream);
        model = stage_pseudo_train(*model, detail::gather_rows(train_emb, rows), clustering, tc)
                    .model;

        // Table-4-style interior accuracy: head predicts clusters on the test
        // set; clusters map to their majority gold class in the subset.
        {
            const auto cluster_to_class =
                detail::majority_class_map(clustering, rows, train_set, label_set);
            const auto preds = predict(*model, test.embeddings);
            std::vector<std::size_t> mapped(preds.size());
            for (std::size_t i = 0; i < preds.size(); ++i) mapped[i] = cluster_to_class[preds[i]];
            sr.interior_test_accuracy =
                accuracy(Labeling::make(std::move(mapped), label_set.size()), test.gold);
        }

        sr.wall_clock_sec = detail::elapsed_sec(t0);
        report.stages.push_back(std::move(sr));
    };

    // Any stage error aborts the run tagged with the stage name.
    const auto tagged = [](const char* tag, auto&& fn) {
        try {
            fn();
        } catch (const ValidationError& e) {
            throw ValidationError(std::string(tag) + ": " + e.what());
        } catch (const Error& e) {
            throw RuntimeError(std::string(tag) + ": " + e.what());
        }
    };

    if (plan.stage1)
        tagged("stage1", [&] {
            run_stage(*plan.stage1, "stage1", detail::kStage1Sample, detail::kStage1Cluster,
                      detail::kStage1ModelInit, detail::kStage1Train);
        });
    if (plan.stage2)
        tagged("stage2", [&] {
            run_stage(*plan.stage2, "stage2", detail::kStage2Sample, detail::kStage2Cluster,
                      detail::kStage2Head, detail::kStage2Train);
        });

    if (plan.train_finetune) {
        tagged("finetune", [&] {
            const auto t0 = std::chrono::steady_clock::now();
            std::size_t n_labeled_train = 0;
            for (const auto& d : train_set.documents)
                if (d.gold_label) ++n_labeled_train;
            std::size_t m = cfg.n_labels;
            if (cfg.n_labels_fraction)
                m = std::max<std::size_t>(
                    1, static_cast<std::size_t>(
                           std::llround(*cfg.n_labels_fraction *
                                        static_cast<double>(n_labeled_train))));
            if (cfg.stratified && m < label_set.size())
                throw ConfigError("n_labels must be >= number of classes when stratified");

            const auto rows = sample_labeled_rows(
                train_set, m, derive_seed(seed, detail::kFinetuneSample), cfg.stratified);
            std::vector<std::size_t> gold;
            gold.reserve(rows.size());
            for (std::size_t r : rows)
                gold.push_back(
                    detail::label_index(label_set, *train_set.documents[r].gold_label));

            if (model) {
                model = reset_head(*model, label_set.size(),
                                   derive_seed(seed, detail::kFinetuneHead));
            } else {
                model = new_classifier(provider->dim(), cfg.hidden_dim, label_set.size(),
                                       derive_seed(seed, detail::kFinetuneHead));
            }
            TrainConfig tc = cfg.train;
            tc.seed = derive_seed(seed, detail::kFinetuneTrain);
            model = train(*model, detail::gather_rows(train_emb, rows), gold, tc).model;

            report.n_labels_used = m;
            report.finetune_wall_clock_sec = detail::elapsed_sec(t0);
        });
    } else {
        model = new_classifier(provider->dim(), cfg.hidden_dim, label_set.size(),
                               derive_seed(seed, detail::kZeroLabelModel));
        report.n_labels_used = 0;
    }

    report.final_accuracy =
        accuracy(Labeling::make(predict(*model, test.embeddings), label_set.size()), test.gold);
    report.total_wall_clock_sec = detail::elapsed_sec(t_total);
    return report;
}

// The full dual-clustering pipeline (stage-1 + stage-2 + fine-tune).
inline RunReport run_idofew(const Corpus& corpus, const ExperimentConfig& cfg) {
    if (!cfg.stage2_enabled) throw ConfigError("run_idofew requires stage2");
    return run_pipeline(corpus, cfg, std::nullopt);
}

inline RunReport run_idofew(const ExperimentConfig& cfg) {
    return run_idofew(load_corpus(cfg.dataset_path), cfg);
}

inline RunReport run_variant(const Corpus& corpus, const ExperimentConfig& cfg, Variant v) {
    return run_pipeline(corpus, cfg, v);
}

inline RunReport run_variant(const ExperimentConfig& cfg, Variant v) {
    return run_pipeline(load_corpus(cfg.dataset_path), cfg, v);
}

namespace detail {

template <typename MakeConfig>
std::vector<RunReport> run_sweep(const Corpus& corpus, std::size_t count,
                                 MakeConfig make_config, std::size_t jobs) {
    std::vector<RunReport> reports(count);
    if (jobs <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            reports[i] = run_pipeline(corpus, make_config(i), std::nullopt);
        return reports;
    }
    std::size_t next = 0;
    while (next < count) {
        const std::size_t wave = std::min(jobs, count - next);
        std::vector<std::future<RunReport>> futures;
        futures.reserve(wave);
        for (std::size_t i = 0; i < wave; ++i) {
            const std::size_t idx = next + i;
            futures.push_back(std::async(std::launch::async, [&, idx] {
                return run_pipeline(corpus, make_config(idx), std::nullopt);
            }));
        }
        for (std::size_t i = 0; i < wave; ++i) reports[next + i] = futures[i].get();
        next += wave;
    }
    return reports;
}

}  // namespace detail

// One full run per cluster count; both stages use the value.
inline std::vector<RunReport> sweep_clusters(const Corpus& corpus, const ExperimentConfig& cfg,
                                             const std::vector<std::size_t>& values,
                                             std::size_t jobs = 1) {
    for (std::size_t v : values)
        if (v < 2) throw ConfigError("sweep-clusters: values must be >= 2");
    return detail::run_sweep(
        corpus, values.size(),
        [&](std::size_t i) {
            ExperimentConfig c = cfg;
            c.dump_dir.clear();
            c.stage1.clusters = values[i];
            c.stage2.clusters = values[i];
            return c;
        },
        jobs);
}

// One run per label budget; budgets >= 1 are absolute counts, budgets in
// (0, 1) are fractions of the labeled train set.
inline std::vector<RunReport> sweep_label_budget(const Corpus& corpus,
                                                 const ExperimentConfig& cfg,
                                                 const std::vector<double>& budgets,
                                                 std::size_t jobs = 1) {
    for (double b : budgets)
        if (!(b > 0.0)) throw ConfigError("sweep-labels: budgets must be positive");
    return detail::run_sweep(
        corpus, budgets.size(),
        [&](std::size_t i) {
            ExperimentConfig c = cfg;
            c.dump_dir.clear();
            if (budgets[i] < 1.0) {
                c.n_labels_fraction = budgets[i];
            } else {
                c.n_labels = static_cast<std::size_t>(std::llround(budgets[i]));
                c.n_labels_fraction.reset();
            }
            return c;
        },
        jobs);
}

// One run per text fraction applied to the given stage (1 or 2).
inline std::vector<RunReport> sweep_fraction(const Corpus& corpus, const ExperimentConfig& cfg,
                                             int stage, const std::vector<double>& values,
                                             std::size_t jobs = 1) {
    if (stage != 1 && stage != 2) throw ConfigError("sweep-fraction: stage must be 1 or 2");
    for (double f : values)
        if (!(f > 0.0 && f <= 1.0))
            throw ConfigError("sweep-fraction: fractions must be in (0, 1]");
    return detail::run_sweep(
        corpus, values.size(),
        [&](std::size_t i) {
            ExperimentConfig c = cfg;
            c.dump_dir.clear();
            (stage == 1 ? c.stage1 : c.stage2).text_fraction = values[i];
            return c;
        },
        jobs);
}

}  // namespace idofew

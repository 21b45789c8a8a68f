// Command-line front end: pipeline runs, ablation variants, sweeps, and the
// corpus/embedding utilities. Reports are JSON, written atomically.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "idofew/idofew.hpp"

namespace {

using nlohmann::ordered_json;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& cli_seed,
                           const idofew::ExperimentConfig* cfg) {
    if (cli_seed) return *cli_seed;
    if (cfg && cfg->seed_explicit) return cfg->seed;
    if (const char* env = std::getenv("IDOFEW_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw idofew::ConfigError("IDOFEW_SEED is not a nonnegative integer");
        }
    }
    return cfg ? cfg->seed : 0;
}

void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw idofew::IoError("cannot write report: " + tmp);
        out << content;
        if (!out) throw idofew::IoError("failed writing report: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

void emit_report(const ordered_json& j, const std::string& out_path) {
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        write_atomic(out_path, text);
}

ordered_json sweep_report(const std::string& command,
                          const std::vector<idofew::RunReport>& runs) {
    ordered_json j;
    j["schema_version"] = idofew::kReportSchemaVersion;
    j["artifact_version"] = idofew::kVersion;
    j["command"] = command;
    auto runs_json = ordered_json::array();
    for (const auto& r : runs) runs_json.push_back(r.to_json());
    j["runs"] = std::move(runs_json);
    return j;
}

std::vector<std::pair<std::string, std::size_t>> load_dump_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw idofew::IoError("cannot open clustering dump: " + path);
    std::vector<std::pair<std::string, std::size_t>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.contains("doc") || !rec.contains("cluster"))
            throw idofew::MalformedRecord(line_no, "expected {\"doc\":..., \"cluster\":...}");
        out.emplace_back(rec["doc"].get<std::string>(), rec["cluster"].get<std::size_t>());
    }
    return out;
}

idofew::Labeling to_labeling(const std::vector<std::size_t>& values) {
    std::size_t n_classes = 1;
    for (std::size_t v : values) n_classes = std::max(n_classes, v + 1);
    return idofew::Labeling::make(values, n_classes);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IDoFew: dual-clustering inter-training for few-label text classification"};
    app.require_subcommand(1);

    // ---- run / ablate ------------------------------------------------------
    std::string config_path, out_path, dump_dir, variant_name;
    std::optional<std::uint64_t> cli_seed;

    auto add_run_options = [&](CLI::App* cmd, bool with_variant) {
        cmd->add_option("--config", config_path, "experiment config file")->required();
        cmd->add_option("--seed", cli_seed, "run seed (overrides config and IDOFEW_SEED)");
        cmd->add_option("--out", out_path, "report path (default: stdout)");
        cmd->add_option("--dump-dir", dump_dir, "directory for clustering/trace dumps");
        if (with_variant)
            cmd->add_option("--variant", variant_name,
                            "SIB-KMEANS | SIB-SIB | KMEANS-KMEANS | KMEANS-SIB | SINGLE-SIB | "
                            "SINGLE-KMEANS | BASELINE-FEWLABEL | BASELINE-ZEROLABEL")
                ->required();
    };

    auto* cmd_run = app.add_subcommand("run", "run the dual-clustering pipeline");
    add_run_options(cmd_run, false);
    auto* cmd_ablate = app.add_subcommand("ablate", "run an ablation variant");
    add_run_options(cmd_ablate, true);

    // ---- sweeps ------------------------------------------------------------
    std::size_t jobs = 1;
    std::vector<std::size_t> cluster_values;
    std::vector<double> budget_values, fraction_values;
    int fraction_stage = 2;

    auto* cmd_sweep_clusters = app.add_subcommand("sweep-clusters", "sweep the cluster count");
    cmd_sweep_clusters->add_option("--config", config_path, "experiment config file")->required();
    cmd_sweep_clusters->add_option("--values", cluster_values,
                                   "cluster counts (default from config eval.cluster_sweep)");
    cmd_sweep_clusters->add_option("--seed", cli_seed, "run seed");
    cmd_sweep_clusters->add_option("--out", out_path, "report path");
    cmd_sweep_clusters->add_option("--jobs", jobs, "parallel runs");

    auto* cmd_sweep_labels = app.add_subcommand("sweep-labels", "sweep the gold-label budget");
    cmd_sweep_labels->add_option("--config", config_path, "experiment config file")->required();
    cmd_sweep_labels->add_option("--budgets", budget_values,
                                 "counts (>= 1) or fractions (< 1); default 64,0.05,0.1,0.2,0.5");
    cmd_sweep_labels->add_option("--seed", cli_seed, "run seed");
    cmd_sweep_labels->add_option("--out", out_path, "report path");
    cmd_sweep_labels->add_option("--jobs", jobs, "parallel runs");

    auto* cmd_sweep_fraction =
        app.add_subcommand("sweep-fraction", "sweep a stage's text fraction");
    cmd_sweep_fraction->add_option("--config", config_path, "experiment config file")->required();
    cmd_sweep_fraction->add_option("--stage", fraction_stage, "stage to sweep (1 or 2)")
        ->check(CLI::Range(1, 2));
    cmd_sweep_fraction->add_option("--values", fraction_values,
                                   "fractions; default stage 2: config eval.fraction_sweep, "
                                   "stage 1: 1.0,0.8,0.7,0.5");
    cmd_sweep_fraction->add_option("--seed", cli_seed, "run seed");
    cmd_sweep_fraction->add_option("--out", out_path, "report path");
    cmd_sweep_fraction->add_option("--jobs", jobs, "parallel runs");

    // ---- utilities ---------------------------------------------------------
    std::string corpus_path, embeddings_path;
    std::size_t embed_dim = 384;
    auto* cmd_embed_validate =
        app.add_subcommand("embed-validate", "validate an embedding file against a corpus");
    cmd_embed_validate->add_option("--corpus", corpus_path, "corpus JSONL")->required();
    cmd_embed_validate->add_option("--embeddings", embeddings_path, "embedding JSONL")->required();
    cmd_embed_validate->add_option("--dim", embed_dim, "expected vector length");

    idofew::PlantedSpec synth_spec;
    auto* cmd_synth = app.add_subcommand("synth", "generate a planted-cluster corpus");
    cmd_synth->add_option("--classes", synth_spec.n_classes, "number of classes");
    cmd_synth->add_option("--docs-per-class", synth_spec.docs_per_class, "documents per class");
    cmd_synth->add_option("--vocab-per-class", synth_spec.vocab_per_class,
                          "private vocabulary size per class");
    cmd_synth->add_option("--shared-vocab", synth_spec.shared_vocab, "shared vocabulary size");
    cmd_synth->add_option("--doc-length", synth_spec.doc_length, "tokens per document");
    cmd_synth->add_option("--noise", synth_spec.noise, "shared-vocabulary token probability");
    cmd_synth->add_option("--seed", cli_seed, "generator seed");
    cmd_synth->add_option("--out", out_path, "output corpus path")->required();

    std::string dump_a, dump_b;
    auto* cmd_eval_nmi = app.add_subcommand("eval-nmi", "NMI between clustering dumps or vs gold");
    cmd_eval_nmi->add_option("--a", dump_a, "clustering dump JSONL")->required();
    cmd_eval_nmi->add_option("--b", dump_b, "second clustering dump");
    cmd_eval_nmi->add_option("--corpus", corpus_path, "corpus JSONL with gold labels");
    cmd_eval_nmi->add_option("--out", out_path, "JSON report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (*cmd_run || *cmd_ablate) {
            idofew::ExperimentConfig cfg = idofew::parse_config(config_path);
            cfg.seed = resolve_seed(cli_seed, &cfg);
            cfg.dump_dir = dump_dir;
            idofew::RunReport report;
            if (*cmd_run) {
                report = idofew::run_idofew(cfg);
            } else {
                report = idofew::run_variant(cfg, idofew::parse_variant(variant_name));
            }
            emit_report(report.to_json(), out_path);
        } else if (*cmd_sweep_clusters) {
            idofew::ExperimentConfig cfg = idofew::parse_config(config_path);
            cfg.seed = resolve_seed(cli_seed, &cfg);
            const auto values = cluster_values.empty() ? cfg.cluster_sweep : cluster_values;
            const auto corpus = idofew::load_corpus(cfg.dataset_path);
            const auto runs = idofew::sweep_clusters(corpus, cfg, values, jobs);
            auto j = sweep_report("sweep-clusters", runs);
            auto summary = ordered_json::array();
            for (std::size_t i = 0; i < values.size(); ++i)
                summary.push_back({{"clusters", values[i]},
                                   {"mean_final_accuracy", runs[i].final_accuracy}});
            j["summary"] = std::move(summary);
            emit_report(j, out_path);
        } else if (*cmd_sweep_labels) {
            idofew::ExperimentConfig cfg = idofew::parse_config(config_path);
            cfg.seed = resolve_seed(cli_seed, &cfg);
            const std::vector<double> budgets =
                budget_values.empty() ? std::vector<double>{64, 0.05, 0.1, 0.2, 0.5}
                                      : budget_values;
            const auto corpus = idofew::load_corpus(cfg.dataset_path);
            const auto runs = idofew::sweep_label_budget(corpus, cfg, budgets, jobs);
            auto j = sweep_report("sweep-labels", runs);
            auto summary = ordered_json::array();
            for (std::size_t i = 0; i < budgets.size(); ++i)
                summary.push_back({{"budget", budgets[i]},
                                   {"n_labels", runs[i].n_labels_used},
                                   {"mean_final_accuracy", runs[i].final_accuracy}});
            j["summary"] = std::move(summary);
            emit_report(j, out_path);
        } else if (*cmd_sweep_fraction) {
            idofew::ExperimentConfig cfg = idofew::parse_config(config_path);
            cfg.seed = resolve_seed(cli_seed, &cfg);
            std::vector<double> values = fraction_values;
            if (values.empty())
                values = fraction_stage == 2 ? cfg.fraction_sweep
                                             : std::vector<double>{1.0, 0.8, 0.7, 0.5};
            const auto corpus = idofew::load_corpus(cfg.dataset_path);
            const auto runs =
                idofew::sweep_fraction(corpus, cfg, fraction_stage, values, jobs);
            auto j = sweep_report("sweep-fraction", runs);
            j["stage"] = fraction_stage;
            auto summary = ordered_json::array();
            for (std::size_t i = 0; i < values.size(); ++i)
                summary.push_back({{"fraction", values[i]},
                                   {"mean_final_accuracy", runs[i].final_accuracy}});
            j["summary"] = std::move(summary);
            emit_report(j, out_path);
        } else if (*cmd_embed_validate) {
            idofew::LoadOptions opts;
            opts.allow_empty = true;
            const auto corpus = idofew::load_corpus(corpus_path, opts);
            idofew::FileEmbeddingProvider provider(embeddings_path, embed_dim);
            std::vector<std::string> missing;
            for (const auto& d : corpus.documents)
                if (!provider.contains(d.id)) missing.push_back(d.id);
            if (!missing.empty()) {
                std::cerr << "error: " << missing.size() << " of " << corpus.size()
                          << " documents have no embedding; first missing: " << missing[0]
                          << "\n";
                return 1;
            }
            std::cout << "ok: " << corpus.size() << " documents covered, dim " << embed_dim
                      << " (" << provider.size() << " vectors in file)\n";
        } else if (*cmd_synth) {
            synth_spec.seed = resolve_seed(cli_seed, nullptr);
            const auto corpus = idofew::generate(synth_spec);
            idofew::save_corpus(corpus, out_path);
            std::cout << "wrote " << corpus.size() << " documents to " << out_path << "\n";
        } else if (*cmd_eval_nmi) {
            if (dump_b.empty() == corpus_path.empty())
                throw idofew::ConfigError("eval-nmi needs exactly one of --b or --corpus");
            const auto a_pairs = load_dump_pairs(dump_a);
            std::vector<std::size_t> a_vals, b_vals;
            if (!dump_b.empty()) {
                const auto b_pairs = load_dump_pairs(dump_b);
                std::unordered_map<std::string, std::size_t> b_map;
                for (const auto& [id, c] : b_pairs) b_map[id] = c;
                if (b_map.size() != b_pairs.size())
                    throw idofew::ValidationError("eval-nmi: duplicate ids in --b");
                for (const auto& [id, c] : a_pairs) {
                    auto it = b_map.find(id);
                    if (it == b_map.end())
                        throw idofew::ValidationError("eval-nmi: id \"" + id +
                                                      "\" missing from --b");
                    a_vals.push_back(c);
                    b_vals.push_back(it->second);
                }
            } else {
                idofew::LoadOptions opts;
                opts.allow_empty = true;
                const auto corpus = idofew::load_corpus(corpus_path, opts);
                std::unordered_map<std::string, std::size_t> gold;
                for (const auto& d : corpus.documents)
                    if (d.gold_label)
                        gold[d.id] = static_cast<std::size_t>(
                            std::lower_bound(corpus.label_set.begin(), corpus.label_set.end(),
                                             *d.gold_label) -
                            corpus.label_set.begin());
                for (const auto& [id, c] : a_pairs) {
                    auto it = gold.find(id);
                    if (it == gold.end()) continue;  // unlabeled documents are skipped
                    a_vals.push_back(c);
                    b_vals.push_back(it->second);
                }
            }
            const double value = idofew::nmi(to_labeling(a_vals), to_labeling(b_vals));
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", value);
            std::cout << buf << "\n";
            if (!out_path.empty()) {
                ordered_json j;
                j["schema_version"] = idofew::kReportSchemaVersion;
                j["artifact_version"] = idofew::kVersion;
                j["nmi"] = value;
                emit_report(j, out_path);
            }
        }
    } catch (const idofew::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

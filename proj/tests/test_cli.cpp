#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "idofew/idofew.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = IDOFEW_CLI_PATH;

struct Sandbox {
    fs::path dir;
    Sandbox() : dir("cli_test_tmp") {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Sandbox() { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args, std::string* out = nullptr) {
    const std::string out_path = "cli_test_stdout.txt";
    const std::string cmd = "\"" + kCli + "\" " + args + " > " + out_path + " 2>&1";
    const int code = std::system(cmd.c_str());
    if (out) {
        std::ifstream in(out_path);
        std::ostringstream os;
        os << in.rdbuf();
        *out = os.str();
    }
    fs::remove(out_path);
    return WEXITSTATUS(code);
}

void write_config(const std::string& path, const std::string& corpus,
                  const std::string& extra = "") {
    std::ofstream cfg(path);
    cfg << "[data]\npath = " << corpus << "\n[embed]\ndim = 96\n[finetune]\nn_labels = 16\n"
        << extra;
}

std::string make_corpus(const Sandbox& sb) {
    const std::string corpus = sb.path("corpus.jsonl");
    REQUIRE(run("synth --classes 4 --docs-per-class 100 --vocab-per-class 40 "
                "--shared-vocab 40 --doc-length 15 --noise 0.2 --seed 1 --out " +
                corpus) == 0);
    return corpus;
}

}  // namespace

TEST_CASE("run writes a report with the resolved config and version") {
    Sandbox sb;
    const auto corpus = make_corpus(sb);
    write_config(sb.path("c.ini"), corpus);
    REQUIRE(run("run --config " + sb.path("c.ini") + " --seed 0 --out " +
                sb.path("r.json")) == 0);

    auto report = nlohmann::json::parse(std::ifstream(sb.path("r.json")));
    REQUIRE(report["schema_version"] == idofew::kReportSchemaVersion);
    REQUIRE(report["artifact_version"] == idofew::kVersion);
    REQUIRE(report["variant"] == "SIB-KMEANS");
    REQUIRE(report["config"]["data"]["path"] == corpus);
    REQUIRE(report["stages"].size() == 2);
    REQUIRE(report["final_accuracy"].get<double>() >= 0.0);
    REQUIRE_FALSE(fs::exists(sb.path("r.json") + ".tmp"));
}

TEST_CASE("usage errors exit 1 with a diagnostic") {
    std::string out;
    REQUIRE(run("run --config nowhere.ini --no-such-flag", &out) == 1);
    REQUIRE(out.find("error") != std::string::npos);

    // Missing config file is a validation failure, not a crash.
    REQUIRE(run("run --config nowhere.ini", &out) != 0);

    // Exactly one command per invocation.
    REQUIRE(run("", &out) == 1);
}

TEST_CASE("config validation failures exit 1") {
    Sandbox sb;
    const auto corpus = make_corpus(sb);
    write_config(sb.path("bad.ini"), corpus, "[stage1]\nclusters = 1\n");
    std::string out;
    REQUIRE(run("run --config " + sb.path("bad.ini"), &out) == 1);
    REQUIRE(out.find("clusters") != std::string::npos);
}

TEST_CASE("ablate requires and honors --variant") {
    Sandbox sb;
    const auto corpus = make_corpus(sb);
    write_config(sb.path("c.ini"), corpus);

    REQUIRE(run("ablate --config " + sb.path("c.ini")) == 1);

    REQUIRE(run("ablate --config " + sb.path("c.ini") +
                " --variant SINGLE-KMEANS --seed 2 --out " + sb.path("a.json")) == 0);
    auto report = nlohmann::json::parse(std::ifstream(sb.path("a.json")));
    REQUIRE(report["variant"] == "SINGLE-KMEANS");
    REQUIRE(report["stages"].size() == 1);

    std::string out;
    REQUIRE(run("ablate --config " + sb.path("c.ini") + " --variant NO-SUCH", &out) == 1);
}

TEST_CASE("sweep-fraction uses the documented default grids") {
    Sandbox sb;
    const auto corpus = make_corpus(sb);
    write_config(sb.path("c.ini"), corpus);

    REQUIRE(run("sweep-fraction --config " + sb.path("c.ini") + " --seed 1 --out " +
                sb.path("s2.json")) == 0);
    auto stage2 = nlohmann::json::parse(std::ifstream(sb.path("s2.json")));
    REQUIRE(stage2["command"] == "sweep-fraction");
    REQUIRE(stage2["stage"] == 2);
    std::vector<double> fr2;
    for (const auto& row : stage2["summary"]) fr2.push_back(row["fraction"].get<double>());
    REQUIRE(fr2 == std::vector<double>{0.05, 0.10, 0.20});

    REQUIRE(run("sweep-fraction --stage 1 --config " + sb.path("c.ini") + " --seed 1 --out " +
                sb.path("s1.json")) == 0);
    auto stage1 = nlohmann::json::parse(std::ifstream(sb.path("s1.json")));
    std::vector<double> fr1;
    for (const auto& row : stage1["summary"]) fr1.push_back(row["fraction"].get<double>());
    REQUIRE(fr1 == std::vector<double>{1.0, 0.8, 0.7, 0.5});
    REQUIRE(stage1["runs"].size() == 4);
}

TEST_CASE("sweep-clusters reports one run per value with parallelism optional") {
    Sandbox sb;
    const auto corpus = make_corpus(sb);
    write_config(sb.path("c.ini"), corpus);

    REQUIRE(run("sweep-clusters --config " + sb.path("c.ini") +
                " --values 4 8 --seed 1 --out " + sb.path("sc1.json")) == 0);
    auto serial = nlohmann::json::parse(std::ifstream(sb.path("sc1.json")));
    REQUIRE(serial["runs"].size() == 2);
    REQUIRE(serial["summary"][0]["clusters"] == 4);

    REQUIRE(run("sweep-clusters --config " + sb.path("c.ini") +
                " --values 4 8 --seed 1 --jobs 2 --out " + sb.path("sc2.json")) == 0);
    auto parallel = nlohmann::json::parse(std::ifstream(sb.path("sc2.json")));
    REQUIRE(parallel["summary"] == serial["summary"]);
}

TEST_CASE("sweep-labels accepts counts and fractions") {
    Sandbox sb;
    const auto corpus = make_corpus(sb);
    write_config(sb.path("c.ini"), corpus);
    REQUIRE(run("sweep-labels --config " + sb.path("c.ini") +
                " --budgets 16 0.5 --seed 1 --out " + sb.path("sl.json")) == 0);
    auto report = nlohmann::json::parse(std::ifstream(sb.path("sl.json")));
    REQUIRE(report["summary"][0]["n_labels"] == 16);
    REQUIRE(report["summary"][1]["n_labels"] == 160);  // half of 320 labeled train docs
}

TEST_CASE("IDOFEW_SEED is the fallback seed") {
    Sandbox sb;
    const auto corpus = make_corpus(sb);
    write_config(sb.path("c.ini"), corpus);

    const std::string base = "run --config " + sb.path("c.ini") + " --out ";
    REQUIRE(std::system(("IDOFEW_SEED=9 \"" + kCli + "\" " + base + sb.path("env.json") +
                         " > /dev/null 2>&1")
                            .c_str()) == 0);
    REQUIRE(run(base + sb.path("flag.json") + " --seed 9") == 0);
    auto from_env = nlohmann::json::parse(std::ifstream(sb.path("env.json")));
    auto from_flag = nlohmann::json::parse(std::ifstream(sb.path("flag.json")));
    REQUIRE(from_env["seed"] == 9);
    REQUIRE(from_env["final_accuracy"] == from_flag["final_accuracy"]);

    // An explicit config seed outranks the environment.
    write_config(sb.path("seeded.ini"), corpus, "seed = 3\n");
    REQUIRE(std::system(("IDOFEW_SEED=9 \"" + kCli + "\" run --config " +
                         sb.path("seeded.ini") + " --out " + sb.path("cfg.json") +
                         " > /dev/null 2>&1")
                            .c_str()) == 0);
    auto from_cfg = nlohmann::json::parse(std::ifstream(sb.path("cfg.json")));
    REQUIRE(from_cfg["seed"] == 3);
}

TEST_CASE("embed-validate checks corpus coverage") {
    Sandbox sb;
    std::ofstream(sb.path("tiny.jsonl"))
        << R"({"id":"a","text":"x"})" << "\n"
        << R"({"id":"b","text":"y"})" << "\n";
    std::ofstream(sb.path("good.jsonl"))
        << R"({"id":"a","vector":[1.0,0.0]})" << "\n"
        << R"({"id":"b","vector":[0.0,1.0]})" << "\n";
    std::ofstream(sb.path("partial.jsonl")) << R"({"id":"a","vector":[1.0,0.0]})" << "\n";

    std::string out;
    REQUIRE(run("embed-validate --corpus " + sb.path("tiny.jsonl") + " --embeddings " +
                sb.path("good.jsonl") + " --dim 2", &out) == 0);
    REQUIRE(out.find("ok") != std::string::npos);

    REQUIRE(run("embed-validate --corpus " + sb.path("tiny.jsonl") + " --embeddings " +
                sb.path("partial.jsonl") + " --dim 2", &out) == 1);
    REQUIRE(out.find("b") != std::string::npos);

    REQUIRE(run("embed-validate --corpus " + sb.path("tiny.jsonl") + " --embeddings " +
                sb.path("good.jsonl") + " --dim 3", &out) == 1);
}

TEST_CASE("eval-nmi scores dumps against gold labels and each other") {
    Sandbox sb;
    std::ofstream(sb.path("corpus.jsonl"))
        << R"({"id":"a","text":"x","label":"p"})" << "\n"
        << R"({"id":"b","text":"y","label":"p"})" << "\n"
        << R"({"id":"c","text":"z","label":"q"})" << "\n"
        << R"({"id":"d","text":"w","label":"q"})" << "\n";
    std::ofstream(sb.path("dump.jsonl"))
        << R"({"doc":"a","cluster":1})" << "\n"
        << R"({"doc":"b","cluster":1})" << "\n"
        << R"({"doc":"c","cluster":0})" << "\n"
        << R"({"doc":"d","cluster":0})" << "\n";

    std::string out;
    REQUIRE(run("eval-nmi --a " + sb.path("dump.jsonl") + " --corpus " +
                sb.path("corpus.jsonl"), &out) == 0);
    REQUIRE(std::stod(out) == 1.0);

    REQUIRE(run("eval-nmi --a " + sb.path("dump.jsonl") + " --b " + sb.path("dump.jsonl") +
                " --out " + sb.path("nmi.json"), &out) == 0);
    auto j = nlohmann::json::parse(std::ifstream(sb.path("nmi.json")));
    REQUIRE(j["nmi"] == 1.0);

    REQUIRE(run("eval-nmi --a " + sb.path("dump.jsonl"), &out) == 1);
    REQUIRE(run("eval-nmi --a " + sb.path("dump.jsonl") + " --b " + sb.path("dump.jsonl") +
                " --corpus " + sb.path("corpus.jsonl"), &out) == 1);
}

TEST_CASE("dump-dir produces clustering and trace files") {
    Sandbox sb;
    const auto corpus = make_corpus(sb);
    write_config(sb.path("c.ini"), corpus);
    REQUIRE(run("run --config " + sb.path("c.ini") + " --seed 0 --dump-dir " +
                sb.path("dumps") + " --out " + sb.path("r.json")) == 0);
    REQUIRE(fs::exists(sb.path("dumps") + "/stage1_clusters.jsonl"));
    REQUIRE(fs::exists(sb.path("dumps") + "/stage1_trace.txt"));
    REQUIRE(fs::exists(sb.path("dumps") + "/stage2_clusters.jsonl"));
    REQUIRE(fs::exists(sb.path("dumps") + "/stage2_trace.txt"));
}

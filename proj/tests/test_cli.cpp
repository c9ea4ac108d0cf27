#include <cstdlib>
#include <fstream>

#include "bgap/corpus.hpp"
#include "doctest.h"
#include "json.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

using bgap::test::TempDir;

namespace {

struct CliResult {
    int exit_code;
    std::string out;
    std::string err;
};

CliResult run_cli(const TempDir& dir, const std::string& args) {
    std::string out_path = dir.file("cli_stdout.txt");
    std::string err_path = dir.file("cli_stderr.txt");
    std::string cmd = std::string(BGAP_CLI_PATH) + " " + args + " > " + out_path + " 2> " +
                      err_path;
    int status = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = WEXITSTATUS(status);
    result.out = bgap::test::read_file(out_path);
    result.err = bgap::test::read_file(err_path);
    return result;
}

void write_corpora(const TempDir& dir) {
    bgap::save_corpus(dir.file("real.jsonl"),
                      bgap::test::sample_population(bgap::test::population_a(), 40, 1, "real"));
    bgap::save_corpus(dir.file("sim.jsonl"),
                      bgap::test::sample_population(bgap::test::population_b(), 40, 2, "sim"));
}

}  // namespace

TEST_CASE("cli measure: happy path writes reports and exits 0") {
    TempDir dir("cli");
    write_corpora(dir);
    CliResult result = run_cli(
        dir, "--seed 3 --out " + dir.file("run") + " measure --real " +
                 dir.file("real.jsonl") + " --sim " + dir.file("sim.jsonl") +
                 " --k 8 --offline");  // global flags also accepted after the subcommand
    CHECK(result.exit_code == 0);
    CHECK(result.err.empty());
    CHECK(result.out.find("KL_fwd=") != std::string::npos);
    CHECK(std::filesystem::exists(dir.file("run/reports.json")));
    CHECK(std::filesystem::exists(dir.file("run/mauve_curve.csv")));
}

TEST_CASE("cli measure: missing required flag exits 1 with a one-line diagnostic") {
    TempDir dir("cli");
    write_corpora(dir);
    CliResult result =
        run_cli(dir, "--out " + dir.file("run") + " measure --sim " + dir.file("sim.jsonl"));
    CHECK(result.exit_code == 1);
    CHECK(result.out.empty());
    CHECK(result.err.find("--real") != std::string::npos);
    CHECK(std::count(result.err.begin(), result.err.end(), '\n') == 1);
}

TEST_CASE("cli: unknown flags exit 1") {
    TempDir dir("cli");
    CliResult result = run_cli(dir, "measure --real a --sim b --no-such-flag");
    CHECK(result.exit_code == 1);
    CHECK(!result.err.empty());
}

TEST_CASE("cli: identical invocations produce identical outputs") {
    TempDir dir("cli");
    write_corpora(dir);
    std::string args = "measure --real " + dir.file("real.jsonl") + " --sim " +
                       dir.file("sim.jsonl") + " --k 8";
    CliResult a = run_cli(dir, "--offline --seed 9 --out " + dir.file("run_a") + " " + args);
    CliResult b = run_cli(dir, "--offline --seed 9 --out " + dir.file("run_b") + " " + args);
    CHECK(a.exit_code == 0);
    CHECK(b.exit_code == 0);
    CHECK(bgap::test::read_file(dir.file("run_a/reports.json")) ==
          bgap::test::read_file(dir.file("run_b/reports.json")));
}

TEST_CASE("cli pairwise: square CSV with corpus names in the header") {
    TempDir dir("cli");
    write_corpora(dir);
    bgap::save_corpus(dir.file("third.jsonl"),
                      bgap::test::sample_population(bgap::test::population_a(), 40, 3, "third"));
    CliResult result = run_cli(
        dir, "--offline --out " + dir.file("run") + " pairwise --corpora " +
                 dir.file("real.jsonl") + " " + dir.file("sim.jsonl") + " " +
                 dir.file("third.jsonl") + " --k 8");
    CHECK(result.exit_code == 0);
    std::string csv = bgap::test::read_file(dir.file("run/pairwise.csv"));
    CHECK(csv.rfind("simulator,real,sim,third", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 rows
}

TEST_CASE("cli ingest/describe/embed/quantize chain works offline") {
    TempDir dir("cli");
    write_corpora(dir);

    CliResult ingest = run_cli(dir, "--out " + dir.file("ingested") + " ingest --input " +
                                        dir.file("real.jsonl") + " --kind real");
    CHECK(ingest.exit_code == 0);

    CliResult describe =
        run_cli(dir, "--offline --out " + dir.file("real_desc") + " describe --corpus " +
                         dir.file("real.jsonl"));
    CHECK(describe.exit_code == 0);
    CHECK(std::filesystem::exists(dir.file("real_desc/descriptions.jsonl")));

    CliResult embed = run_cli(
        dir, "--offline --out " + dir.file("real_emb") + " embed --corpus " +
                 dir.file("real.jsonl") + " --descriptions " +
                 dir.file("real_desc/descriptions.jsonl"));
    CHECK(embed.exit_code == 0);

    CliResult embed2 = run_cli(
        dir, "--offline --out " + dir.file("sim_emb") + " embed --corpus " +
                 dir.file("sim.jsonl") + " --mode raw_conversation");
    CHECK(embed2.exit_code == 0);

    CliResult quantize = run_cli(
        dir, "--offline --out " + dir.file("q") + " quantize --real " +
                 dir.file("real_emb/embeddings.bgm") + " --sim " +
                 dir.file("sim_emb/embeddings.bgm"));
    // default config uses k=500 > n: validation error, exit 1
    CHECK(quantize.exit_code == 1);

    std::ofstream cfg(dir.file("config.json"));
    cfg << R"({"quantize": {"k": 8, "iters": 50, "restarts": 2}})";
    cfg.close();
    CliResult quantize2 = run_cli(
        dir, "--offline --config " + dir.file("config.json") + " --out " + dir.file("q") +
                 " quantize --real " + dir.file("real_emb/embeddings.bgm") + " --sim " +
                 dir.file("sim_emb/embeddings.bgm"));
    CHECK(quantize2.exit_code == 0);
    CHECK(std::filesystem::exists(dir.file("q/histograms.json")));
}

TEST_CASE("cli probe and report run against pipeline artifacts") {
    TempDir dir("cli");
    write_corpora(dir);
    CliResult measure = run_cli(
        dir, "--offline --seed 5 --out " + dir.file("run") + " measure --real " +
                 dir.file("real.jsonl") + " --sim " + dir.file("sim.jsonl") + " --k 8");
    REQUIRE(measure.exit_code == 0);

    CliResult probe = run_cli(dir, "--out " + dir.file("run") + " probe --real " +
                                       dir.file("run/embeddings_real.bgm") + " --sim " +
                                       dir.file("run/embeddings_sim.bgm") + " --splits 3");
    CHECK(probe.exit_code == 0);
    CHECK(probe.out.find("probe mean accuracy") != std::string::npos);
    {
        // probe results merge into the run's reports.json next to the metric row
        nlohmann::json reports =
            nlohmann::json::parse(std::ifstream(dir.file("run/reports.json")));
        CHECK(reports.contains("probe"));
        CHECK(reports.contains("reports"));
    }

    CliResult report = run_cli(dir, "report --run " + dir.file("run"));
    CHECK(report.exit_code == 0);
    CHECK(report.out.find("KL_fwd") != std::string::npos);

    CliResult interpret = run_cli(
        dir, "interpret --run " + dir.file("run") + " --min-df 2 --top-clusters 10");
    CHECK(interpret.exit_code == 0);
    CHECK(std::filesystem::exists(dir.file("run/terms.json")));
    CHECK(std::filesystem::exists(dir.file("run/clusters.json")));

    CliResult triplets = run_cli(dir, "--seed 7 triplets --run " + dir.file("run") + " --n 10");
    CHECK(triplets.exit_code == 0);
    CHECK(std::filesystem::exists(dir.file("run/triplets.json")));
    CHECK(std::filesystem::exists(dir.file("run/triplet_answers.json")));

    // build a unanimous-correct annotation sheet from the answer key
    nlohmann::json key =
        nlohmann::json::parse(std::ifstream(dir.file("run/triplet_answers.json")));
    std::ofstream ann(dir.file("annotations.csv"));
    ann << "triplet_id,annotator_id,choice\n";
    for (const auto& [tid, info] : key.items())
        for (int a = 0; a < 4; ++a)
            ann << tid << ",annotator" << a << "," << info["answer_index"].get<int>() << "\n";
    ann.close();
    CliResult score = run_cli(dir, "score-annotations --triplets " + dir.file("run/triplets.json") +
                                       " --answers " + dir.file("run/triplet_answers.json") +
                                       " --annotations " + dir.file("annotations.csv"));
    CHECK(score.exit_code == 0);
    CHECK(score.out.find("accuracy 1") != std::string::npos);
}

TEST_CASE("cli simulate generates a mixture corpus with an assignment log") {
    TempDir dir("cli");
    bgap::test::write_file(dir.file("goals.txt"), "sort a list\nwrite a haiku\nfix a typo\n");
    std::ofstream cfg(dir.file("config.json"));
    cfg << R"({"simulators": [{"name": "stub-a", "weight": 0.5},
                              {"name": "stub-b", "weight": 0.5}]})";
    cfg.close();
    CliResult result = run_cli(dir, "--config " + dir.file("config.json") + " --seed 4 --out " +
                                        dir.file("gen") + " simulate --goals " +
                                        dir.file("goals.txt") + " --max-turns 4");
    CHECK(result.exit_code == 0);
    bgap::Corpus corpus =
        bgap::load_corpus(dir.file("gen/corpus.jsonl"), bgap::Corpus::Kind::simulated);
    CHECK(corpus.conversations.size() == 3);
    for (const auto& conv : corpus.conversations) {
        CHECK(conv.turns.front().role == bgap::Role::user);
        CHECK(!conv.goal.empty());
    }
    CHECK(std::filesystem::exists(dir.file("gen/assignments.jsonl")));
}

TEST_CASE("cli report renders one row per run, tagged by facet subset") {
    TempDir dir("cli");
    write_corpora(dir);
    for (const char* facet : {"damsl", "sgd"}) {
        CliResult r = run_cli(dir, "--offline --seed 2 --out " + dir.file(facet) +
                                       " measure --real " + dir.file("real.jsonl") + " --sim " +
                                       dir.file("sim.jsonl") + " --k 8 --facets " + facet);
        REQUIRE(r.exit_code == 0);
    }
    CliResult report =
        run_cli(dir, "report --run " + dir.file("damsl") + " --run " + dir.file("sgd"));
    CHECK(report.exit_code == 0);
    CHECK(report.out.find("[damsl]") != std::string::npos);
    CHECK(report.out.find("[sgd]") != std::string::npos);
}

TEST_CASE("cli ablate computes the correlation matrix from a results file") {
    TempDir dir("cli");
    nlohmann::json results;
    for (const char* variant : {"va", "vb"})
        for (const char* ds : {"coding", "writing"})
            for (int s = 0; s < 6; ++s)
                results[variant][ds]["sim" + std::to_string(s)] = {
                    {"js", 0.1 * s + (variant[1] == 'b' ? 0.01 : 0.0)}};
    std::ofstream(dir.file("results.json")) << results.dump();

    CliResult result =
        run_cli(dir, "ablate --results " + dir.file("results.json") + " --metric js");
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("va") != std::string::npos);
    CHECK(result.out.find(",1") != std::string::npos);  // perfect rank agreement
}

TEST_CASE("cli exit code 2 for provider failures") {
    TempDir dir("cli");
    write_corpora(dir);
    // http provider with an unreachable host and no cache
    std::ofstream cfg(dir.file("config.json"));
    cfg << R"({"chat_provider": {"base_url": "http://127.0.0.1:1", "model": "m",
               "max_retries": 0, "timeout_seconds": 0.2, "retry_backoff_seconds": 0.01},
               "quantize": {"k": 8, "iters": 10, "restarts": 1}})";
    cfg.close();
    CliResult result = run_cli(
        dir, "--config " + dir.file("config.json") + " --out " + dir.file("run") +
                 " measure --real " + dir.file("real.jsonl") + " --sim " + dir.file("sim.jsonl"));
    CHECK(result.exit_code == 2);
    CHECK(result.err.find("provider error") != std::string::npos);
}

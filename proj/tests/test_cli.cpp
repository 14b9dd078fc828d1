#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "kbvqa/backends.hpp"
#include "kbvqa/decompose.hpp"
#include "kbvqa/fewshot.hpp"
#include "toy_world.hpp"

using namespace kbvqa;
using kbvqa::test::TempDir;
using kbvqa::test::ToyWorld;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args, const std::filesystem::path& scratch) {
    static std::atomic<int> counter{0};
    const int n = counter.fetch_add(1);
    const auto out_path = scratch / ("cli-out-" + std::to_string(n) + ".txt");
    const auto err_path = scratch / ("cli-err-" + std::to_string(n) + ".txt");
    const std::string cmd = std::string(KBVQA_CLI_PATH) + " " + args + " > " + out_path.string() +
                            " 2> " + err_path.string();
    const int status = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = kbvqa::test::slurp(out_path);
    result.err = kbvqa::test::slurp(err_path);
    return result;
}

/// Replay transcript holding the motorcyclist decomposition plus scripted
/// yes/no type-checks for its four sub-questions.
void write_paper_transcript(const std::filesystem::path& path) {
    Transcript t;
    CompletionRequest dec;
    dec.backend_id = "chat";
    dec.prompt = decompose::build_decomposition_prompt("What is in the motorcyclist's mouth?");
    dec.max_tokens = decompose::kDecomposeMaxTokens;
    dec.temperature = 0.0;
    t.put(request_key(dec),
          "\"1. Is the motorcyclist wearing a helmet?\n"
          "2. Is the motorcyclist talking or eating something?\n"
          "3. Is the motorcyclist smoking or chewing gum?\n"
          "4. Can we see inside the motorcyclist's mouth?\"");

    const char* subqs[] = {"Is the motorcyclist wearing a helmet?",
                           "Is the motorcyclist talking or eating something?",
                           "Is the motorcyclist smoking or chewing gum?",
                           "Can we see inside the motorcyclist's mouth?"};
    const char* replies[] = {"Yes.", "Yes.", "No.", "No."};
    for (int i = 0; i < 4; ++i) {
        CompletionRequest tc;
        tc.backend_id = "chat";
        tc.prompt = decompose::build_typecheck_prompt(subqs[i]);
        tc.max_tokens = decompose::kTypecheckMaxTokens;
        tc.temperature = 0.0;
        tc.stop = std::vector<std::string>{"\n"};
        t.put(request_key(tc), replies[i]);
    }
    t.save(path);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("decompose replays the paper transcript into four routed lines") {
    TempDir dir("cli");
    write_paper_transcript(dir.path() / "t.jsonl");
    const auto r = run_cli("decompose --question \"What is in the motorcyclist's mouth?\" "
                           "--replay " + (dir.path() / "t.jsonl").string(),
                           dir.path());
    CHECK(r.exit_code == 0);
    CHECK(r.out ==
          "1. Is the motorcyclist wearing a helmet? [Visual]\n"
          "2. Is the motorcyclist talking or eating something? [Visual]\n"
          "3. Is the motorcyclist smoking or chewing gum? [Knowledge]\n"
          "4. Can we see inside the motorcyclist's mouth? [Knowledge]\n");
}

TEST_CASE("decompose with an empty question is a usage error") {
    TempDir dir("cli");
    const auto r = run_cli("decompose --question \"  \" --mock", dir.path());
    CHECK(r.exit_code == 2);
}

TEST_CASE("decompose prints the fallback sub-question for unparseable replies") {
    TempDir dir("cli");
    // the demo mock answers "unknown" to the split prompt and "yes" to type-checks
    const auto r = run_cli("decompose --question \"Why is the sky blue?\" --mock", dir.path());
    CHECK(r.exit_code == 0);
    CHECK(r.out == "1. Why is the sky blue? [Visual]\n");
}

TEST_CASE("run without --config is a usage error") {
    TempDir dir("cli");
    const auto r = run_cli("run --dataset x.jsonl --out " + (dir.path() / "o").string(), dir.path());
    CHECK(r.exit_code == 2);
}

TEST_CASE("run with --offline and a live backend exits with a config error") {
    TempDir dir("cli");
    const ToyWorld w = kbvqa::test::make_toy_world(dir.path() / "toy", 3, 2);
    kbvqa::test::spit(dir.path() / "live.json", R"({
        "run": {"name": "live-run"},
        "backends": {"answer": {"kind": "live", "base_url": "https://api.example.com/v1",
                                 "model_name": "m", "api_key_env": "KEY"}}
    })");
    const auto r = run_cli("--offline run --config " + (dir.path() / "live.json").string() +
                               " --dataset " + w.dataset_jsonl.string() + " --split val --out " +
                               (dir.path() / "out").string(),
                           dir.path());
    CHECK(r.exit_code == 3);
}

TEST_CASE("run with a preset but no backend source is a config error") {
    TempDir dir("cli");
    const ToyWorld w = kbvqa::test::make_toy_world(dir.path() / "toy", 3, 2);
    const auto r = run_cli("run --config base --dataset " + w.dataset_jsonl.string() +
                               " --split val --out " + (dir.path() / "out").string(),
                           dir.path());
    CHECK(r.exit_code == 3);
}

TEST_CASE("index builds, rebuilds byte-identically, and run refuses a mismatch") {
    TempDir dir("cli");
    const ToyWorld w = kbvqa::test::make_toy_world(dir.path() / "toy", 5, 2);
    const auto r1 = run_cli("index --dataset " + w.dataset_jsonl.string() + " --split train --out " +
                                (dir.path() / "i1.json").string(),
                            dir.path());
    CHECK(r1.exit_code == 0);
    CHECK(r1.out.find("indexed 5 samples") != std::string::npos);
    const auto r2 = run_cli("index --dataset " + w.dataset_jsonl.string() + " --split train --out " +
                                (dir.path() / "i2.json").string(),
                            dir.path());
    CHECK(r2.exit_code == 0);
    CHECK(kbvqa::test::slurp(dir.path() / "i1.json") == kbvqa::test::slurp(dir.path() / "i2.json"));

    // a run over the persisted index matches one that builds it in memory
    const std::string common = " --config base --mock --dataset " + w.dataset_jsonl.string() +
                               " --split val --candidates " + w.candidates_jsonl.string();
    const auto inline_run =
        run_cli("run" + common + " --out " + (dir.path() / "run-inline").string(), dir.path());
    const auto loaded_run = run_cli("run" + common + " --out " + (dir.path() / "run-loaded").string() +
                                        " --index " + (dir.path() / "i1.json").string(),
                                    dir.path());
    CHECK(inline_run.exit_code == 0);
    CHECK(loaded_run.exit_code == 0);
    CHECK(kbvqa::test::slurp(dir.path() / "run-inline" / "records.jsonl") ==
          kbvqa::test::slurp(dir.path() / "run-loaded" / "records.jsonl"));

    // an index built with a different embedder is refused at load
    MockEmbedder other(32, 99);
    fewshot::save_index(fewshot::build_index(w.train, other), dir.path() / "other.json");
    const auto r3 = run_cli("run --config base --mock --dataset " + w.dataset_jsonl.string() +
                                " --split val --out " + (dir.path() / "out").string() +
                                " --index " + (dir.path() / "other.json").string(),
                            dir.path());
    CHECK(r3.exit_code == 3);
}

TEST_CASE("replayed run prints the report and eval reproduces it exactly") {
    TempDir dir("cli");
    const ToyWorld w = kbvqa::test::make_toy_world(dir.path() / "toy", 6, 5);
    kbvqa::test::record_toy_transcript(w, dir.path() / "t.jsonl", dir.path() / "scratch");

    const std::string common = " --dataset " + w.dataset_jsonl.string() + " --split val" +
                               " --replay " + (dir.path() / "t.jsonl").string() + " --ocr-dir " +
                               w.ocr_dir.string() + " --candidates " + w.candidates_jsonl.string();
    const auto run = run_cli("run --config base --out " + (dir.path() / "out").string() + common,
                             dir.path());
    CHECK(run.exit_code == 0);
    CHECK(run.out.find("Models/Accuracy") != std::string::npos);
    CHECK(run.out.find("base") != std::string::npos);
    CHECK(std::filesystem::exists(dir.path() / "out" / "records.jsonl"));
    CHECK(std::filesystem::exists(dir.path() / "out" / "report.txt"));

    // cmd_eval over the run's records reproduces the run's table
    const auto eval_run = run_cli("eval --records " + (dir.path() / "out" / "records.jsonl").string() +
                                      " --dataset " + w.dataset_jsonl.string(),
                                  dir.path());
    CHECK(eval_run.exit_code == 0);
    CHECK(eval_run.out == kbvqa::test::slurp(dir.path() / "out" / "report.txt"));
    CHECK(eval_run.out == run.out);
}

TEST_CASE("eval with an unknown metric is a usage error") {
    TempDir dir("cli");
    const auto r = run_cli("eval --records r.jsonl --dataset d.jsonl --metric sharpness",
                           dir.path());
    CHECK(r.exit_code == 2);
}

TEST_CASE("eval names the offending id when a record has no sample") {
    TempDir dir("cli");
    const ToyWorld w = kbvqa::test::make_toy_world(dir.path() / "toy", 3, 2);
    PredictionRecord ghost;
    ghost.sample_id = "ghost-42";
    ghost.config_name = "base";
    nlohmann::json j = ghost;
    kbvqa::test::spit(dir.path() / "records.jsonl", j.dump() + "\n");
    const auto r = run_cli("eval --records " + (dir.path() / "records.jsonl").string() +
                               " --dataset " + w.dataset_jsonl.string(),
                           dir.path());
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("ghost-42") != std::string::npos);
}

}  // TEST_SUITE

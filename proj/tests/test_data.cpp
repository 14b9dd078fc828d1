#include <doctest.h>

#include "helpers.hpp"
#include "kbvqa/data.hpp"
#include "kbvqa/errors.hpp"

using namespace kbvqa;
using kbvqa::test::Rng;
using kbvqa::test::TempDir;
using kbvqa::test::spit;

TEST_SUITE("data") {

TEST_CASE("canonical loader round trips and validates") {
    TempDir dir("data");
    Rng rng(60);
    std::vector<Sample> samples;
    for (int i = 0; i < 3; ++i) {
        Sample s = kbvqa::test::random_sample(rng, "s" + std::to_string(i));
        if (s.gold_answers.empty()) s.gold_answers = {"x"};
        samples.push_back(s);
    }
    const auto path = dir.path() / "d.jsonl";
    data::save_canonical(samples, path);
    CHECK(data::load_canonical(path) == samples);
}

TEST_CASE("duplicate ids are rejected with the line number") {
    TempDir dir("data");
    const std::string line =
        R"({"id":"dup","image_ref":"i","question":"q?","gold_answers":["a"],"split":"train","dataset":"custom"})";
    spit(dir.path() / "d.jsonl", line + "\n" + line + "\n");
    try {
        data::load_canonical(dir.path() / "d.jsonl");
        FAIL("expected SchemaViolation");
    } catch (const SchemaViolation& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("an empty file loads as an empty list") {
    TempDir dir("data");
    spit(dir.path() / "empty.jsonl", "");
    CHECK(data::load_canonical(dir.path() / "empty.jsonl").empty());
}

TEST_CASE("malformed lines carry their line number") {
    TempDir dir("data");
    spit(dir.path() / "bad.jsonl",
         R"({"id":"a","image_ref":"i","question":"q?","gold_answers":["x"],"split":"train","dataset":"custom"})"
         "\nnot json\n");
    try {
        data::load_canonical(dir.path() / "bad.jsonl");
        FAIL("expected SchemaViolation");
    } catch (const SchemaViolation& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("okvqa adapter joins questions with annotations") {
    TempDir dir("okvqa");
    spit(dir.path() / "questions.json", R"({
        "data_subtype": "val2014",
        "questions": [
            {"question_id": 101, "image_id": 7, "question": "What brand is shown?"},
            {"question_id": 102, "image_id": 8, "question": "What season is it?"}
        ]})");
    std::string answers10;
    for (int i = 0; i < 10; ++i) answers10 += std::string(i ? "," : "") + R"({"answer": "wii"})";
    spit(dir.path() / "annotations.json", R"({
        "data_subtype": "val2014",
        "annotations": [
            {"question_id": 101, "image_id": 7, "answers": [)" + answers10 + R"(]},
            {"question_id": 102, "image_id": 8, "answers": [)" + answers10 + R"(]}
        ]})");
    const auto samples = data::adapt_okvqa(dir.path() / "questions.json",
                                           dir.path() / "annotations.json");
    REQUIRE(samples.size() == 2);
    CHECK(samples[0].id == "101");
    CHECK(samples[0].image_ref == "7");
    CHECK(samples[0].gold_answers.size() == 10);
    CHECK(samples[0].dataset == Dataset::Okvqa);
    CHECK(samples[0].split == Split::Val);
}

TEST_CASE("okvqa adapter rejects the wrong answer cardinality") {
    TempDir dir("okvqa");
    spit(dir.path() / "questions.json", R"({
        "questions": [{"question_id": 1, "image_id": 2, "question": "q?"}]})");
    spit(dir.path() / "annotations.json", R"({
        "annotations": [{"question_id": 1, "answers": [{"answer": "a"}, {"answer": "b"}]}]})");
    CHECK_THROWS_AS(
        data::adapt_okvqa(dir.path() / "questions.json", dir.path() / "annotations.json"),
        AnswerCardinalityViolation);
}

TEST_CASE("okvqa adapter rejects a question without its annotation row") {
    TempDir dir("okvqa");
    spit(dir.path() / "questions.json", R"({
        "questions": [{"question_id": 1, "image_id": 2, "question": "q?"}]})");
    spit(dir.path() / "annotations.json", R"({"annotations": []})");
    CHECK_THROWS_AS(
        data::adapt_okvqa(dir.path() / "questions.json", dir.path() / "annotations.json"),
        SchemaViolation);
}

TEST_CASE("aokvqa adapter requires four choices and keeps direct answers") {
    TempDir dir("aokvqa");
    std::string da;
    for (int i = 0; i < 10; ++i) da += std::string(i ? "," : "") + "\"wii\"";
    spit(dir.path() / "aokvqa_val.json", R"([
        {"question_id": "q1", "image_id": 3, "question": "Which console?",
         "choices": ["xbox", "playstation", "wii", "switch"], "correct_choice_idx": 2,
         "direct_answers": [)" + da + R"(]}
    ])");
    const auto samples = data::adapt_aokvqa(dir.path() / "aokvqa_val.json");
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].mc_choices->size() == 4);
    CHECK(samples[0].mc_correct_index == 2);
    CHECK(samples[0].gold_answers.size() == 10);
    CHECK(samples[0].split == Split::Val);  // inferred from the filename
    CHECK(samples[0].dataset == Dataset::Aokvqa);

    spit(dir.path() / "three.json", R"([
        {"question_id": "q1", "image_id": 3, "question": "Which?",
         "choices": ["a", "b", "c"], "correct_choice_idx": 1, "direct_answers": [)" + da + R"(]}
    ])");
    CHECK_THROWS_AS(data::adapt_aokvqa(dir.path() / "three.json", Split::Val), SchemaViolation);
}

TEST_CASE("krvqa adapter loads flat QA records with variable answers") {
    TempDir dir("krvqa");
    std::string rows = "[";
    for (int i = 0; i < 10; ++i) {
        if (i) rows += ",";
        rows += R"({"question_id": )" + std::to_string(i) + R"(, "image_id": )" +
                std::to_string(100 + i) + R"(, "question": "why )" + std::to_string(i) +
                R"(?", "answer": "because", "split": ")" +
                (i < 6 ? "train" : (i < 8 ? "val" : "test")) + "\"}";
    }
    rows += "]";
    spit(dir.path() / "kr.json", rows);
    const auto samples = data::adapt_krvqa(dir.path() / "kr.json");
    REQUIRE(samples.size() == 10);
    CHECK(samples[0].gold_answers == std::vector<std::string>{"because"});
    CHECK(samples[0].dataset == Dataset::Krvqa);

    // 60/20/20 split ratios at toy scale, checked through the manifests
    std::vector<Sample> train, val, test;
    for (const auto& s : samples) {
        (s.split == Split::Train ? train : s.split == Split::Val ? val : test).push_back(s);
    }
    CHECK(data::make_manifest(train, "kr.json").count == 6);
    CHECK(data::make_manifest(val, "kr.json").count == 2);
    CHECK(data::make_manifest(test, "kr.json").count == 2);

    spit(dir.path() / "empty_q.json",
         R"([{"question_id": 1, "image_id": 2, "question": "  ", "answer": "a"}])");
    CHECK_THROWS_AS(data::adapt_krvqa(dir.path() / "empty_q.json"), SchemaViolation);
}

TEST_CASE("adapters compose with canonical persistence as the identity") {
    TempDir dir("roundtrip");
    std::string da;
    for (int i = 0; i < 10; ++i) da += std::string(i ? "," : "") + "\"cat\"";
    spit(dir.path() / "aokvqa_train.json", R"([
        {"question_id": "t1", "image_id": 9, "question": "Which animal?",
         "choices": ["cat", "dog", "fox", "owl"], "correct_choice_idx": 0,
         "direct_answers": [)" + da + R"(]}
    ])");
    const auto adapted = data::adapt_aokvqa(dir.path() / "aokvqa_train.json");
    data::save_canonical(adapted, dir.path() / "canonical.jsonl");
    CHECK(data::load_canonical(dir.path() / "canonical.jsonl") == adapted);
}

TEST_CASE("manifests reflect answer cardinality and reject mixed batches") {
    Rng rng(61);
    Sample a = kbvqa::test::random_sample(rng, "a");
    a.split = Split::Train;
    a.gold_answers = {"x", "y"};
    Sample b = a;
    b.id = "b";
    const auto manifest = data::make_manifest({a, b}, "p");
    CHECK(manifest.count == 2);
    CHECK(manifest.answer_cardinality == 2);

    Sample c = a;
    c.id = "c";
    c.gold_answers = {"only"};
    CHECK(!data::make_manifest({a, b, c}, "p").answer_cardinality.has_value());

    Sample other_split = a;
    other_split.id = "d";
    other_split.split = Split::Val;
    CHECK_THROWS_AS(data::make_manifest({a, other_split}, "p"), SchemaViolation);
    CHECK_THROWS_AS(data::make_manifest({}, "p"), SchemaViolation);
}

}  // TEST_SUITE

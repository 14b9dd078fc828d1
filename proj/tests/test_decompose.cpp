#include <doctest.h>

#include "helpers.hpp"
#include "kbvqa/decompose.hpp"

using namespace kbvqa;
using kbvqa::test::Rng;

namespace {

// The four-way split block the decomposition model produces for the
// motorcyclist question, as replayed in the fixtures.
const char* kSplitBlock =
    "\"1. Is the motorcyclist wearing a helmet?\n"
    "2. Is the motorcyclist talking or eating something?\n"
    "3. Is the motorcyclist smoking or chewing gum?\n"
    "4. Can we see inside the motorcyclist's mouth?\"";

}  // namespace

TEST_SUITE("decompose") {

TEST_CASE("decomposition prompt matches the golden file") {
    CHECK(decompose::build_decomposition_prompt("What is in the motorcyclist's mouth?") ==
          kbvqa::test::slurp(kbvqa::test::fixture("golden/decomposition_prompt.txt")));
}

TEST_CASE("embedded double quotes are escaped") {
    const std::string prompt = decompose::build_decomposition_prompt("What does \"stop\" mean?");
    CHECK(prompt.find("What does \\\"stop\\\" mean?") != std::string::npos);
}

TEST_CASE("empty question is a caller error") {
    CHECK_THROWS_AS(decompose::build_decomposition_prompt(""), std::invalid_argument);
    CHECK_THROWS_AS(decompose::build_decomposition_prompt("  \t "), std::invalid_argument);
}

TEST_CASE("the four-way split block parses verbatim") {
    const auto subqs = decompose::parse_splits(kSplitBlock, "What is in the motorcyclist's mouth?");
    REQUIRE(subqs.size() == 4);
    CHECK(subqs[0].text == "Is the motorcyclist wearing a helmet?");
    CHECK(subqs[1].text == "Is the motorcyclist talking or eating something?");
    CHECK(subqs[2].text == "Is the motorcyclist smoking or chewing gum?");
    CHECK(subqs[3].text == "Can we see inside the motorcyclist's mouth?");
    for (size_t i = 0; i < subqs.size(); ++i) {
        CHECK(subqs[i].index == static_cast<int>(i) + 1);
        CHECK(subqs[i].modality == Modality::Unclassified);
    }
}

TEST_CASE("output without numbered lines falls back to the original question") {
    const auto subqs = decompose::parse_splits("no splits needed", "Why is the sky blue?");
    REQUIRE(subqs.size() == 1);
    CHECK(subqs[0].index == 1);
    CHECK(subqs[0].text == "Why is the sky blue?");
}

TEST_CASE("twelve numbered lines are capped at eight and re-indexed") {
    std::string block;
    for (int i = 1; i <= 12; ++i) block += std::to_string(i) + ". question " + std::to_string(i) + "?\n";
    const auto subqs = decompose::parse_splits(block, "original?");
    REQUIRE(subqs.size() == 8);
    for (int i = 0; i < 8; ++i) {
        CHECK(subqs[static_cast<size_t>(i)].index == i + 1);
        CHECK(subqs[static_cast<size_t>(i)].text == "question " + std::to_string(i + 1) + "?");
    }
}

TEST_CASE("gaps in numbering are re-indexed contiguously") {
    const auto subqs = decompose::parse_splits("3. first?\n7. second?", "orig?");
    REQUIRE(subqs.size() == 2);
    CHECK(subqs[0].index == 1);
    CHECK(subqs[0].text == "first?");
    CHECK(subqs[1].index == 2);
    CHECK(subqs[1].text == "second?");
}

TEST_CASE("parse_splits is idempotent on its own rendering") {
    Rng rng(40);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = rng.range(1, 8);
        std::vector<std::string> texts;
        std::string rendering;
        for (int i = 0; i < n; ++i) {
            texts.push_back(rng.sentence(2, 5) + "?");
            rendering += std::to_string(i + 1) + ". " + texts.back() + "\n";
        }
        const auto parsed = decompose::parse_splits(rendering, "orig?");
        REQUIRE(parsed.size() == texts.size());
        for (size_t i = 0; i < texts.size(); ++i) CHECK(parsed[i].text == texts[i]);
    }
}

TEST_CASE("parse_splits returns at least one sub-question for any input") {
    Rng rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        std::string garbage;
        const int len = rng.range(0, 40);
        for (int i = 0; i < len; ++i) garbage.push_back(static_cast<char>(rng.range(32, 126)));
        CHECK(decompose::parse_splits(garbage, "orig?").size() >= 1);
    }
}

TEST_CASE("typecheck prompt matches the golden file and trims its input") {
    CHECK(decompose::build_typecheck_prompt("Is the motorcyclist wearing a helmet?") ==
          kbvqa::test::slurp(kbvqa::test::fixture("golden/typecheck_prompt.txt")));
    CHECK(decompose::build_typecheck_prompt("  Is the motorcyclist wearing a helmet?  ") ==
          decompose::build_typecheck_prompt("Is the motorcyclist wearing a helmet?"));
}

TEST_CASE("two typecheck prompts differ only in the question line") {
    const std::string a = decompose::build_typecheck_prompt("first?");
    const std::string b = decompose::build_typecheck_prompt("second?");
    const size_t qa = a.rfind("\nQuestion: ");
    const size_t qb = b.rfind("\nQuestion: ");
    CHECK(a.substr(0, qa) == b.substr(0, qb));
    CHECK(a.substr(qa) != b.substr(qb));
}

TEST_CASE("modality parsing follows the yes/no routing rule") {
    CHECK(decompose::parse_modality("Yes.") == Modality::Visual);
    CHECK(decompose::parse_modality("no") == Modality::Knowledge);
    CHECK(decompose::parse_modality("NO!") == Modality::Knowledge);
    CHECK(decompose::parse_modality("  yes, definitely") == Modality::Visual);
    CHECK(decompose::parse_modality("It depends") == Modality::Unclassified);
    CHECK(decompose::parse_modality("") == Modality::Unclassified);
}

TEST_CASE("decompose_question drives the backend and parses the reply") {
    MockCompletion llm("chat");
    llm.add_rule(decompose::build_decomposition_prompt("What is in the motorcyclist's mouth?"),
                 kSplitBlock);
    const auto subqs = decompose::decompose_question("What is in the motorcyclist's mouth?", llm);
    CHECK(subqs.size() == 4);
    CHECK(llm.calls() == 1);
}

}  // TEST_SUITE

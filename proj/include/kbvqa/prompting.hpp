#pragma once

#include <array>
#include <string>
#include <vector>

#include "kbvqa/backends.hpp"
#include "kbvqa/core.hpp"

namespace kbvqa::prompting {

inline constexpr const char* kDefaultHeader =
    "Please answer the question according to the above context.";
inline constexpr const char* kOcrLabel = "OCR: ";
inline constexpr const char* kCandidatesLabel = "Candidates: ";

inline constexpr int kAnswerMaxTokens = 16;
inline constexpr int kMcMaxTokens = 8;

/// Deterministic context block: caption line(s), sub-question statements,
/// knowledge statements, OCR line, candidates line — each section omitted
/// when empty. Internally sorted by kind then source_subq, so the result is
/// invariant under permutation of the evidence list.
std::string assemble_context(const std::vector<EvidenceItem>& evidence);

/// Bundles the test block with its exemplars. Exemplar answers must be
/// non-empty (std::invalid_argument otherwise).
PromptBundle build_prompt(const std::string& test_context, const std::string& test_question,
                          std::vector<Exemplar> exemplars, std::string header = kDefaultHeader);

/// The frozen few-shot layout: header, blank line, one
/// "Context/Question/Answer" block per exemplar, then the test block ending
/// in "Answer:" with no trailing space. Identical bundles serialize to
/// identical bytes.
std::string serialize(const PromptBundle& bundle);

/// SHA-256 of serialize(bundle).
std::string prompt_hash(const PromptBundle& bundle);

/// First line, trimmed, one trailing period stripped.
std::string parse_answer(const std::string& raw);

/// Standard VQA answer normalization: lowercase, punctuation classes
/// (apostrophes and colons kept, periods kept only inside numbers), number
/// words zero..ten to digits, articles dropped, whitespace collapsed.
/// Idempotent.
std::string normalize_answer(const std::string& text);

std::string build_mc_prompt(const std::string& question, const std::array<std::string, 4>& choices,
                            const std::string& context);

/// Picks one of the four choices from the LLM reply: earliest A-D label or
/// choice-string occurrence, else the choice with the highest token overlap
/// (ties to the lowest index). Always returns an index in [0,3].
int answer_mc(const std::string& question, const std::array<std::string, 4>& choices,
              const std::string& context, CompletionBackend& llm);

}  // namespace kbvqa::prompting

#pragma once

#include <string>
#include <vector>

#include "kbvqa/backends.hpp"
#include "kbvqa/core.hpp"

namespace kbvqa::decompose {

inline constexpr int kDefaultMaxSubquestions = 8;

// Pinned request parameters for the two decomposition-stage calls.
inline constexpr int kDecomposeMaxTokens = 256;
inline constexpr int kTypecheckMaxTokens = 8;

/// `Split this question into smaller ones.` with the question quoted on the
/// next line; embedded quotes and backslashes are escaped. Byte-frozen in
/// the golden fixtures. Throws std::invalid_argument on an empty question.
std::string build_decomposition_prompt(const std::string& question);

/// Extracts `N. text` lines (optionally wrapped in quotes), strips numbering
/// and surrounding quotes, re-indexes contiguously from 1, and caps the list.
/// Never returns an empty list: unparseable output falls back to the
/// original question as the single sub-question.
std::vector<SubQuestion> parse_splits(const std::string& llm_output, const std::string& original,
                                      int max_subquestions = kDefaultMaxSubquestions);

/// Yes/no external-information check for one sub-question. Byte-frozen.
std::string build_typecheck_prompt(const std::string& subq);

/// First token "yes" -> Visual, "no" -> Knowledge, anything else
/// Unclassified (the pipeline resolves Unclassified per its config).
Modality parse_modality(const std::string& llm_output);

/// Prompt + complete + parse in one step, temperature 0.
std::vector<SubQuestion> decompose_question(const std::string& question, CompletionBackend& llm,
                                            int max_subquestions = kDefaultMaxSubquestions);
Modality classify_modality(const std::string& subq, CompletionBackend& llm);

}  // namespace kbvqa::decompose

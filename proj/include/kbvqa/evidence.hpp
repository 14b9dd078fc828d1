#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kbvqa/backends.hpp"
#include "kbvqa/core.hpp"

namespace kbvqa::evidence {

inline constexpr int kRephraseMaxTokens = 64;
inline constexpr int kKnowledgeMaxTokens = 128;
inline constexpr int kMaxCandidates = 10;

/// Question-conditioned caption for a Visual sub-question, optionally piped
/// through rephrase_to_statement for short-answer captioners. Returns
/// nothing (with a logged warning) when the caption comes back empty.
/// Throws std::invalid_argument unless subq.modality == Visual.
std::optional<EvidenceItem> extract_visual(const SubQuestion& subq, const std::string& image_ref,
                                           CaptionBackend& captioner, CompletionBackend& llm,
                                           bool requires_rephrase);

std::string build_rephrase_prompt(const std::string& question, const std::string& answer);

/// Turns a (question, short answer) pair into one declarative sentence via
/// the LLM; an empty reply falls back to "<question> <answer>".
std::string rephrase_to_statement(const std::string& question, const std::string& answer,
                                  CompletionBackend& llm);

std::string build_knowledge_prompt(const std::string& subq);

/// LLM-as-knowledge-base answer for a Knowledge sub-question. Returns
/// nothing when the reply is empty. Throws std::invalid_argument unless
/// subq.modality == Knowledge.
std::optional<EvidenceItem> extract_knowledge(const SubQuestion& subq, CompletionBackend& llm);

/// Parses the reader output format [[4-point box, "text", p], ...].
/// Malformed records (wrong arity, p outside [0,1], box not 4 points) are
/// skipped with a warning; an unparseable document throws MalformedOcrRecord.
std::vector<OcrToken> parse_ocr_output(const std::string& raw);

/// `"text" (p),` rendering with probabilities at 2 decimals and boxes
/// dropped; empty input yields the empty string.
std::string format_ocr_context(const std::vector<OcrToken>& tokens);

/// Candidate answers for one sample from a JSONL file of
/// {"sample_id": ..., "candidates": [{"text": ..., "confidence": ...}]}.
/// Returns the top 10 by confidence (stable on ties); [] when the sample
/// has no row. Throws MalformedCandidateFile on structural problems.
std::vector<CandidateAnswer> load_candidates(const std::filesystem::path& path,
                                             const std::string& sample_id);

/// `<text> (<confidence 2dp>)` comma-joined.
std::string format_candidates(const std::vector<CandidateAnswer>& candidates);

}  // namespace kbvqa::evidence

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace kbvqa {

enum class Split { Train, Val, Test };
enum class Dataset { Okvqa, Aokvqa, Krvqa, Custom };
enum class Modality { Visual, Knowledge, Unclassified };
enum class EvidenceKind {
    QuestionCaption,
    SubQuestionStatement,
    KnowledgeStatement,
    OcrLine,
    CandidateLine,
};

std::string to_string(Split s);
std::string to_string(Dataset d);
std::string to_string(Modality m);
std::string to_string(EvidenceKind k);
Split split_from_string(const std::string& s);
Dataset dataset_from_string(const std::string& s);
Modality modality_from_string(const std::string& s);
EvidenceKind evidence_kind_from_string(const std::string& s);

/// One dataset item. Immutable after construction; image_ref is an opaque
/// string that only backends ever resolve.
struct Sample {
    std::string id;
    std::string image_ref;
    std::string question;
    std::vector<std::string> gold_answers;
    std::optional<std::vector<std::string>> mc_choices;
    std::optional<int> mc_correct_index;
    Split split = Split::Train;
    Dataset dataset = Dataset::Custom;

    bool operator==(const Sample&) const = default;
};

/// Throws SchemaViolation if the sample breaks a core invariant:
/// empty question, mismatched MC fields, or empty gold answers outside
/// a hidden test split.
void validate(const Sample& sample);

std::size_t hash_value(const Sample& sample);

/// A decomposed question. `index` is 1-based and contiguous within one
/// decomposition; `text` carries no leading list numbering.
struct SubQuestion {
    int index = 1;
    std::string text;
    Modality modality = Modality::Unclassified;

    bool operator==(const SubQuestion&) const = default;
};

/// One OCR token: text, confidence in [0,1], and a 4-corner box in pixels.
struct OcrToken {
    std::string text;
    double probability = 0.0;
    std::array<std::array<double, 2>, 4> box{};

    bool operator==(const OcrToken&) const = default;
};

struct CandidateAnswer {
    std::string text;
    double confidence = 0.0;

    bool operator==(const CandidateAnswer&) const = default;
};

/// One unit of gathered context. source_subq is set exactly for the two
/// sub-question-derived kinds.
struct EvidenceItem {
    EvidenceKind kind = EvidenceKind::QuestionCaption;
    std::string text;
    std::optional<int> source_subq;
    std::string backend_id;

    bool operator==(const EvidenceItem&) const = default;
};

/// One in-context example: its context block, question, and gold answer.
struct Exemplar {
    std::string context;
    std::string question;
    std::string answer;

    bool operator==(const Exemplar&) const = default;
};

/// Everything that goes into the final answer prompt. The deterministic
/// text layout lives in prompting::serialize.
struct PromptBundle {
    std::string header;
    std::vector<Exemplar> exemplars;
    std::string test_context;
    std::string test_question;

    bool operator==(const PromptBundle&) const = default;
};

/// Per-sample pipeline output. `prompt` stores the serialized PromptBundle
/// so prompt_hash is recomputable from the record alone; stage_errors
/// records non-fatal backend failures encountered along the way.
struct PredictionRecord {
    std::string sample_id;
    std::string raw_answer;
    std::string normalized_answer;
    std::optional<int> mc_choice_index;
    std::vector<EvidenceItem> evidence;
    std::vector<SubQuestion> sub_questions;
    std::vector<std::string> exemplar_ids;
    std::vector<std::string> stage_errors;
    std::string prompt;
    std::string prompt_hash;
    std::string config_name;
    std::int64_t latency_ms = 0;

    bool operator==(const PredictionRecord&) const = default;
};

// JSON bindings (sorted keys; optional fields omitted when absent).
void to_json(nlohmann::json& j, const Sample& s);
void from_json(const nlohmann::json& j, Sample& s);
void to_json(nlohmann::json& j, const SubQuestion& q);
void from_json(const nlohmann::json& j, SubQuestion& q);
void to_json(nlohmann::json& j, const OcrToken& t);
void from_json(const nlohmann::json& j, OcrToken& t);
void to_json(nlohmann::json& j, const CandidateAnswer& c);
void from_json(const nlohmann::json& j, CandidateAnswer& c);
void to_json(nlohmann::json& j, const EvidenceItem& e);
void from_json(const nlohmann::json& j, EvidenceItem& e);
void to_json(nlohmann::json& j, const Exemplar& e);
void from_json(const nlohmann::json& j, Exemplar& e);
void to_json(nlohmann::json& j, const PromptBundle& b);
void from_json(const nlohmann::json& j, PromptBundle& b);
void to_json(nlohmann::json& j, const PredictionRecord& r);
void from_json(const nlohmann::json& j, PredictionRecord& r);

/// Canonical JSONL line for a Sample (no trailing newline).
std::string to_canonical_line(const Sample& sample);

// Shared string helpers.
std::string trim(std::string_view s);
std::string lowercase(std::string_view s);

}  // namespace kbvqa

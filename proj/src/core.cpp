#include "kbvqa/core.hpp"

#include <cctype>
#include <functional>

#include <nlohmann/json.hpp>

#include "kbvqa/errors.hpp"

namespace kbvqa {

using nlohmann::json;

std::string to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "train";
}

std::string to_string(Dataset d) {
    switch (d) {
        case Dataset::Okvqa: return "okvqa";
        case Dataset::Aokvqa: return "aokvqa";
        case Dataset::Krvqa: return "krvqa";
        case Dataset::Custom: return "custom";
    }
    return "custom";
}

std::string to_string(Modality m) {
    switch (m) {
        case Modality::Visual: return "visual";
        case Modality::Knowledge: return "knowledge";
        case Modality::Unclassified: return "unclassified";
    }
    return "unclassified";
}

std::string to_string(EvidenceKind k) {
    switch (k) {
        case EvidenceKind::QuestionCaption: return "question_caption";
        case EvidenceKind::SubQuestionStatement: return "subquestion_statement";
        case EvidenceKind::KnowledgeStatement: return "knowledge_statement";
        case EvidenceKind::OcrLine: return "ocr_line";
        case EvidenceKind::CandidateLine: return "candidate_line";
    }
    return "question_caption";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    throw SchemaViolation("unknown split '" + s + "'");
}

Dataset dataset_from_string(const std::string& s) {
    if (s == "okvqa") return Dataset::Okvqa;
    if (s == "aokvqa") return Dataset::Aokvqa;
    if (s == "krvqa") return Dataset::Krvqa;
    if (s == "custom") return Dataset::Custom;
    throw SchemaViolation("unknown dataset '" + s + "'");
}

Modality modality_from_string(const std::string& s) {
    if (s == "visual") return Modality::Visual;
    if (s == "knowledge") return Modality::Knowledge;
    if (s == "unclassified") return Modality::Unclassified;
    throw SchemaViolation("unknown modality '" + s + "'");
}

EvidenceKind evidence_kind_from_string(const std::string& s) {
    if (s == "question_caption") return EvidenceKind::QuestionCaption;
    if (s == "subquestion_statement") return EvidenceKind::SubQuestionStatement;
    if (s == "knowledge_statement") return EvidenceKind::KnowledgeStatement;
    if (s == "ocr_line") return EvidenceKind::OcrLine;
    if (s == "candidate_line") return EvidenceKind::CandidateLine;
    throw SchemaViolation("unknown evidence kind '" + s + "'");
}

std::string trim(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

void validate(const Sample& sample) {
    if (sample.id.empty()) throw SchemaViolation("sample id is empty");
    if (trim(sample.question).empty())
        throw SchemaViolation("sample '" + sample.id + "': question is empty");
    if (sample.mc_choices.has_value() != sample.mc_correct_index.has_value())
        throw SchemaViolation("sample '" + sample.id +
                              "': mc_choices and mc_correct_index must be set together");
    if (sample.mc_choices) {
        if (sample.mc_choices->size() != 4)
            throw SchemaViolation("sample '" + sample.id + "': mc_choices must have 4 entries, got " +
                                  std::to_string(sample.mc_choices->size()));
        if (*sample.mc_correct_index < 0 || *sample.mc_correct_index > 3)
            throw SchemaViolation("sample '" + sample.id + "': mc_correct_index out of range");
    }
    if (sample.gold_answers.empty() && sample.split != Split::Test)
        throw SchemaViolation("sample '" + sample.id +
                              "': gold_answers may be empty only on the test split");
}

std::size_t hash_value(const Sample& sample) {
    return std::hash<std::string>{}(to_canonical_line(sample));
}

void to_json(json& j, const Sample& s) {
    j = json{{"id", s.id},
             {"image_ref", s.image_ref},
             {"question", s.question},
             {"gold_answers", s.gold_answers},
             {"split", to_string(s.split)},
             {"dataset", to_string(s.dataset)}};
    if (s.mc_choices) j["mc_choices"] = *s.mc_choices;
    if (s.mc_correct_index) j["mc_correct_index"] = *s.mc_correct_index;
}

void from_json(const json& j, Sample& s) {
    s = Sample{};
    j.at("id").get_to(s.id);
    j.at("image_ref").get_to(s.image_ref);
    j.at("question").get_to(s.question);
    j.at("gold_answers").get_to(s.gold_answers);
    s.split = split_from_string(j.at("split").get<std::string>());
    s.dataset = dataset_from_string(j.at("dataset").get<std::string>());
    if (j.contains("mc_choices") && !j["mc_choices"].is_null())
        s.mc_choices = j["mc_choices"].get<std::vector<std::string>>();
    if (j.contains("mc_correct_index") && !j["mc_correct_index"].is_null())
        s.mc_correct_index = j["mc_correct_index"].get<int>();
}

void to_json(json& j, const SubQuestion& q) {
    j = json{{"index", q.index}, {"text", q.text}, {"modality", to_string(q.modality)}};
}

void from_json(const json& j, SubQuestion& q) {
    j.at("index").get_to(q.index);
    j.at("text").get_to(q.text);
    q.modality = modality_from_string(j.at("modality").get<std::string>());
}

void to_json(json& j, const OcrToken& t) {
    j = json{{"text", t.text}, {"probability", t.probability}, {"box", t.box}};
}

void from_json(const json& j, OcrToken& t) {
    j.at("text").get_to(t.text);
    j.at("probability").get_to(t.probability);
    j.at("box").get_to(t.box);
}

void to_json(json& j, const CandidateAnswer& c) {
    j = json{{"text", c.text}, {"confidence", c.confidence}};
}

void from_json(const json& j, CandidateAnswer& c) {
    j.at("text").get_to(c.text);
    j.at("confidence").get_to(c.confidence);
}

void to_json(json& j, const EvidenceItem& e) {
    j = json{{"kind", to_string(e.kind)}, {"text", e.text}, {"backend_id", e.backend_id}};
    if (e.source_subq) j["source_subq"] = *e.source_subq;
}

void from_json(const json& j, EvidenceItem& e) {
    e = EvidenceItem{};
    e.kind = evidence_kind_from_string(j.at("kind").get<std::string>());
    j.at("text").get_to(e.text);
    j.at("backend_id").get_to(e.backend_id);
    if (j.contains("source_subq") && !j["source_subq"].is_null())
        e.source_subq = j["source_subq"].get<int>();
}

void to_json(json& j, const Exemplar& e) {
    j = json{{"context", e.context}, {"question", e.question}, {"answer", e.answer}};
}

void from_json(const json& j, Exemplar& e) {
    j.at("context").get_to(e.context);
    j.at("question").get_to(e.question);
    j.at("answer").get_to(e.answer);
}

void to_json(json& j, const PromptBundle& b) {
    j = json{{"header", b.header},
             {"exemplars", b.exemplars},
             {"test_context", b.test_context},
             {"test_question", b.test_question}};
}

void from_json(const json& j, PromptBundle& b) {
    j.at("header").get_to(b.header);
    j.at("exemplars").get_to(b.exemplars);
    j.at("test_context").get_to(b.test_context);
    j.at("test_question").get_to(b.test_question);
}

void to_json(json& j, const PredictionRecord& r) {
    j = json{{"sample_id", r.sample_id},
             {"raw_answer", r.raw_answer},
             {"normalized_answer", r.normalized_answer},
             {"evidence", r.evidence},
             {"sub_questions", r.sub_questions},
             {"exemplar_ids", r.exemplar_ids},
             {"stage_errors", r.stage_errors},
             {"prompt", r.prompt},
             {"prompt_hash", r.prompt_hash},
             {"config_name", r.config_name},
             {"latency_ms", r.latency_ms}};
    if (r.mc_choice_index) j["mc_choice_index"] = *r.mc_choice_index;
}

void from_json(const json& j, PredictionRecord& r) {
    r = PredictionRecord{};
    j.at("sample_id").get_to(r.sample_id);
    j.at("raw_answer").get_to(r.raw_answer);
    j.at("normalized_answer").get_to(r.normalized_answer);
    j.at("evidence").get_to(r.evidence);
    j.at("sub_questions").get_to(r.sub_questions);
    j.at("exemplar_ids").get_to(r.exemplar_ids);
    j.at("stage_errors").get_to(r.stage_errors);
    j.at("prompt").get_to(r.prompt);
    j.at("prompt_hash").get_to(r.prompt_hash);
    j.at("config_name").get_to(r.config_name);
    j.at("latency_ms").get_to(r.latency_ms);
    if (j.contains("mc_choice_index") && !j["mc_choice_index"].is_null())
        r.mc_choice_index = j["mc_choice_index"].get<int>();
}

std::string to_canonical_line(const Sample& sample) {
    json j = sample;
    return j.dump();
}

}  // namespace kbvqa

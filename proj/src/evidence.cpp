#include "kbvqa/evidence.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "kbvqa/errors.hpp"
#include "kbvqa/log.hpp"

namespace kbvqa::evidence {

using nlohmann::json;

namespace {

std::string first_line(const std::string& s) {
    const size_t nl = s.find('\n');
    return trim(nl == std::string::npos ? s : s.substr(0, nl));
}

std::string two_decimals(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", x);
    return buf;
}

}  // namespace

std::optional<EvidenceItem> extract_visual(const SubQuestion& subq, const std::string& image_ref,
                                           CaptionBackend& captioner, CompletionBackend& llm,
                                           bool requires_rephrase) {
    if (subq.modality != Modality::Visual)
        throw std::invalid_argument("extract_visual requires a Visual sub-question");
    const std::string cap = captioner.caption(image_ref, subq.text);
    if (trim(cap).empty()) {
        log::warn("empty caption for sub-question " + std::to_string(subq.index) +
                  " (dropped from context)");
        return std::nullopt;
    }
    std::string text = requires_rephrase ? rephrase_to_statement(subq.text, cap, llm) : trim(cap);
    if (text.empty()) return std::nullopt;
    return EvidenceItem{EvidenceKind::SubQuestionStatement, std::move(text), subq.index,
                        captioner.id()};
}

std::string build_rephrase_prompt(const std::string& question, const std::string& answer) {
    return "Rephrase the question and answer into a single statement.\n"
           "The re-phrased statement should summarize the question and answer.\n"
           "The re-phrased statement should not be a question.\n"
           "Question: " +
           trim(question) + "\nAnswer: " + trim(answer) + "\nFull-sentence generated by GPT:";
}

std::string rephrase_to_statement(const std::string& question, const std::string& answer,
                                  CompletionBackend& llm) {
    if (trim(question).empty() || trim(answer).empty())
        throw std::invalid_argument("rephrase_to_statement requires a non-empty question and answer");
    CompletionRequest req;
    req.backend_id = llm.id();
    req.prompt = build_rephrase_prompt(question, answer);
    req.max_tokens = kRephraseMaxTokens;
    req.temperature = 0.0;
    req.stop = std::vector<std::string>{"\n"};
    const std::string reply = first_line(llm.complete(req));
    if (reply.empty()) return trim(question) + " " + trim(answer);
    return reply;
}

std::string build_knowledge_prompt(const std::string& subq) {
    return "Please answer the following question:\nQuestion: " + trim(subq) + "\nAnswer:";
}

std::optional<EvidenceItem> extract_knowledge(const SubQuestion& subq, CompletionBackend& llm) {
    if (subq.modality != Modality::Knowledge)
        throw std::invalid_argument("extract_knowledge requires a Knowledge sub-question");
    CompletionRequest req;
    req.backend_id = llm.id();
    req.prompt = build_knowledge_prompt(subq.text);
    req.max_tokens = kKnowledgeMaxTokens;
    req.temperature = 0.0;
    req.stop = std::vector<std::string>{"\n"};
    std::string answer = first_line(llm.complete(req));
    if (answer.empty()) {
        log::warn("empty knowledge answer for sub-question " + std::to_string(subq.index) +
                  " (dropped from context)");
        return std::nullopt;
    }
    return EvidenceItem{EvidenceKind::KnowledgeStatement, std::move(answer), subq.index, llm.id()};
}

std::vector<OcrToken> parse_ocr_output(const std::string& raw) {
    json doc;
    try {
        doc = json::parse(raw);
    } catch (const json::parse_error& e) {
        throw MalformedOcrRecord("OCR document is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_array()) throw MalformedOcrRecord("OCR document must be a list of records");

    std::vector<OcrToken> tokens;
    tokens.reserve(doc.size());
    size_t index = 0;
    for (const auto& rec : doc) {
        ++index;
        const std::string where = "OCR record " + std::to_string(index);
        if (!rec.is_array() || rec.size() != 3) {
            log::warn(where + ": expected [box, text, p], skipped");
            continue;
        }
        const auto& box_j = rec[0];
        const auto& text_j = rec[1];
        const auto& p_j = rec[2];
        if (!box_j.is_array() || box_j.size() != 4) {
            log::warn(where + ": box must have exactly 4 points, skipped");
            continue;
        }
        if (!text_j.is_string() || !p_j.is_number()) {
            log::warn(where + ": expected string text and numeric probability, skipped");
            continue;
        }
        const double p = p_j.get<double>();
        if (p < 0.0 || p > 1.0) {
            log::warn(where + ": probability " + std::to_string(p) + " outside [0,1], skipped");
            continue;
        }
        OcrToken token;
        token.text = text_j.get<std::string>();
        token.probability = p;
        bool box_ok = true;
        for (size_t i = 0; i < 4; ++i) {
            const auto& pt = box_j[i];
            if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
                box_ok = false;
                break;
            }
            token.box[i] = {pt[0].get<double>(), pt[1].get<double>()};
        }
        if (!box_ok) {
            log::warn(where + ": box points must be numeric pairs, skipped");
            continue;
        }
        tokens.push_back(std::move(token));
    }
    return tokens;
}

std::string format_ocr_context(const std::vector<OcrToken>& tokens) {
    if (tokens.empty()) return "";
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out += ", ";
        out += "\"" + tokens[i].text + "\" (" + two_decimals(tokens[i].probability) + ")";
    }
    out += ",";
    return out;
}

std::vector<CandidateAnswer> load_candidates(const std::filesystem::path& path,
                                             const std::string& sample_id) {
    std::ifstream in(path);
    if (!in) throw MalformedCandidateFile("cannot open candidates file: " + path.string());
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::parse_error& e) {
            throw MalformedCandidateFile("candidates file line " + std::to_string(line_no) + ": " +
                                         e.what());
        }
        if (!row.is_object() || !row.contains("sample_id") || !row.contains("candidates"))
            throw MalformedCandidateFile("candidates file line " + std::to_string(line_no) +
                                         ": expected {sample_id, candidates}");
        if (row["sample_id"].get<std::string>() != sample_id) continue;

        std::vector<CandidateAnswer> out;
        for (const auto& c : row["candidates"]) {
            if (!c.is_object() || !c.contains("text") || !c.contains("confidence") ||
                !c["confidence"].is_number())
                throw MalformedCandidateFile("candidates file line " + std::to_string(line_no) +
                                             ": candidate needs text and numeric confidence");
            const double conf = c["confidence"].get<double>();
            if (conf < 0.0 || conf > 1.0)
                throw MalformedCandidateFile("candidates file line " + std::to_string(line_no) +
                                             ": confidence outside [0,1]");
            out.push_back(CandidateAnswer{c["text"].get<std::string>(), conf});
        }
        // descending by confidence, stable so file order breaks ties
        std::stable_sort(out.begin(), out.end(), [](const CandidateAnswer& a,
                                                    const CandidateAnswer& b) {
            return a.confidence > b.confidence;
        });
        if (out.size() > kMaxCandidates) out.resize(kMaxCandidates);
        return out;
    }
    return {};
}

std::string format_candidates(const std::vector<CandidateAnswer>& candidates) {
    std::string out;
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (i > 0) out += ", ";
        out += candidates[i].text + " (" + two_decimals(candidates[i].confidence) + ")";
    }
    return out;
}

}  // namespace kbvqa::evidence

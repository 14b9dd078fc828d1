#include "kbvqa/decompose.hpp"

#include <cctype>
#include <sstream>

namespace kbvqa::decompose {

namespace {

std::string escape_quotes(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '\\' || c == '"') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

}  // namespace

std::string build_decomposition_prompt(const std::string& question) {
    const std::string q = trim(question);
    if (q.empty()) throw std::invalid_argument("question is empty");
    return "Split this question into smaller ones.\n\"Question\": \"" + escape_quotes(q) +
           "\"\n\"Splits\":";
}

std::vector<SubQuestion> parse_splits(const std::string& llm_output, const std::string& original,
                                      int max_subquestions) {
    if (max_subquestions < 1) max_subquestions = 1;
    std::vector<SubQuestion> out;
    std::istringstream lines(llm_output);
    std::string line;
    while (std::getline(lines, line) && static_cast<int>(out.size()) < max_subquestions) {
        std::string s = trim(line);
        while (!s.empty() && s.front() == '"') s.erase(s.begin());
        s = trim(s);
        // require an integer followed by '.'
        size_t i = 0;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        if (i == 0 || i >= s.size() || s[i] != '.') continue;
        std::string text = trim(s.substr(i + 1));
        while (!text.empty() && text.back() == '"') text.pop_back();
        while (!text.empty() && text.front() == '"') text.erase(text.begin());
        text = trim(text);
        if (text.empty()) continue;
        out.push_back(SubQuestion{static_cast<int>(out.size()) + 1, text,
                                  Modality::Unclassified});
    }
    if (out.empty())
        out.push_back(SubQuestion{1, trim(original), Modality::Unclassified});
    return out;
}

std::string build_typecheck_prompt(const std::string& subq) {
    return "Please answer with yes or no. Do you need external information (e.g. visual, verbal, "
           "contextual, ...) to answer this question?\nQuestion: " +
           trim(subq);
}

Modality parse_modality(const std::string& llm_output) {
    std::string s = lowercase(llm_output);
    for (char& c : s) {
        if (std::ispunct(static_cast<unsigned char>(c))) c = ' ';
    }
    std::istringstream tokens(s);
    std::string first;
    if (!(tokens >> first)) return Modality::Unclassified;
    if (first == "yes") return Modality::Visual;
    if (first == "no") return Modality::Knowledge;
    return Modality::Unclassified;
}

std::vector<SubQuestion> decompose_question(const std::string& question, CompletionBackend& llm,
                                            int max_subquestions) {
    CompletionRequest req;
    req.backend_id = llm.id();
    req.prompt = build_decomposition_prompt(question);
    req.max_tokens = kDecomposeMaxTokens;
    req.temperature = 0.0;
    return parse_splits(llm.complete(req), question, max_subquestions);
}

Modality classify_modality(const std::string& subq, CompletionBackend& llm) {
    CompletionRequest req;
    req.backend_id = llm.id();
    req.prompt = build_typecheck_prompt(subq);
    req.max_tokens = kTypecheckMaxTokens;
    req.temperature = 0.0;
    req.stop = std::vector<std::string>{"\n"};
    return parse_modality(llm.complete(req));
}

}  // namespace kbvqa::decompose

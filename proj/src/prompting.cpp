#include "kbvqa/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "kbvqa/digest.hpp"

namespace kbvqa::prompting {

namespace {

int kind_rank(EvidenceKind k) { return static_cast<int>(k); }

}  // namespace

std::string assemble_context(const std::vector<EvidenceItem>& evidence) {
    std::vector<EvidenceItem> sorted = evidence;
    std::stable_sort(sorted.begin(), sorted.end(), [](const EvidenceItem& a, const EvidenceItem& b) {
        if (kind_rank(a.kind) != kind_rank(b.kind)) return kind_rank(a.kind) < kind_rank(b.kind);
        const int sa = a.source_subq.value_or(0);
        const int sb = b.source_subq.value_or(0);
        if (sa != sb) return sa < sb;
        return a.text < b.text;
    });

    std::vector<std::string> lines;
    lines.reserve(sorted.size());
    for (const EvidenceItem& item : sorted) {
        if (item.text.empty()) continue;
        switch (item.kind) {
            case EvidenceKind::QuestionCaption:
            case EvidenceKind::SubQuestionStatement:
            case EvidenceKind::KnowledgeStatement:
                lines.push_back(item.text);
                break;
            case EvidenceKind::OcrLine:
                lines.push_back(kOcrLabel + item.text);
                break;
            case EvidenceKind::CandidateLine:
                lines.push_back(kCandidatesLabel + item.text);
                break;
        }
    }
    std::string out;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (i > 0) out += "\n";
        out += lines[i];
    }
    return out;
}

PromptBundle build_prompt(const std::string& test_context, const std::string& test_question,
                          std::vector<Exemplar> exemplars, std::string header) {
    for (const Exemplar& ex : exemplars) {
        if (ex.answer.empty())
            throw std::invalid_argument("build_prompt: exemplar answer for question '" +
                                        ex.question + "' is empty");
    }
    PromptBundle bundle;
    bundle.header = std::move(header);
    bundle.exemplars = std::move(exemplars);
    bundle.test_context = test_context;
    bundle.test_question = test_question;
    return bundle;
}

std::string serialize(const PromptBundle& bundle) {
    std::string out = bundle.header + "\n\n";
    for (const Exemplar& ex : bundle.exemplars) {
        out += "Context: " + ex.context + "\nQuestion: " + ex.question + "\nAnswer: " + ex.answer +
               "\n\n";
    }
    out += "Context: " + bundle.test_context + "\nQuestion: " + bundle.test_question + "\nAnswer:";
    return out;
}

std::string prompt_hash(const PromptBundle& bundle) { return sha256_hex(serialize(bundle)); }

std::string parse_answer(const std::string& raw) {
    const size_t nl = raw.find('\n');
    std::string s = trim(nl == std::string::npos ? raw : raw.substr(0, nl));
    if (!s.empty() && s.back() == '.') s.pop_back();
    return trim(s);
}

namespace {

// Punctuation handled by the standard VQA rules; apostrophes and colons are
// deliberately absent, periods are handled separately.
constexpr char kPunct[] = {';', '/', '[', ']', '"', '{', '}', '(', ')', '=',
                           '+', '\\', '_', '-', '>', '<', '@', '`', ',', '?', '!'};

const std::map<std::string, std::string>& number_words() {
    static const std::map<std::string, std::string> m = {
        {"zero", "0"}, {"one", "1"}, {"two", "2"},   {"three", "3"}, {"four", "4"}, {"five", "5"},
        {"six", "6"},  {"seven", "7"}, {"eight", "8"}, {"nine", "9"}, {"ten", "10"},
    };
    return m;
}

bool is_article(const std::string& w) { return w == "a" || w == "an" || w == "the"; }

bool has_comma_between_digits(const std::string& s) {
    for (size_t i = 1; i + 1 < s.size(); ++i) {
        if (s[i] == ',' && std::isdigit(static_cast<unsigned char>(s[i - 1])) &&
            std::isdigit(static_cast<unsigned char>(s[i + 1])))
            return true;
    }
    return false;
}

std::string strip_punctuation(const std::string& input) {
    const bool comma_number = has_comma_between_digits(input);
    std::string out = input;
    for (char p : kPunct) {
        const std::string with_space_after = std::string(1, p) + " ";
        const std::string with_space_before = " " + std::string(1, p);
        const bool remove = comma_number || input.find(with_space_after) != std::string::npos ||
                            input.find(with_space_before) != std::string::npos;
        std::string next;
        next.reserve(out.size());
        for (char c : out) {
            if (c == p) {
                if (!remove) next.push_back(' ');
            } else {
                next.push_back(c);
            }
        }
        out = std::move(next);
    }
    // periods survive only inside numbers (decimal points)
    std::string final_out;
    final_out.reserve(out.size());
    for (size_t i = 0; i < out.size(); ++i) {
        if (out[i] == '.') {
            const bool digit_next =
                i + 1 < out.size() && std::isdigit(static_cast<unsigned char>(out[i + 1]));
            if (!digit_next) continue;
        }
        final_out.push_back(out[i]);
    }
    return final_out;
}

}  // namespace

std::string normalize_answer(const std::string& text) {
    std::string s = text;
    for (char& c : s) {
        if (c == '\n' || c == '\t') c = ' ';
    }
    s = strip_punctuation(trim(s));
    s = lowercase(s);

    std::istringstream words(s);
    std::string word;
    std::vector<std::string> kept;
    while (words >> word) {
        auto it = number_words().find(word);
        if (it != number_words().end()) word = it->second;
        if (is_article(word)) continue;
        kept.push_back(word);
    }
    std::string out;
    for (size_t i = 0; i < kept.size(); ++i) {
        if (i > 0) out += " ";
        out += kept[i];
    }
    return out;
}

std::string build_mc_prompt(const std::string& question, const std::array<std::string, 4>& choices,
                            const std::string& context) {
    std::string out;
    if (!context.empty()) out += context + "\n";
    out += "Question: " + question + "\nChoices:\n";
    static constexpr const char* labels[] = {"A", "B", "C", "D"};
    for (size_t i = 0; i < 4; ++i) out += std::string(labels[i]) + ". " + choices[i] + "\n";
    out += "Answer:";
    return out;
}

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

/// Position of the first standalone a/b/c/d letter, or npos.
std::pair<size_t, int> find_label(const std::string& lower_reply) {
    for (size_t i = 0; i < lower_reply.size(); ++i) {
        const char c = lower_reply[i];
        if (c < 'a' || c > 'd') continue;
        const bool left_ok = i == 0 || !is_word_char(lower_reply[i - 1]);
        const bool right_ok = i + 1 == lower_reply.size() || !is_word_char(lower_reply[i + 1]);
        if (left_ok && right_ok) return {i, c - 'a'};
    }
    return {std::string::npos, -1};
}

std::set<std::string> token_set(const std::string& lower) {
    std::set<std::string> out;
    std::string cur;
    for (char c : lower) {
        if (is_word_char(c)) {
            cur.push_back(c);
        } else if (!cur.empty()) {
            out.insert(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.insert(cur);
    return out;
}

}  // namespace

int answer_mc(const std::string& question, const std::array<std::string, 4>& choices,
              const std::string& context, CompletionBackend& llm) {
    CompletionRequest req;
    req.backend_id = llm.id();
    req.prompt = build_mc_prompt(question, choices, context);
    req.max_tokens = kMcMaxTokens;
    req.temperature = 0.0;
    req.stop = std::vector<std::string>{"\n"};
    const std::string reply = lowercase(trim(llm.complete(req)));

    const auto [label_pos, label_idx] = find_label(reply);
    size_t best_pos = std::string::npos;
    size_t best_len = 0;
    int best_idx = -1;
    for (int i = 0; i < 4; ++i) {
        const std::string needle = lowercase(choices[static_cast<size_t>(i)]);
        if (needle.empty()) continue;
        const size_t pos = reply.find(needle);
        if (pos == std::string::npos) continue;
        if (pos < best_pos || (pos == best_pos && needle.size() > best_len)) {
            best_pos = pos;
            best_len = needle.size();
            best_idx = i;
        }
    }
    // earliest match wins; a choice string beats a label at the same position
    if (best_pos != std::string::npos && (label_pos == std::string::npos || best_pos <= label_pos))
        return best_idx;
    if (label_pos != std::string::npos) return label_idx;

    // fall back to token overlap, ties to the lowest index
    const auto reply_tokens = token_set(reply);
    int best_overlap = -1;
    int best = 0;
    for (int i = 0; i < 4; ++i) {
        const auto choice_tokens = token_set(lowercase(choices[static_cast<size_t>(i)]));
        int overlap = 0;
        for (const auto& t : choice_tokens)
            if (reply_tokens.count(t)) ++overlap;
        if (overlap > best_overlap) {
            best_overlap = overlap;
            best = i;
        }
    }
    return best;
}

}  // namespace kbvqa::prompting

#include "kbvqa/data.hpp"

#include <fstream>
#include <map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "kbvqa/errors.hpp"

namespace kbvqa::data {

using nlohmann::json;

std::vector<Sample> load_canonical(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaViolation("cannot open canonical dataset file: " + path.string());
    std::vector<Sample> samples;
    std::unordered_set<std::string> ids;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        Sample s;
        try {
            s = json::parse(line).get<Sample>();
        } catch (const json::exception& e) {
            throw SchemaViolation(std::string("cannot parse sample: ") + e.what(), line_no);
        }
        try {
            validate(s);
        } catch (const SchemaViolation& e) {
            throw SchemaViolation(e.what(), line_no);
        }
        if (!ids.insert(s.id).second)
            throw SchemaViolation("duplicate sample id '" + s.id + "'", line_no);
        samples.push_back(std::move(s));
    }
    return samples;
}

void save_canonical(const std::vector<Sample>& samples, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw SchemaViolation("cannot write canonical dataset file: " + path.string());
    for (const Sample& s : samples) out << to_canonical_line(s) << "\n";
}

namespace {

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaViolation("cannot open file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw SchemaViolation(path.string() + " is not valid JSON: " + e.what());
    }
    return j;
}

Split split_from_subtype(const std::string& subtype) {
    if (subtype.find("train") != std::string::npos) return Split::Train;
    if (subtype.find("val") != std::string::npos) return Split::Val;
    if (subtype.find("test") != std::string::npos) return Split::Test;
    return Split::Val;
}

std::string id_to_string(const json& j) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_integer()) return std::to_string(j.get<long long>());
    throw SchemaViolation("id field must be a string or integer");
}

}  // namespace

std::vector<Sample> adapt_okvqa(const std::filesystem::path& questions_file,
                                const std::filesystem::path& annotations_file) {
    const json questions_doc = load_json_file(questions_file);
    const json annotations_doc = load_json_file(annotations_file);
    if (!questions_doc.contains("questions"))
        throw SchemaViolation("OKVQA questions file has no 'questions' list");
    if (!annotations_doc.contains("annotations"))
        throw SchemaViolation("OKVQA annotations file has no 'annotations' list");

    const Split split = split_from_subtype(
        questions_doc.value("data_subtype", annotations_doc.value("data_subtype", "val")));

    std::map<std::string, std::vector<std::string>> answers_by_qid;
    for (const auto& ann : annotations_doc["annotations"]) {
        if (!ann.contains("question_id") || !ann.contains("answers"))
            throw SchemaViolation("OKVQA annotation row needs question_id and answers");
        std::vector<std::string> answers;
        for (const auto& a : ann["answers"]) {
            if (a.is_object() && a.contains("answer"))
                answers.push_back(a["answer"].get<std::string>());
            else if (a.is_string())
                answers.push_back(a.get<std::string>());
            else
                throw SchemaViolation("OKVQA answer entry must be an object with 'answer'");
        }
        answers_by_qid[id_to_string(ann["question_id"])] = std::move(answers);
    }

    std::vector<Sample> samples;
    for (const auto& q : questions_doc["questions"]) {
        if (!q.contains("question_id") || !q.contains("image_id") || !q.contains("question"))
            throw SchemaViolation("OKVQA question row needs question_id, image_id, question");
        Sample s;
        s.id = id_to_string(q["question_id"]);
        s.image_ref = id_to_string(q["image_id"]);
        s.question = q["question"].get<std::string>();
        s.split = split;
        s.dataset = Dataset::Okvqa;
        auto it = answers_by_qid.find(s.id);
        if (it == answers_by_qid.end())
            throw SchemaViolation("OKVQA question '" + s.id + "' has no annotation row");
        if (it->second.size() != 10)
            throw AnswerCardinalityViolation("OKVQA sample '" + s.id + "' has " +
                                             std::to_string(it->second.size()) +
                                             " answers, expected 10");
        s.gold_answers = it->second;
        validate(s);
        samples.push_back(std::move(s));
    }
    return samples;
}

std::vector<Sample> adapt_aokvqa(const std::filesystem::path& file,
                                 std::optional<Split> split_hint) {
    const json doc = load_json_file(file);
    if (!doc.is_array()) throw SchemaViolation("A-OKVQA file must be a JSON list of records");

    const Split fallback_split =
        split_hint ? *split_hint : split_from_subtype(file.filename().string());

    std::vector<Sample> samples;
    for (const auto& rec : doc) {
        if (!rec.contains("question_id") || !rec.contains("image_id") || !rec.contains("question"))
            throw SchemaViolation("A-OKVQA record needs question_id, image_id, question");
        Sample s;
        s.id = id_to_string(rec["question_id"]);
        s.image_ref = id_to_string(rec["image_id"]);
        s.question = rec["question"].get<std::string>();
        s.dataset = Dataset::Aokvqa;
        s.split = rec.contains("split") ? split_from_string(rec["split"].get<std::string>())
                                        : fallback_split;
        if (!rec.contains("choices") || !rec.contains("correct_choice_idx"))
            throw SchemaViolation("A-OKVQA record '" + s.id +
                                  "' needs choices and correct_choice_idx");
        auto choices = rec["choices"].get<std::vector<std::string>>();
        if (choices.size() != 4)
            throw SchemaViolation("A-OKVQA record '" + s.id + "' has " +
                                  std::to_string(choices.size()) + " choices, expected 4");
        s.mc_choices = std::move(choices);
        s.mc_correct_index = rec["correct_choice_idx"].get<int>();
        if (rec.contains("direct_answers") && !rec["direct_answers"].is_null())
            s.gold_answers = rec["direct_answers"].get<std::vector<std::string>>();
        validate(s);
        samples.push_back(std::move(s));
    }
    return samples;
}

std::vector<Sample> adapt_krvqa(const std::filesystem::path& file) {
    const json doc = load_json_file(file);
    if (!doc.is_array()) throw SchemaViolation("KRVQA file must be a JSON list of records");

    std::vector<Sample> samples;
    for (const auto& rec : doc) {
        if (!rec.contains("question_id") || !rec.contains("image_id") || !rec.contains("question"))
            throw SchemaViolation("KRVQA record needs question_id, image_id, question");
        Sample s;
        s.id = id_to_string(rec["question_id"]);
        s.image_ref = id_to_string(rec["image_id"]);
        s.question = rec["question"].get<std::string>();
        s.dataset = Dataset::Krvqa;
        s.split = rec.contains("split") ? split_from_string(rec["split"].get<std::string>())
                                        : Split::Train;
        if (rec.contains("answers"))
            s.gold_answers = rec["answers"].get<std::vector<std::string>>();
        else if (rec.contains("answer"))
            s.gold_answers = {rec["answer"].get<std::string>()};
        else
            throw SchemaViolation("KRVQA record '" + s.id + "' needs answer or answers");
        validate(s);
        samples.push_back(std::move(s));
    }
    return samples;
}

DatasetManifest make_manifest(const std::vector<Sample>& samples, const std::string& path) {
    if (samples.empty()) throw SchemaViolation("cannot build a manifest for zero samples");
    DatasetManifest m;
    m.dataset = samples.front().dataset;
    m.split = samples.front().split;
    m.path = path;
    m.count = samples.size();
    m.answer_cardinality = static_cast<int>(samples.front().gold_answers.size());
    for (const Sample& s : samples) {
        if (s.dataset != m.dataset || s.split != m.split)
            throw SchemaViolation("manifest requires a uniform (dataset, split) batch");
        if (m.answer_cardinality &&
            static_cast<int>(s.gold_answers.size()) != *m.answer_cardinality)
            m.answer_cardinality = std::nullopt;  // variable
    }
    return m;
}

}  // namespace kbvqa::data

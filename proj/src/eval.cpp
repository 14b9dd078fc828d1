#include "kbvqa/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "kbvqa/errors.hpp"
#include "kbvqa/prompting.hpp"

namespace kbvqa::eval {

using nlohmann::json;

std::string to_string(Metric m) {
    switch (m) {
        case Metric::VqaSoft: return "vqa_soft";
        case Metric::Top1Exact: return "top1_exact";
        case Metric::Mc: return "mc";
    }
    return "top1_exact";
}

Metric metric_from_string(const std::string& s) {
    if (s == "vqa_soft") return Metric::VqaSoft;
    if (s == "top1_exact") return Metric::Top1Exact;
    if (s == "mc") return Metric::Mc;
    throw ConfigError("unknown metric '" + s + "'");
}

double vqa_soft_accuracy(const std::string& pred, const std::vector<std::string>& golds) {
    if (golds.size() != 10)
        throw CardinalityViolation("vqa_soft_accuracy requires exactly 10 gold answers, got " +
                                   std::to_string(golds.size()));
    const std::string p = prompting::normalize_answer(pred);
    std::array<bool, 10> match{};
    for (size_t i = 0; i < 10; ++i) match[i] = (prompting::normalize_answer(golds[i]) == p);

    double total = 0.0;
    for (size_t excluded = 0; excluded < 10; ++excluded) {
        int matches = 0;
        for (size_t i = 0; i < 10; ++i) {
            if (i == excluded) continue;
            if (match[i]) ++matches;
        }
        total += std::min(matches / 3.0, 1.0);
    }
    return total / 10.0;
}

int top1_exact(const std::string& pred, const std::vector<std::string>& golds) {
    if (golds.empty()) throw std::invalid_argument("top1_exact requires at least one gold answer");
    const std::string p = prompting::normalize_answer(pred);
    for (const std::string& g : golds) {
        if (prompting::normalize_answer(g) == p) return 1;
    }
    return 0;
}

int mc_score(int choice_index, int correct_index) {
    if (choice_index < 0 || choice_index > 3 || correct_index < 0 || correct_index > 3)
        throw std::invalid_argument("mc_score indices must be in [0,3]");
    return choice_index == correct_index ? 1 : 0;
}

namespace {

double score_record(const PredictionRecord& record, const Sample& sample, Metric metric) {
    switch (metric) {
        case Metric::VqaSoft:
            return vqa_soft_accuracy(record.raw_answer, sample.gold_answers);
        case Metric::Top1Exact:
            return top1_exact(record.raw_answer, sample.gold_answers);
        case Metric::Mc: {
            if (!sample.mc_correct_index)
                throw std::invalid_argument("sample '" + sample.id + "' has no MC annotation");
            if (!record.mc_choice_index) return 0.0;  // failed prediction scores 0
            return mc_score(*record.mc_choice_index, *sample.mc_correct_index);
        }
    }
    return 0.0;
}

}  // namespace

std::vector<EvalReport> aggregate(const std::vector<PredictionRecord>& records,
                                  const std::vector<Sample>& samples, Metric metric) {
    if (records.empty()) throw std::invalid_argument("aggregate: reports require n >= 1");

    std::unordered_map<std::string, const Sample*> by_id;
    by_id.reserve(samples.size());
    for (const Sample& s : samples) by_id[s.id] = &s;

    std::map<std::string, std::vector<std::pair<std::string, double>>> per_config;
    std::map<std::string, Dataset> dataset_by_config;
    for (const PredictionRecord& r : records) {
        auto it = by_id.find(r.sample_id);
        if (it == by_id.end()) throw MissingSample(r.sample_id);
        per_config[r.config_name].emplace_back(r.sample_id, score_record(r, *it->second, metric));
        dataset_by_config[r.config_name] = it->second->dataset;
    }

    std::vector<EvalReport> reports;
    for (auto& [config_name, rows] : per_config) {
        std::sort(rows.begin(), rows.end());
        EvalReport report;
        report.config_name = config_name;
        report.dataset = dataset_by_config[config_name];
        report.metric = metric;
        report.n = rows.size();
        double sum = 0.0;
        for (const auto& [id, score] : rows) sum += score;
        report.score = 100.0 * sum / static_cast<double>(rows.size());
        report.per_sample = std::move(rows);
        reports.push_back(std::move(report));
    }
    return reports;
}

std::string render_table(const std::vector<EvalReport>& reports) {
    // columns are (dataset, metric) pairs, rows are config names
    std::vector<std::string> columns;
    std::map<std::string, std::map<std::string, double>> cells;  // config -> column -> score
    for (const EvalReport& r : reports) {
        const std::string column = to_string(r.dataset) + "/" + to_string(r.metric);
        if (std::find(columns.begin(), columns.end(), column) == columns.end())
            columns.push_back(column);
        cells[r.config_name][column] = r.score;
    }
    std::sort(columns.begin(), columns.end());

    constexpr int kNameWidth = 28;
    constexpr int kColWidth = 22;
    char buf[64];
    std::string out;
    std::snprintf(buf, sizeof(buf), "%-*s", kNameWidth, "Models/Accuracy");
    out += buf;
    for (const std::string& c : columns) {
        std::snprintf(buf, sizeof(buf), "%*s", kColWidth, c.c_str());
        out += buf;
    }
    out += "\n";
    for (const auto& [config_name, row] : cells) {
        std::snprintf(buf, sizeof(buf), "%-*s", kNameWidth, config_name.c_str());
        out += buf;
        for (const std::string& c : columns) {
            auto it = row.find(c);
            if (it == row.end()) {
                std::snprintf(buf, sizeof(buf), "%*s", kColWidth, "-");
            } else {
                std::snprintf(buf, sizeof(buf), "%*.2f", kColWidth, it->second);
            }
            out += buf;
        }
        out += "\n";
    }
    return out;
}

json report_to_json(const EvalReport& report) {
    json per_sample = json::array();
    for (const auto& [id, score] : report.per_sample) per_sample.push_back(json::array({id, score}));
    return json{{"config_name", report.config_name},
                {"dataset", kbvqa::to_string(report.dataset)},
                {"metric", to_string(report.metric)},
                {"score", report.score},
                {"n", report.n},
                {"per_sample", per_sample}};
}

EvalReport report_from_json(const json& j) {
    EvalReport r;
    r.config_name = j.at("config_name").get<std::string>();
    r.dataset = dataset_from_string(j.at("dataset").get<std::string>());
    r.metric = metric_from_string(j.at("metric").get<std::string>());
    r.score = j.at("score").get<double>();
    r.n = j.at("n").get<size_t>();
    for (const auto& row : j.at("per_sample"))
        r.per_sample.emplace_back(row.at(0).get<std::string>(), row.at(1).get<double>());
    return r;
}

std::string report_to_jsonl(const std::vector<EvalReport>& reports) {
    std::string out;
    for (const EvalReport& r : reports) {
        for (const auto& [id, score] : r.per_sample) {
            json j{{"config_name", r.config_name},
                   {"metric", to_string(r.metric)},
                   {"sample_id", id},
                   {"score", score}};
            out += j.dump() + "\n";
        }
    }
    return out;
}

}  // namespace kbvqa::eval

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "kbvqa/core.hpp"

namespace kbvqa::eval {

enum class Metric { VqaSoft, Top1Exact, Mc };

std::string to_string(Metric m);
Metric metric_from_string(const std::string& s);

/// Soft VQA accuracy: the mean over the 10 leave-one-out 9-annotation
/// subsets of min(matches/3, 1), matching after normalize_answer. Exact
/// subset enumeration, not the closed form. Throws CardinalityViolation
/// unless exactly 10 golds are given.
double vqa_soft_accuracy(const std::string& pred, const std::vector<std::string>& golds);

/// 1 iff the normalized prediction equals any normalized gold.
int top1_exact(const std::string& pred, const std::vector<std::string>& golds);

/// 1 iff the chosen index equals the correct one; both must be in [0,3].
int mc_score(int choice_index, int correct_index);

struct EvalReport {
    std::string config_name;
    Dataset dataset = Dataset::Custom;
    Metric metric = Metric::Top1Exact;
    double score = 0.0;  // percent, 100 * mean(per_sample)
    size_t n = 0;
    std::vector<std::pair<std::string, double>> per_sample;  // sorted by sample id
};

/// Scores every record against its sample and aggregates one report per
/// config_name present, in config-name order. Records whose sample_id does
/// not resolve raise MissingSample; an empty record list is an error.
std::vector<EvalReport> aggregate(const std::vector<PredictionRecord>& records,
                                  const std::vector<Sample>& samples, Metric metric);

/// Fixed-width table, one row per config and one column per
/// (dataset, metric) pair, mirroring the ablation-table layout.
std::string render_table(const std::vector<EvalReport>& reports);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// Per-sample JSONL lines {"config_name", "metric", "sample_id", "score"}.
std::string report_to_jsonl(const std::vector<EvalReport>& reports);

}  // namespace kbvqa::eval

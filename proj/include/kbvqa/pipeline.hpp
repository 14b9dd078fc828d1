#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "kbvqa/backends.hpp"
#include "kbvqa/core.hpp"
#include "kbvqa/eval.hpp"
#include "kbvqa/fewshot.hpp"
#include "kbvqa/prompting.hpp"

namespace kbvqa::pipeline {

/// One named ablation variant. Presets mirror the ablation-table rows.
struct RunConfig {
    std::string name = "base";
    bool enable_decomposition = false;
    bool enable_ocr = false;
    bool enable_candidates = false;
    std::string captioner_id = "captioner";
    std::string decomposer_llm_id = "chat";
    std::string answer_llm_id = "answer";
    int k_exemplars = fewshot::kDefaultExemplars;
    int max_subquestions = 8;
    bool offline = false;
    std::string header = prompting::kDefaultHeader;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

/// "base", "base+ocr", "+decomp", "+decomp+ocr" (case-insensitive).
/// Throws ConfigError for anything else.
RunConfig preset(const std::string& name);
const std::vector<std::string>& preset_names();
bool is_preset(const std::string& name);

// ---------------------------------------------------------------------------
// Backend wiring
// ---------------------------------------------------------------------------

struct BackendSpec {
    std::string kind = "mock";  // mock | live
    LiveEndpoint endpoint;
    bool requires_rephrase = false;  // captioners that return short answers
    int dim = 64;                    // embedders only
    std::uint64_t seed = 7;          // mock embedders only
};

struct BackendSet {
    std::map<std::string, std::shared_ptr<CompletionBackend>> completions;
    std::map<std::string, std::shared_ptr<CaptionBackend>> captioners;
    std::shared_ptr<EmbeddingBackend> embedder;
    std::map<std::string, bool> rephrase_captioners;
    bool deterministic = true;  // no live backend in the set

    CompletionBackend& completion(const std::string& id) const;
    CaptionBackend& captioner(const std::string& id) const;
    bool requires_rephrase(const std::string& id) const;
};

enum class BackendMode { AsConfigured, Mock, Replay, Record };

/// Builds the three roles the config names plus the embedder. Replay mode
/// substitutes transcript lookups for completions and captions; Record mode
/// wraps every role with an append-only transcript writer. A live backend
/// combined with the offline flag is a hard ConfigError before any stage
/// runs. `cache` (optional) is consulted before any completion/caption call.
BackendSet make_backends(const RunConfig& run, const std::map<std::string, BackendSpec>& specs,
                         BackendMode mode, const std::filesystem::path& transcript_path = {},
                         std::shared_ptr<DiskCache> cache = nullptr);

/// Parsed run configuration file: run parameters, backend specs, data paths.
struct FileConfig {
    RunConfig run;
    std::map<std::string, BackendSpec> backends;
    std::optional<std::filesystem::path> ocr_dir;
    std::optional<std::filesystem::path> candidates;
};

FileConfig load_config_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

struct DataPaths {
    std::optional<std::filesystem::path> ocr_dir;
    std::optional<std::filesystem::path> candidates;
};

struct RunContext {
    RunConfig config;
    BackendSet backends;
    fewshot::ExemplarIndex index;
    std::unordered_map<std::string, Sample> train_by_id;
    DataPaths paths;
};

/// Builds the exemplar index from the training pool and assembles the
/// context a run needs.
RunContext make_run_context(RunConfig config, BackendSet backends,
                            const std::vector<Sample>& train, DataPaths paths = {});

/// Same, but with a prebuilt index (embedder_id is checked against the
/// configured embedder).
RunContext make_run_context(RunConfig config, BackendSet backends, fewshot::ExemplarIndex index,
                            const std::vector<Sample>& train, DataPaths paths = {});

/// Most frequent gold annotation, ties to the lexicographically smallest;
/// empty when the sample has no annotations.
std::string most_frequent_gold(const Sample& sample);

/// Fixed stage order: question caption; optional decomposition, routing and
/// extraction; optional OCR; optional candidates; exemplar selection;
/// context assembly, prompt, completion, parse, normalize (plus an MC call
/// when the sample has choices). Per-stage backend errors are recorded on
/// the record; only a failed final completion produces a FailedPrediction
/// (empty answer, scored 0).
PredictionRecord run_sample(const Sample& sample, const RunContext& ctx);

struct RunResult {
    std::vector<PredictionRecord> records;
    std::vector<eval::EvalReport> reports;
};

/// Metrics used for a split when none is forced: okvqa -> vqa_soft,
/// krvqa/custom -> top1_exact, aokvqa -> vqa_soft and mc side by side.
std::vector<eval::Metric> default_metrics(const std::vector<Sample>& samples);

/// Runs every sample not already persisted under out_dir, with a bounded
/// worker pool; records are appended to records.jsonl in sample-id order as
/// they complete, so an interrupted run resumes where it left off. Writes
/// config.json, records.jsonl, report.json, report.jsonl, report.txt.
RunResult run_split(const std::vector<Sample>& samples, const RunContext& ctx,
                    const std::filesystem::path& out_dir, int workers = 4,
                    std::optional<eval::Metric> metric_override = std::nullopt);

/// Reads a records.jsonl file.
std::vector<PredictionRecord> load_records(const std::filesystem::path& path);

}  // namespace kbvqa::pipeline

#include "kbvqa/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "kbvqa/data.hpp"
#include "kbvqa/decompose.hpp"
#include "kbvqa/digest.hpp"
#include "kbvqa/errors.hpp"
#include "kbvqa/evidence.hpp"
#include "kbvqa/log.hpp"

namespace kbvqa::pipeline {

using nlohmann::json;

void to_json(json& j, const RunConfig& c) {
    j = json{{"name", c.name},
             {"enable_decomposition", c.enable_decomposition},
             {"enable_ocr", c.enable_ocr},
             {"enable_candidates", c.enable_candidates},
             {"captioner_id", c.captioner_id},
             {"decomposer_llm_id", c.decomposer_llm_id},
             {"answer_llm_id", c.answer_llm_id},
             {"k_exemplars", c.k_exemplars},
             {"max_subquestions", c.max_subquestions},
             {"offline", c.offline},
             {"header", c.header}};
}

void from_json(const json& j, RunConfig& c) {
    c = RunConfig{};
    if (j.contains("name")) j.at("name").get_to(c.name);
    if (j.contains("enable_decomposition")) j.at("enable_decomposition").get_to(c.enable_decomposition);
    if (j.contains("enable_ocr")) j.at("enable_ocr").get_to(c.enable_ocr);
    if (j.contains("enable_candidates")) j.at("enable_candidates").get_to(c.enable_candidates);
    if (j.contains("captioner_id")) j.at("captioner_id").get_to(c.captioner_id);
    if (j.contains("decomposer_llm_id")) j.at("decomposer_llm_id").get_to(c.decomposer_llm_id);
    if (j.contains("answer_llm_id")) j.at("answer_llm_id").get_to(c.answer_llm_id);
    if (j.contains("k_exemplars")) j.at("k_exemplars").get_to(c.k_exemplars);
    if (j.contains("max_subquestions")) j.at("max_subquestions").get_to(c.max_subquestions);
    if (j.contains("offline")) j.at("offline").get_to(c.offline);
    if (j.contains("header")) j.at("header").get_to(c.header);
    if (c.k_exemplars < 1) throw ConfigError("k_exemplars must be >= 1");
    if (c.max_subquestions < 1) throw ConfigError("max_subquestions must be >= 1");
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"base", "base+ocr", "+decomp", "+decomp+ocr"};
    return names;
}

bool is_preset(const std::string& name) {
    const std::string n = lowercase(name);
    const auto& names = preset_names();
    return std::find(names.begin(), names.end(), n) != names.end();
}

RunConfig preset(const std::string& name) {
    const std::string n = lowercase(name);
    RunConfig c;
    c.name = n;
    c.enable_candidates = true;  // BASE includes the candidate-answer context
    if (n == "base") {
        return c;
    }
    if (n == "base+ocr") {
        c.enable_ocr = true;
        return c;
    }
    if (n == "+decomp") {
        c.enable_decomposition = true;
        return c;
    }
    if (n == "+decomp+ocr") {
        c.enable_decomposition = true;
        c.enable_ocr = true;
        return c;
    }
    throw ConfigError("unknown preset '" + name + "' (known: base, base+ocr, +decomp, +decomp+ocr)");
}

// ---------------------------------------------------------------------------
// Backend wiring
// ---------------------------------------------------------------------------

CompletionBackend& BackendSet::completion(const std::string& backend_id) const {
    auto it = completions.find(backend_id);
    if (it == completions.end())
        throw ConfigError("no completion backend with id '" + backend_id + "'");
    return *it->second;
}

CaptionBackend& BackendSet::captioner(const std::string& backend_id) const {
    auto it = captioners.find(backend_id);
    if (it == captioners.end())
        throw ConfigError("no caption backend with id '" + backend_id + "'");
    return *it->second;
}

bool BackendSet::requires_rephrase(const std::string& backend_id) const {
    auto it = rephrase_captioners.find(backend_id);
    return it != rephrase_captioners.end() && it->second;
}

namespace {

BackendSpec spec_or_default(const std::map<std::string, BackendSpec>& specs,
                            const std::string& backend_id) {
    auto it = specs.find(backend_id);
    return it == specs.end() ? BackendSpec{} : it->second;
}

/// Demo-grade scripted completion used by Mock mode: sensible yes for
/// type-checks, "unknown" everywhere else.
std::shared_ptr<CompletionBackend> make_demo_completion(const std::string& backend_id) {
    return std::make_shared<MockCompletion>(
        backend_id, std::map<std::string, std::string>{},
        [](const CompletionRequest& req) -> std::string {
            if (req.prompt.rfind("Please answer with yes or no.", 0) == 0) return "yes";
            return "unknown";
        });
}

}  // namespace

BackendSet make_backends(const RunConfig& run, const std::map<std::string, BackendSpec>& specs,
                         BackendMode mode, const std::filesystem::path& transcript_path,
                         std::shared_ptr<DiskCache> cache) {
    const bool offline = run.offline || global_offline();

    std::vector<std::string> completion_ids = {run.decomposer_llm_id, run.answer_llm_id};
    std::sort(completion_ids.begin(), completion_ids.end());
    completion_ids.erase(std::unique(completion_ids.begin(), completion_ids.end()),
                         completion_ids.end());

    // Offline combined with a live backend is a hard error before any stage.
    if (offline && mode != BackendMode::Replay && mode != BackendMode::Mock) {
        std::vector<std::string> ids = completion_ids;
        ids.push_back(run.captioner_id);
        ids.push_back("embedder");
        for (const auto& backend_id : ids) {
            if (spec_or_default(specs, backend_id).kind == "live")
                throw ConfigError("offline mode is set but backend '" + backend_id +
                                  "' is configured as live");
        }
    }

    BackendSet set;
    std::shared_ptr<const Transcript> transcript;
    std::shared_ptr<TranscriptRecorder> recorder;
    if (mode == BackendMode::Replay) {
        transcript = std::make_shared<const Transcript>(Transcript::load(transcript_path));
    } else if (mode == BackendMode::Record) {
        recorder = std::make_shared<TranscriptRecorder>(transcript_path);
    }

    auto build_completion = [&](const std::string& backend_id) -> std::shared_ptr<CompletionBackend> {
        if (mode == BackendMode::Replay)
            return std::make_shared<ReplayCompletion>(backend_id, transcript);
        const BackendSpec spec = spec_or_default(specs, backend_id);
        std::shared_ptr<CompletionBackend> inner;
        if (mode == BackendMode::Mock || spec.kind == "mock") {
            inner = make_demo_completion(backend_id);
        } else if (spec.kind == "live") {
            inner = std::make_shared<LiveCompletion>(backend_id, spec.endpoint);
            set.deterministic = false;
        } else {
            throw ConfigError("backend '" + backend_id + "': unknown kind '" + spec.kind + "'");
        }
        if (cache) inner = std::make_shared<CachedCompletion>(inner, cache);
        if (recorder) inner = std::make_shared<RecordingCompletion>(inner, recorder);
        return inner;
    };

    auto build_captioner = [&](const std::string& backend_id) -> std::shared_ptr<CaptionBackend> {
        if (mode == BackendMode::Replay)
            return std::make_shared<ReplayCaptioner>(backend_id, transcript);
        const BackendSpec spec = spec_or_default(specs, backend_id);
        std::shared_ptr<CaptionBackend> inner;
        if (mode == BackendMode::Mock || spec.kind == "mock") {
            inner = std::make_shared<MockCaptioner>(backend_id);
        } else if (spec.kind == "live") {
            inner = std::make_shared<LiveCaptioner>(backend_id, spec.endpoint);
            set.deterministic = false;
        } else {
            throw ConfigError("backend '" + backend_id + "': unknown kind '" + spec.kind + "'");
        }
        if (cache) inner = std::make_shared<CachedCaptioner>(inner, cache);
        if (recorder) inner = std::make_shared<RecordingCaptioner>(inner, recorder);
        return inner;
    };

    for (const auto& backend_id : completion_ids)
        set.completions[backend_id] = build_completion(backend_id);
    set.captioners[run.captioner_id] = build_captioner(run.captioner_id);
    set.rephrase_captioners[run.captioner_id] =
        spec_or_default(specs, run.captioner_id).requires_rephrase;

    const BackendSpec embed_spec = spec_or_default(specs, "embedder");
    std::shared_ptr<EmbeddingBackend> embedder;
    if (mode == BackendMode::Replay && embed_spec.kind == "live") {
        embedder = std::make_shared<ReplayEmbedder>("embedder", embed_spec.dim, transcript);
    } else if (embed_spec.kind == "live" && mode != BackendMode::Mock) {
        embedder = std::make_shared<LiveEmbedder>("embedder", embed_spec.endpoint, embed_spec.dim);
        set.deterministic = false;
    } else {
        embedder = std::make_shared<MockEmbedder>(embed_spec.dim, embed_spec.seed);
    }
    if (recorder) embedder = std::make_shared<RecordingEmbedder>(embedder, recorder);
    set.embedder = std::move(embedder);
    return set;
}

FileConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
    FileConfig out;
    try {
        if (j.contains("run")) out.run = j["run"].get<RunConfig>();
        if (j.contains("backends")) {
            for (const auto& [backend_id, spec_j] : j["backends"].items()) {
                BackendSpec spec;
                if (spec_j.contains("kind")) spec_j.at("kind").get_to(spec.kind);
                if (spec_j.contains("base_url")) spec_j.at("base_url").get_to(spec.endpoint.base_url);
                if (spec_j.contains("model_name"))
                    spec_j.at("model_name").get_to(spec.endpoint.model_name);
                if (spec_j.contains("api_key_env"))
                    spec_j.at("api_key_env").get_to(spec.endpoint.api_key_env);
                if (spec_j.contains("max_in_flight"))
                    spec_j.at("max_in_flight").get_to(spec.endpoint.max_in_flight);
                if (spec_j.contains("requires_rephrase"))
                    spec_j.at("requires_rephrase").get_to(spec.requires_rephrase);
                if (spec_j.contains("dim")) spec_j.at("dim").get_to(spec.dim);
                if (spec_j.contains("seed")) spec_j.at("seed").get_to(spec.seed);
                if (spec.kind == "live" && spec.endpoint.base_url.empty())
                    throw ConfigError("live backend '" + backend_id + "' needs a base_url");
                out.backends[backend_id] = spec;
            }
        }
        if (j.contains("paths")) {
            const auto& paths = j["paths"];
            if (paths.contains("ocr_dir"))
                out.ocr_dir = std::filesystem::path(paths["ocr_dir"].get<std::string>());
            if (paths.contains("candidates"))
                out.candidates = std::filesystem::path(paths["candidates"].get<std::string>());
        }
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Run context
// ---------------------------------------------------------------------------

RunContext make_run_context(RunConfig config, BackendSet backends,
                            const std::vector<Sample>& train, DataPaths paths) {
    fewshot::ExemplarIndex index = fewshot::build_index(train, *backends.embedder);
    return make_run_context(std::move(config), std::move(backends), std::move(index), train,
                            std::move(paths));
}

RunContext make_run_context(RunConfig config, BackendSet backends, fewshot::ExemplarIndex index,
                            const std::vector<Sample>& train, DataPaths paths) {
    if (index.embedder_id != backends.embedder->id())
        throw ConfigError("exemplar index was built with embedder '" + index.embedder_id +
                          "', configured embedder is '" + backends.embedder->id() + "'");
    RunContext ctx{std::move(config), std::move(backends), std::move(index), {}, std::move(paths)};
    ctx.train_by_id.reserve(train.size());
    for (const Sample& s : train) ctx.train_by_id.emplace(s.id, s);
    return ctx;
}

std::string most_frequent_gold(const Sample& sample) {
    std::map<std::string, int> counts;
    for (const std::string& g : sample.gold_answers) ++counts[g];
    std::string best;
    int best_count = 0;
    for (const auto& [answer, count] : counts) {
        if (count > best_count) {  // map order makes ties lexicographically smallest
            best = answer;
            best_count = count;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Per-sample run
// ---------------------------------------------------------------------------

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void note_stage_error(PredictionRecord& rec, const std::string& stage, const std::exception& e) {
    const std::string msg = stage + ": " + e.what();
    rec.stage_errors.push_back(msg);
    log::warn("sample '" + rec.sample_id + "' " + msg);
}

}  // namespace

PredictionRecord run_sample(const Sample& sample, const RunContext& ctx) {
    const RunConfig& cfg = ctx.config;
    CaptionBackend& captioner = ctx.backends.captioner(cfg.captioner_id);
    CompletionBackend& chat = ctx.backends.completion(cfg.decomposer_llm_id);
    CompletionBackend& answer_llm = ctx.backends.completion(cfg.answer_llm_id);
    const bool rephrase = ctx.backends.requires_rephrase(cfg.captioner_id);

    const auto started = std::chrono::steady_clock::now();
    PredictionRecord rec;
    rec.sample_id = sample.id;
    rec.config_name = cfg.name;

    std::vector<EvidenceItem> collected;

    // (1) question-conditioned caption of the original question
    try {
        const std::string cap = trim(captioner.caption(sample.image_ref, sample.question));
        if (cap.empty()) {
            log::warn("sample '" + sample.id + "': empty question caption (dropped)");
        } else {
            collected.push_back(
                EvidenceItem{EvidenceKind::QuestionCaption, cap, std::nullopt, captioner.id()});
        }
    } catch (const std::exception& e) {
        note_stage_error(rec, "caption", e);
    }

    // (2) decomposition, type-check routing, extraction
    if (cfg.enable_decomposition) {
        try {
            std::vector<SubQuestion> subqs =
                decompose::decompose_question(sample.question, chat, cfg.max_subquestions);
            for (SubQuestion& sq : subqs) {
                const Modality m = decompose::classify_modality(sq.text, chat);
                sq.modality = (m == Modality::Unclassified) ? Modality::Visual : m;
            }
            rec.sub_questions = subqs;
            for (const SubQuestion& sq : subqs) {
                try {
                    std::optional<EvidenceItem> item;
                    if (sq.modality == Modality::Visual) {
                        item = evidence::extract_visual(sq, sample.image_ref, captioner, chat,
                                                        rephrase);
                    } else {
                        item = evidence::extract_knowledge(sq, chat);
                    }
                    if (item) collected.push_back(std::move(*item));
                } catch (const std::exception& e) {
                    note_stage_error(rec, "extract subq " + std::to_string(sq.index), e);
                }
            }
        } catch (const std::exception& e) {
            note_stage_error(rec, "decompose", e);
        }
    }

    // (3) OCR context
    if (cfg.enable_ocr && ctx.paths.ocr_dir) {
        try {
            const auto ocr_path = *ctx.paths.ocr_dir / (sample.id + ".json");
            if (std::filesystem::exists(ocr_path)) {
                const auto tokens = evidence::parse_ocr_output(slurp(ocr_path));
                std::string line = evidence::format_ocr_context(tokens);
                if (!line.empty()) {
                    collected.push_back(
                        EvidenceItem{EvidenceKind::OcrLine, std::move(line), std::nullopt, "ocr"});
                }
            }
        } catch (const std::exception& e) {
            note_stage_error(rec, "ocr", e);
        }
    }

    // (4) candidate answers
    if (cfg.enable_candidates && ctx.paths.candidates) {
        try {
            const auto candidates = evidence::load_candidates(*ctx.paths.candidates, sample.id);
            std::string line = evidence::format_candidates(candidates);
            if (!line.empty()) {
                collected.push_back(EvidenceItem{EvidenceKind::CandidateLine, std::move(line),
                                                 std::nullopt, "candidates"});
            }
        } catch (const std::exception& e) {
            note_stage_error(rec, "candidates", e);
        }
    }

    // (5) exemplar selection and block assembly
    std::vector<Exemplar> exemplars;
    try {
        rec.exemplar_ids =
            fewshot::select_exemplars(sample, ctx.index, *ctx.backends.embedder, cfg.k_exemplars);
        for (const std::string& exemplar_id : rec.exemplar_ids) {
            auto it = ctx.train_by_id.find(exemplar_id);
            if (it == ctx.train_by_id.end()) {
                log::warn("exemplar '" + exemplar_id + "' is in the index but not the train pool");
                continue;
            }
            const Sample& ex = it->second;
            std::string answer = most_frequent_gold(ex);
            if (answer.empty()) {
                log::warn("exemplar '" + exemplar_id + "' has no gold answer, skipped");
                continue;
            }
            std::string context;
            try {
                context = trim(captioner.caption(ex.image_ref, ex.question));
            } catch (const std::exception& e) {
                note_stage_error(rec, "exemplar caption '" + exemplar_id + "'", e);
            }
            exemplars.push_back(Exemplar{std::move(context), ex.question, std::move(answer)});
        }
    } catch (const std::exception& e) {
        note_stage_error(rec, "exemplars", e);
    }

    // (6) final prompt + completion
    rec.evidence = collected;
    const std::string test_context = prompting::assemble_context(collected);
    const PromptBundle bundle =
        prompting::build_prompt(test_context, sample.question, std::move(exemplars), cfg.header);
    rec.prompt = prompting::serialize(bundle);
    rec.prompt_hash = sha256_hex(rec.prompt);

    CompletionRequest req;
    req.backend_id = answer_llm.id();
    req.prompt = rec.prompt;
    req.max_tokens = prompting::kAnswerMaxTokens;
    req.temperature = 0.0;
    req.stop = std::vector<std::string>{"\n"};
    try {
        rec.raw_answer = prompting::parse_answer(answer_llm.complete(req));
        rec.normalized_answer = prompting::normalize_answer(rec.raw_answer);
    } catch (const std::exception& e) {
        // FailedPrediction: empty answer, scored 0 downstream
        note_stage_error(rec, "final completion", e);
        rec.raw_answer.clear();
        rec.normalized_answer.clear();
    }

    if (sample.mc_choices) {
        try {
            std::array<std::string, 4> choices;
            for (size_t i = 0; i < 4; ++i) choices[i] = (*sample.mc_choices)[i];
            rec.mc_choice_index =
                prompting::answer_mc(sample.question, choices, test_context, answer_llm);
        } catch (const std::exception& e) {
            note_stage_error(rec, "mc", e);
        }
    }

    if (ctx.backends.deterministic) {
        rec.latency_ms = 0;
    } else {
        rec.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - started)
                             .count();
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Split runner
// ---------------------------------------------------------------------------

std::vector<PredictionRecord> load_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open records file: " + path.string());
    std::vector<PredictionRecord> records;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            records.push_back(json::parse(line).get<PredictionRecord>());
        } catch (const json::exception& e) {
            throw SchemaViolation(std::string("cannot parse prediction record: ") + e.what(),
                                  line_no);
        }
    }
    return records;
}

std::vector<eval::Metric> default_metrics(const std::vector<Sample>& samples) {
    if (samples.empty()) return {eval::Metric::Top1Exact};
    const Dataset dataset = samples.front().dataset;
    const bool all_ten = std::all_of(samples.begin(), samples.end(),
                                     [](const Sample& s) { return s.gold_answers.size() == 10; });
    const bool all_mc = std::all_of(samples.begin(), samples.end(),
                                    [](const Sample& s) { return s.mc_choices.has_value(); });
    switch (dataset) {
        case Dataset::Okvqa:
            return {eval::Metric::VqaSoft};
        case Dataset::Aokvqa: {
            std::vector<eval::Metric> metrics;
            if (all_ten) metrics.push_back(eval::Metric::VqaSoft);
            if (all_mc) metrics.push_back(eval::Metric::Mc);
            if (metrics.empty()) metrics.push_back(eval::Metric::Top1Exact);
            return metrics;
        }
        case Dataset::Krvqa:
        case Dataset::Custom:
            return {eval::Metric::Top1Exact};
    }
    return {eval::Metric::Top1Exact};
}

RunResult run_split(const std::vector<Sample>& samples, const RunContext& ctx,
                    const std::filesystem::path& out_dir, int workers,
                    std::optional<eval::Metric> metric_override) {
    if (samples.empty()) throw std::invalid_argument("run_split: no samples to run");
    if (workers < 1) workers = 1;
    if (ctx.config.offline) set_global_offline(true);

    std::filesystem::create_directories(out_dir);

    std::vector<Sample> ordered = samples;
    std::sort(ordered.begin(), ordered.end(),
              [](const Sample& a, const Sample& b) { return a.id < b.id; });

    const auto records_path = out_dir / "records.jsonl";
    std::vector<PredictionRecord> existing;
    if (std::filesystem::exists(records_path)) {
        existing = load_records(records_path);
        for (const PredictionRecord& r : existing) {
            if (r.config_name != ctx.config.name)
                throw ConfigError("records.jsonl in " + out_dir.string() +
                                  " belongs to config '" + r.config_name + "', not '" +
                                  ctx.config.name + "'");
        }
    }
    std::unordered_map<std::string, bool> done;
    for (const PredictionRecord& r : existing) done[r.sample_id] = true;

    std::vector<Sample> pending;
    for (const Sample& s : ordered) {
        if (!done.count(s.id)) pending.push_back(s);
    }

    // freeze the config alongside the outputs
    {
        std::ofstream out(out_dir / "config.json", std::ios::trunc);
        out << json(ctx.config).dump(2) << "\n";
    }

    std::vector<std::optional<PredictionRecord>> results(pending.size());
    std::atomic<size_t> next{0};
    std::mutex flush_mutex;
    size_t flushed = 0;
    std::exception_ptr first_error;
    std::mutex error_mutex;

    // store the finished record and append the completed prefix; results may
    // only be touched under flush_mutex (single-writer discipline)
    auto publish = [&](size_t i, PredictionRecord rec) {
        std::lock_guard<std::mutex> lock(flush_mutex);
        results[i] = std::move(rec);
        if (flushed < results.size() && results[flushed].has_value()) {
            std::ofstream out(records_path, std::ios::app);
            while (flushed < results.size() && results[flushed].has_value()) {
                out << json(*results[flushed]).dump() << "\n";
                ++flushed;
            }
        }
    };

    auto worker = [&]() {
        while (true) {
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error) return;
            }
            const size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            try {
                publish(i, run_sample(pending[i], ctx));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int pool = std::min<int>(workers, static_cast<int>(pending.size()));
    if (pool <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<size_t>(pool));
        for (int i = 0; i < pool; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    RunResult result;
    result.records = std::move(existing);
    for (auto& r : results) result.records.push_back(std::move(*r));

    std::vector<eval::Metric> metrics;
    if (metric_override) {
        metrics.push_back(*metric_override);
    } else {
        metrics = default_metrics(ordered);
    }
    for (const eval::Metric metric : metrics) {
        auto reports = eval::aggregate(result.records, samples, metric);
        for (auto& r : reports) result.reports.push_back(std::move(r));
    }

    {
        json report_array = json::array();
        for (const auto& r : result.reports) report_array.push_back(eval::report_to_json(r));
        std::ofstream out(out_dir / "report.json", std::ios::trunc);
        out << report_array.dump(2) << "\n";
    }
    {
        std::ofstream out(out_dir / "report.jsonl", std::ios::trunc);
        out << eval::report_to_jsonl(result.reports);
    }
    {
        std::ofstream out(out_dir / "report.txt", std::ios::trunc);
        out << eval::render_table(result.reports);
    }
    return result;
}

}  // namespace kbvqa::pipeline

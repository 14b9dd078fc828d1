// kbvqa — decomposition-augmented KB-VQA pipeline CLI.
//
// Subcommands: run, decompose, index, eval. Exit codes: 0 success,
// 2 usage error, 3 configuration error, 1 anything else.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kbvqa/backends.hpp"
#include "kbvqa/data.hpp"
#include "kbvqa/decompose.hpp"
#include "kbvqa/errors.hpp"
#include "kbvqa/eval.hpp"
#include "kbvqa/fewshot.hpp"
#include "kbvqa/pipeline.hpp"

namespace fs = std::filesystem;
using namespace kbvqa;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;

struct RunArgs {
    std::string config;
    std::string dataset;
    std::string split = "val";
    std::string out;
    std::string replay;
    bool record = false;
    bool mock = false;
    bool offline = false;
    std::string index_path;
    std::string ocr_dir;
    std::string candidates;
    std::string cache_dir;
    std::string metric;
    int workers = 4;
};

struct DecomposeArgs {
    std::string question;
    std::string replay;
    std::string config;
    bool mock = false;
};

struct IndexArgs {
    std::string dataset;
    std::string split = "train";
    std::string out;
    std::string config;
};

struct EvalArgs {
    std::string records;
    std::string dataset;
    std::string metric;
};

pipeline::FileConfig resolve_config(const std::string& name_or_path) {
    if (pipeline::is_preset(name_or_path)) {
        pipeline::FileConfig fc;
        fc.run = pipeline::preset(name_or_path);
        return fc;
    }
    return pipeline::load_config_file(name_or_path);
}

std::vector<Sample> filter_split(const std::vector<Sample>& samples, Split split) {
    std::vector<Sample> out;
    for (const Sample& s : samples) {
        if (s.split == split) out.push_back(s);
    }
    return out;
}

int cmd_run(const RunArgs& args) {
    pipeline::FileConfig fc = resolve_config(args.config);
    if (args.offline) {
        fc.run.offline = true;
        set_global_offline(true);
    }

    pipeline::BackendMode mode = pipeline::BackendMode::AsConfigured;
    fs::path transcript_path;
    if (!args.replay.empty()) {
        mode = pipeline::BackendMode::Replay;
        transcript_path = args.replay;
    } else if (args.record) {
        mode = pipeline::BackendMode::Record;
        transcript_path = fs::path(args.out) / "transcript.jsonl";
        fs::create_directories(args.out);
    } else if (args.mock) {
        mode = pipeline::BackendMode::Mock;
    } else if (fc.backends.empty()) {
        throw ConfigError(
            "no backends configured: pass --replay <transcript>, --mock, or a config file "
            "with a backends section");
    }

    std::shared_ptr<DiskCache> cache;
    if (!args.cache_dir.empty()) cache = std::make_shared<DiskCache>(args.cache_dir);

    pipeline::BackendSet backends =
        pipeline::make_backends(fc.run, fc.backends, mode, transcript_path, cache);

    const std::vector<Sample> all = data::load_canonical(args.dataset);
    const Split split = split_from_string(args.split);
    const std::vector<Sample> run_samples = filter_split(all, split);
    if (run_samples.empty())
        throw ConfigError("dataset has no samples on split '" + args.split + "'");
    const std::vector<Sample> train = filter_split(all, Split::Train);

    pipeline::DataPaths paths;
    if (!args.ocr_dir.empty())
        paths.ocr_dir = fs::path(args.ocr_dir);
    else
        paths.ocr_dir = fc.ocr_dir;
    if (!args.candidates.empty())
        paths.candidates = fs::path(args.candidates);
    else
        paths.candidates = fc.candidates;

    pipeline::RunContext ctx = [&]() {
        if (!args.index_path.empty()) {
            fewshot::ExemplarIndex index =
                fewshot::load_index(args.index_path, backends.embedder->id());
            return pipeline::make_run_context(fc.run, std::move(backends), std::move(index), train,
                                              paths);
        }
        if (train.empty())
            throw ConfigError(
                "dataset has no train split to build the exemplar index from; pass --index");
        return pipeline::make_run_context(fc.run, std::move(backends), train, paths);
    }();

    std::optional<eval::Metric> metric;
    if (!args.metric.empty()) metric = eval::metric_from_string(args.metric);

    pipeline::RunResult result =
        pipeline::run_split(run_samples, ctx, args.out, args.workers, metric);
    std::cout << eval::render_table(result.reports);
    return 0;
}

int cmd_decompose(const DecomposeArgs& args) {
    if (trim(args.question).empty()) {
        std::cerr << "decompose: --question must be non-empty\n";
        return kExitUsage;
    }
    pipeline::FileConfig fc =
        args.config.empty() ? pipeline::FileConfig{} : resolve_config(args.config);

    pipeline::BackendMode mode;
    fs::path transcript_path;
    if (!args.replay.empty()) {
        mode = pipeline::BackendMode::Replay;
        transcript_path = args.replay;
    } else if (args.mock) {
        mode = pipeline::BackendMode::Mock;
    } else if (!fc.backends.empty()) {
        mode = pipeline::BackendMode::AsConfigured;
    } else {
        std::cerr << "decompose: pass --replay <transcript>, --mock, or --config with backends\n";
        return kExitUsage;
    }

    pipeline::BackendSet backends =
        pipeline::make_backends(fc.run, fc.backends, mode, transcript_path);
    CompletionBackend& chat = backends.completion(fc.run.decomposer_llm_id);

    std::vector<SubQuestion> subqs =
        decompose::decompose_question(args.question, chat, fc.run.max_subquestions);
    for (SubQuestion& sq : subqs) {
        const Modality m = decompose::classify_modality(sq.text, chat);
        sq.modality = (m == Modality::Unclassified) ? Modality::Visual : m;
        std::cout << sq.index << ". " << sq.text << " ["
                  << (sq.modality == Modality::Visual ? "Visual" : "Knowledge") << "]\n";
    }
    return 0;
}

int cmd_index(const IndexArgs& args) {
    pipeline::FileConfig fc =
        args.config.empty() ? pipeline::FileConfig{} : resolve_config(args.config);
    pipeline::BackendSet backends = pipeline::make_backends(
        fc.run, fc.backends,
        fc.backends.empty() ? pipeline::BackendMode::Mock : pipeline::BackendMode::AsConfigured);

    const std::vector<Sample> all = data::load_canonical(args.dataset);
    const std::vector<Sample> pool = filter_split(all, split_from_string(args.split));
    if (pool.empty()) throw ConfigError("dataset has no samples on split '" + args.split + "'");

    fewshot::ExemplarIndex index = fewshot::build_index(pool, *backends.embedder);
    fewshot::save_index(index, args.out);
    std::cout << "indexed " << index.size() << " samples (d=" << index.dimension() << ", embedder "
              << index.embedder_id << ") -> " << args.out << "\n";
    return 0;
}

int cmd_eval(const EvalArgs& args) {
    const std::vector<PredictionRecord> records = pipeline::load_records(args.records);
    if (records.empty()) throw ConfigError("records file has no records");
    const std::vector<Sample> all = data::load_canonical(args.dataset);

    std::unordered_map<std::string, const Sample*> by_id;
    for (const Sample& s : all) by_id[s.id] = &s;
    std::vector<Sample> referenced;
    for (const PredictionRecord& r : records) {
        auto it = by_id.find(r.sample_id);
        if (it == by_id.end()) throw MissingSample(r.sample_id);
        referenced.push_back(*it->second);
    }

    std::vector<eval::Metric> metrics;
    if (!args.metric.empty()) {
        metrics.push_back(eval::metric_from_string(args.metric));
    } else {
        metrics = pipeline::default_metrics(referenced);
    }

    std::vector<eval::EvalReport> reports;
    for (const eval::Metric metric : metrics) {
        for (auto& r : eval::aggregate(records, all, metric)) reports.push_back(std::move(r));
    }
    std::cout << eval::render_table(reports);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decomposition-augmented KB-VQA pipeline"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    bool offline = false;
    app.add_flag("--offline", offline, "refuse any live backend call (global)");

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "run a config over a dataset split");
    run->add_option("--config", run_args.config,
                    "preset name (base, base+ocr, +decomp, +decomp+ocr) or config file path")
        ->required();
    run->add_option("--dataset", run_args.dataset, "canonical JSONL dataset file")->required();
    run->add_option("--split", run_args.split, "train|val|test")->capture_default_str();
    run->add_option("--out", run_args.out, "run directory")->required();
    auto* replay_opt =
        run->add_option("--replay", run_args.replay, "replay transcript (offline, deterministic)");
    run->add_flag("--record", run_args.record, "record a transcript to <out>/transcript.jsonl")
        ->excludes(replay_opt);
    run->add_flag("--mock", run_args.mock, "use scripted demo backends");
    run->add_option("--index", run_args.index_path, "prebuilt exemplar index file");
    run->add_option("--ocr-dir", run_args.ocr_dir, "directory of <sample_id>.json OCR files");
    run->add_option("--candidates", run_args.candidates, "candidate answers JSONL file");
    run->add_option("--cache-dir", run_args.cache_dir, "content-addressed response cache");
    run->add_option("--metric", run_args.metric, "force a metric")
        ->check(CLI::IsMember({"vqa_soft", "top1_exact", "mc"}));
    run->add_option("--workers", run_args.workers, "concurrent samples")->capture_default_str();

    DecomposeArgs dec_args;
    auto* dec = app.add_subcommand("decompose", "decompose and type-check one question");
    dec->add_option("--question", dec_args.question, "the question to decompose")->required();
    dec->add_option("--replay", dec_args.replay, "replay transcript");
    dec->add_option("--config", dec_args.config, "preset or config file for live backends");
    dec->add_flag("--mock", dec_args.mock, "use scripted demo backends");

    IndexArgs idx_args;
    auto* idx = app.add_subcommand("index", "build and persist the exemplar index");
    idx->add_option("--dataset", idx_args.dataset, "canonical JSONL dataset file")->required();
    idx->add_option("--split", idx_args.split, "split to index")->capture_default_str();
    idx->add_option("--out", idx_args.out, "index file to write")->required();
    idx->add_option("--config", idx_args.config, "preset or config file (embedder settings)");

    EvalArgs eval_args;
    auto* ev = app.add_subcommand("eval", "re-score persisted prediction records");
    ev->add_option("--records", eval_args.records, "records.jsonl from a run")->required();
    ev->add_option("--dataset", eval_args.dataset, "canonical JSONL dataset file")->required();
    ev->add_option("--metric", eval_args.metric, "force a metric")
        ->check(CLI::IsMember({"vqa_soft", "top1_exact", "mc"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (offline) set_global_offline(true);
    run_args.offline = offline;

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (dec->parsed()) return cmd_decompose(dec_args);
        if (idx->parsed()) return cmd_index(idx_args);
        if (ev->parsed()) return cmd_eval(eval_args);
        std::cerr << app.help();
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const MissingSample& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SchemaViolation& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kbvqa/core.hpp"

namespace kbvqa::data {

/// Loads canonical JSONL (one Sample object per line). Every sample is
/// validated; duplicate ids and malformed lines raise SchemaViolation with
/// the offending line number. An empty file yields an empty list.
std::vector<Sample> load_canonical(const std::filesystem::path& path);

/// Writes canonical JSONL, one line per sample, in input order.
void save_canonical(const std::vector<Sample>& samples, const std::filesystem::path& path);

/// OKVQA: published questions + annotations JSON pair. Every sample must
/// carry exactly 10 answers (AnswerCardinalityViolation otherwise); a
/// question without its annotation row is a SchemaViolation.
std::vector<Sample> adapt_okvqa(const std::filesystem::path& questions_file,
                                const std::filesystem::path& annotations_file);

/// A-OKVQA: published per-split JSON list. Records must carry 4 choices and
/// a correct index; direct answers are carried when present. The split
/// comes from the record, the hint, or the filename, in that order.
std::vector<Sample> adapt_aokvqa(const std::filesystem::path& file,
                                 std::optional<Split> split_hint = std::nullopt);

/// KRVQA-style flat QA list: {question_id, image_id, question,
/// answer|answers, split?}. Gold answers are variable length.
std::vector<Sample> adapt_krvqa(const std::filesystem::path& file);

struct DatasetManifest {
    Dataset dataset = Dataset::Custom;
    Split split = Split::Train;
    std::string path;
    size_t count = 0;
    std::optional<int> answer_cardinality;  // nullopt = variable
};

/// Manifest for one loaded (dataset, split) batch; samples must be
/// non-empty and uniform in dataset and split.
DatasetManifest make_manifest(const std::vector<Sample>& samples, const std::string& path);

}  // namespace kbvqa::data

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kbvqa/backends.hpp"
#include "kbvqa/core.hpp"

namespace kbvqa::fewshot {

using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kDefaultExemplars = 32;
inline constexpr const char* kFusionRule = "mean_normalized";

/// normalize(image_vec + text_vec); a zero sum falls back to text_vec.
/// Throws DimensionMismatch when the inputs disagree.
Vector fuse(const Vector& image_vec, const Vector& text_vec);

/// Fused unit vectors over a training pool, one row per sample id.
struct ExemplarIndex {
    std::vector<std::string> ids;
    Matrix vectors;          // |ids| x d, rows unit-norm
    std::string fusion_rule = kFusionRule;
    std::string embedder_id;

    size_t size() const { return ids.size(); }
    int dimension() const { return static_cast<int>(vectors.cols()); }
};

/// Embeds and fuses every training sample, in input order. Duplicate sample
/// ids are rejected; samples whose embedding fails with a per-item error
/// (ImageNotFound, ReplayMiss, MalformedResponse) are skipped with a warning.
ExemplarIndex build_index(const std::vector<Sample>& train, EmbeddingBackend& embedder);

/// Cosine similarity of the fused query against every index row (rows and
/// query are unit vectors, so this is one matrix-vector product).
Eigen::VectorXf similarities(const Vector& fused, const ExemplarIndex& index);

/// Top-k ids by cosine similarity against the fused rows, descending, ties
/// broken by ascending sample id; `exclude_id` (if present in the index) is
/// never returned. Throws EmptyIndex on an empty index.
std::vector<std::string> rank_by_similarity(const Vector& fused, const ExemplarIndex& index,
                                            const std::string& exclude_id, int k);

/// Embeds + fuses the test sample and ranks. k defaults to the 32 the
/// answer prompt uses; fewer come back when the pool is smaller.
std::vector<std::string> select_exemplars(const Sample& test, const ExemplarIndex& index,
                                          EmbeddingBackend& embedder, int k = kDefaultExemplars);

/// JSON container {embedder_id, fusion_rule, d, ids, vectors (row-major)}.
/// Saving is byte-deterministic; loading refuses an embedder_id mismatch.
void save_index(const ExemplarIndex& index, const std::filesystem::path& path);
ExemplarIndex load_index(const std::filesystem::path& path,
                         const std::string& expected_embedder_id = "");

}  // namespace kbvqa::fewshot

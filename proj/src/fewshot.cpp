#include "kbvqa/fewshot.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "kbvqa/errors.hpp"
#include "kbvqa/log.hpp"

namespace kbvqa::fewshot {

using nlohmann::json;

Vector fuse(const Vector& image_vec, const Vector& text_vec) {
    if (image_vec.size() != text_vec.size())
        throw DimensionMismatch("fuse: image dimension " + std::to_string(image_vec.size()) +
                                " != text dimension " + std::to_string(text_vec.size()));
    Vector sum = image_vec + text_vec;
    const float n = sum.norm();
    if (n < 1e-12f) return text_vec;
    return sum / n;
}

ExemplarIndex build_index(const std::vector<Sample>& train, EmbeddingBackend& embedder) {
    if (train.empty()) throw std::invalid_argument("build_index: training pool is empty");

    std::unordered_set<std::string> seen;
    for (const Sample& s : train) {
        if (!seen.insert(s.id).second)
            throw SchemaViolation("build_index: duplicate sample id '" + s.id + "'");
    }

    std::vector<std::string> ids;
    std::vector<Vector> rows;
    ids.reserve(train.size());
    rows.reserve(train.size());
    for (const Sample& s : train) {
        try {
            Vector fused = fuse(embedder.embed_image(s.image_ref), embedder.embed_text(s.question));
            ids.push_back(s.id);
            rows.push_back(std::move(fused));
        } catch (const ImageNotFound& e) {
            log::warn("build_index: skipping '" + s.id + "': " + e.what());
        } catch (const ReplayMiss& e) {
            log::warn("build_index: skipping '" + s.id + "': " + e.what());
        } catch (const MalformedResponse& e) {
            log::warn("build_index: skipping '" + s.id + "': " + e.what());
        }
    }
    if (ids.empty()) throw EmptyIndex("build_index: every sample failed to embed");

    ExemplarIndex index;
    index.ids = std::move(ids);
    index.embedder_id = embedder.id();
    index.vectors.resize(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != index.vectors.cols())
            throw DimensionMismatch("build_index: inconsistent embedding dimensions");
        index.vectors.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    }
    return index;
}

Eigen::VectorXf similarities(const Vector& fused, const ExemplarIndex& index) {
    if (index.size() == 0) throw EmptyIndex("similarities: index is empty");
    if (fused.size() != index.vectors.cols())
        throw DimensionMismatch("similarities: query dimension " + std::to_string(fused.size()) +
                                " != index dimension " + std::to_string(index.vectors.cols()));
    return index.vectors * fused;
}

std::vector<std::string> rank_by_similarity(const Vector& fused, const ExemplarIndex& index,
                                            const std::string& exclude_id, int k) {
    if (k < 1) throw std::invalid_argument("rank_by_similarity: k must be >= 1");
    const Eigen::VectorXf sims = similarities(fused, index);

    std::vector<size_t> order(index.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        const float sa = sims[static_cast<Eigen::Index>(a)];
        const float sb = sims[static_cast<Eigen::Index>(b)];
        if (sa != sb) return sa > sb;
        return index.ids[a] < index.ids[b];
    });

    std::vector<std::string> out;
    out.reserve(static_cast<size_t>(k));
    for (size_t pos : order) {
        if (index.ids[pos] == exclude_id) continue;
        out.push_back(index.ids[pos]);
        if (static_cast<int>(out.size()) == k) break;
    }
    return out;
}

std::vector<std::string> select_exemplars(const Sample& test, const ExemplarIndex& index,
                                          EmbeddingBackend& embedder, int k) {
    if (embedder.id() != index.embedder_id)
        throw ConfigError("select_exemplars: index was built with embedder '" + index.embedder_id +
                          "', configured embedder is '" + embedder.id() + "'");
    Vector fused = fuse(embedder.embed_image(test.image_ref), embedder.embed_text(test.question));
    return rank_by_similarity(fused, index, test.id, k);
}

void save_index(const ExemplarIndex& index, const std::filesystem::path& path) {
    std::vector<float> flat;
    flat.reserve(static_cast<size_t>(index.vectors.size()));
    for (Eigen::Index r = 0; r < index.vectors.rows(); ++r)
        for (Eigen::Index c = 0; c < index.vectors.cols(); ++c)
            flat.push_back(index.vectors(r, c));
    json j{{"embedder_id", index.embedder_id},
           {"fusion_rule", index.fusion_rule},
           {"d", index.dimension()},
           {"ids", index.ids},
           {"vectors", flat}};
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write index file: " + path.string());
    out << j.dump() << "\n";
}

ExemplarIndex load_index(const std::filesystem::path& path,
                         const std::string& expected_embedder_id) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open index file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw SchemaViolation("index file is not valid JSON: " + std::string(e.what()));
    }
    ExemplarIndex index;
    index.embedder_id = j.at("embedder_id").get<std::string>();
    index.fusion_rule = j.at("fusion_rule").get<std::string>();
    index.ids = j.at("ids").get<std::vector<std::string>>();
    const int d = j.at("d").get<int>();
    const auto flat = j.at("vectors").get<std::vector<float>>();
    if (d <= 0 || flat.size() != index.ids.size() * static_cast<size_t>(d))
        throw SchemaViolation("index file vector payload does not match ids x d");
    if (!expected_embedder_id.empty() && index.embedder_id != expected_embedder_id)
        throw ConfigError("index file was built with embedder '" + index.embedder_id +
                          "', expected '" + expected_embedder_id + "' (refusing to load)");
    if (index.fusion_rule != kFusionRule)
        throw ConfigError("index file uses unknown fusion rule '" + index.fusion_rule + "'");
    index.vectors.resize(static_cast<Eigen::Index>(index.ids.size()), d);
    size_t i = 0;
    for (Eigen::Index r = 0; r < index.vectors.rows(); ++r)
        for (Eigen::Index c = 0; c < index.vectors.cols(); ++c) index.vectors(r, c) = flat[i++];
    return index;
}

}  // namespace kbvqa::fewshot

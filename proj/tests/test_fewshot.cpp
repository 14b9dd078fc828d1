#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "kbvqa/errors.hpp"
#include "kbvqa/fewshot.hpp"

using namespace kbvqa;
using kbvqa::test::Rng;
using kbvqa::test::TempDir;

namespace {

Vector unit(std::initializer_list<float> values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (float x : values) v[i++] = x;
    return v / v.norm();
}

Vector random_unit(Rng& rng, int d) {
    std::normal_distribution<float> normal(0.0f, 1.0f);
    Vector v(d);
    for (int i = 0; i < d; ++i) v[i] = normal(rng.gen());
    const float n = v.norm();
    return n > 0 ? Vector(v / n) : unit({1.0f});
}

fewshot::ExemplarIndex index_from_rows(const std::vector<Vector>& rows) {
    fewshot::ExemplarIndex index;
    index.embedder_id = "test";
    index.vectors.resize(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    char buf[8];
    for (size_t r = 0; r < rows.size(); ++r) {
        std::snprintf(buf, sizeof(buf), "s%03zu", r);
        index.ids.push_back(buf);
        index.vectors.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    }
    return index;
}

/// Brute-force oracle: independent full sort (similarity desc, id asc) with
/// exclusion and truncation, over the published similarity values.
std::vector<std::string> oracle_topk(const Vector& query, const fewshot::ExemplarIndex& index,
                                     const std::string& exclude, int k) {
    const Eigen::VectorXf sims = fewshot::similarities(query, index);
    std::vector<std::pair<float, std::string>> scored;
    for (size_t r = 0; r < index.size(); ++r) {
        if (index.ids[r] == exclude) continue;
        scored.emplace_back(sims[static_cast<Eigen::Index>(r)], index.ids[r]);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::string> out;
    for (int i = 0; i < k && i < static_cast<int>(scored.size()); ++i)
        out.push_back(scored[static_cast<size_t>(i)].second);
    return out;
}

}  // namespace

TEST_SUITE("fewshot") {

TEST_CASE("similarity values agree with a plain double-precision dot product") {
    Rng rng(21);
    for (int d : {8, 64, 512}) {
        std::vector<Vector> rows;
        for (int i = 0; i < 50; ++i) rows.push_back(random_unit(rng, d));
        const auto index = index_from_rows(rows);
        const Vector q = random_unit(rng, d);
        const Eigen::VectorXf sims = fewshot::similarities(q, index);
        for (size_t r = 0; r < rows.size(); ++r) {
            double dot = 0.0;
            for (int c = 0; c < d; ++c)
                dot += static_cast<double>(rows[r][c]) * static_cast<double>(q[c]);
            CHECK(std::abs(dot - static_cast<double>(sims[static_cast<Eigen::Index>(r)])) < 1e-5);
        }
    }
}

TEST_CASE("fuse of identical unit vectors is the vector itself") {
    const Vector v = unit({0.6f, 0.8f});
    const Vector fused = fewshot::fuse(v, v);
    CHECK((fused - v).norm() < 1e-6f);
}

TEST_CASE("fuse of opposite vectors falls back to the text vector") {
    const Vector v = unit({1.0f, 0.0f});
    const Vector fused = fewshot::fuse(Vector(-v), v);
    CHECK((fused - v).norm() < 1e-6f);
}

TEST_CASE("fuse of orthogonal basis vectors is the normalized mean") {
    Vector e1 = Vector::Zero(3);
    Vector e2 = Vector::Zero(3);
    e1[0] = 1.0f;
    e2[1] = 1.0f;
    const Vector fused = fewshot::fuse(e1, e2);
    const float inv_sqrt2 = 1.0f / std::sqrt(2.0f);
    CHECK(fused[0] == doctest::Approx(inv_sqrt2));
    CHECK(fused[1] == doctest::Approx(inv_sqrt2));
    CHECK(fused[2] == doctest::Approx(0.0f));
}

TEST_CASE("fuse rejects mismatched dimensions") {
    CHECK_THROWS_AS(fewshot::fuse(Vector::Ones(3), Vector::Ones(4)), DimensionMismatch);
}

TEST_CASE("build_index embeds every sample with unit rows") {
    Rng rng(1);
    std::vector<Sample> train;
    for (int i = 0; i < 3; ++i) train.push_back(kbvqa::test::random_sample(rng, "t" + std::to_string(i)));
    MockEmbedder embedder(32, 5);
    const auto index = fewshot::build_index(train, embedder);
    CHECK(index.size() == 3);
    CHECK(index.dimension() == 32);
    CHECK(index.embedder_id == embedder.id());
    for (Eigen::Index r = 0; r < index.vectors.rows(); ++r)
        CHECK(std::abs(index.vectors.row(r).norm() - 1.0f) < 1e-6f);
}

TEST_CASE("rebuilding and persisting the index is byte-identical") {
    Rng rng(2);
    std::vector<Sample> train;
    for (int i = 0; i < 5; ++i) train.push_back(kbvqa::test::random_sample(rng, "t" + std::to_string(i)));
    MockEmbedder embedder(16, 3);
    TempDir dir("index");
    fewshot::save_index(fewshot::build_index(train, embedder), dir.path() / "a.json");
    fewshot::save_index(fewshot::build_index(train, embedder), dir.path() / "b.json");
    CHECK(kbvqa::test::slurp(dir.path() / "a.json") == kbvqa::test::slurp(dir.path() / "b.json"));
}

TEST_CASE("duplicate sample ids are rejected at construction") {
    Rng rng(3);
    std::vector<Sample> train = {kbvqa::test::random_sample(rng, "dup"),
                                 kbvqa::test::random_sample(rng, "dup")};
    MockEmbedder embedder(8, 1);
    CHECK_THROWS_AS(fewshot::build_index(train, embedder), SchemaViolation);
}

TEST_CASE("load refuses an embedder mismatch") {
    Rng rng(4);
    std::vector<Sample> train = {kbvqa::test::random_sample(rng, "t0")};
    MockEmbedder embedder(8, 1);
    TempDir dir("index");
    fewshot::save_index(fewshot::build_index(train, embedder), dir.path() / "i.json");
    CHECK_THROWS_AS(fewshot::load_index(dir.path() / "i.json", "some-other-embedder"), ConfigError);
    const auto loaded = fewshot::load_index(dir.path() / "i.json", embedder.id());
    CHECK(loaded.size() == 1);
}

TEST_CASE("selection excludes the test sample's own id") {
    const Vector q = unit({1.0f, 0.0f});
    const auto index = index_from_rows({unit({1.0f, 0.0f}), unit({0.9f, 0.1f})});
    const auto ranked = fewshot::rank_by_similarity(q, index, "s000", 5);
    REQUIRE(ranked.size() == 1);
    CHECK(ranked[0] == "s001");
}

TEST_CASE("ties break by ascending sample id") {
    // rows 0 and 2 have identical similarity to the query; row 1 is far
    const auto index = index_from_rows(
        {unit({1.0f, 0.0f, 0.0f}), unit({0.0f, 0.0f, 1.0f}), unit({1.0f, 0.0f, 0.0f})});
    const auto ranked = fewshot::rank_by_similarity(unit({1.0f, 0.0f, 0.0f}), index, "", 2);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0] == "s000");
    CHECK(ranked[1] == "s002");
}

TEST_CASE("empty index raises EmptyIndex") {
    fewshot::ExemplarIndex index;
    CHECK_THROWS_AS(fewshot::rank_by_similarity(Vector::Ones(2), index, "", 1), EmptyIndex);
}

TEST_CASE("top-32 agrees with the brute-force oracle") {
    Rng rng(20240902);
    for (int d : {8, 64}) {
        std::vector<Vector> rows;
        for (int i = 0; i < 200; ++i) rows.push_back(random_unit(rng, d));
        const auto index = index_from_rows(rows);
        for (int trial = 0; trial < 20; ++trial) {
            const Vector q = random_unit(rng, d);
            CHECK(fewshot::rank_by_similarity(q, index, "", 32) == oracle_topk(q, index, "", 32));
        }
    }
}

TEST_CASE("top-k1 is a prefix of top-k2 for k1 < k2") {
    Rng rng(11);
    std::vector<Vector> rows;
    for (int i = 0; i < 60; ++i) rows.push_back(random_unit(rng, 16));
    const auto index = index_from_rows(rows);
    const Vector q = random_unit(rng, 16);
    const auto top40 = fewshot::rank_by_similarity(q, index, "", 40);
    for (int k : {1, 5, 17, 39}) {
        const auto topk = fewshot::rank_by_similarity(q, index, "", k);
        REQUIRE(topk.size() == static_cast<size_t>(k));
        CHECK(std::equal(topk.begin(), topk.end(), top40.begin()));
    }
}

TEST_CASE("selection is invariant under index row permutation") {
    Rng rng(12);
    std::vector<Vector> rows;
    for (int i = 0; i < 30; ++i) rows.push_back(random_unit(rng, 8));
    auto index = index_from_rows(rows);
    const Vector q = random_unit(rng, 8);
    const auto base = fewshot::rank_by_similarity(q, index, "", 10);

    // permute rows (keeping id->vector pairing intact)
    std::vector<size_t> perm(index.size());
    std::iota(perm.begin(), perm.end(), size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng.gen());
    fewshot::ExemplarIndex shuffled;
    shuffled.embedder_id = index.embedder_id;
    shuffled.vectors.resize(index.vectors.rows(), index.vectors.cols());
    for (size_t r = 0; r < perm.size(); ++r) {
        shuffled.ids.push_back(index.ids[perm[r]]);
        shuffled.vectors.row(static_cast<Eigen::Index>(r)) =
            index.vectors.row(static_cast<Eigen::Index>(perm[r]));
    }
    CHECK(fewshot::rank_by_similarity(q, shuffled, "", 10) == base);
}

TEST_CASE("select_exemplars checks the embedder id and returns min(k, pool)") {
    Rng rng(13);
    std::vector<Sample> train;
    for (int i = 0; i < 4; ++i) train.push_back(kbvqa::test::random_sample(rng, "t" + std::to_string(i)));
    MockEmbedder embedder(8, 1);
    const auto index = fewshot::build_index(train, embedder);
    const Sample probe = kbvqa::test::random_sample(rng, "probe");
    CHECK(fewshot::select_exemplars(probe, index, embedder, 32).size() == 4);

    MockEmbedder other(8, 2);
    CHECK_THROWS_AS(fewshot::select_exemplars(probe, index, other, 32), ConfigError);
}

}  // TEST_SUITE

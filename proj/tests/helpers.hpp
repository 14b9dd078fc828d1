#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kbvqa/core.hpp"

namespace kbvqa::test {

namespace fs = std::filesystem;

inline fs::path fixture(const std::string& name) {
    return fs::path(KBVQA_FIXTURES_DIR) / name;
}

inline std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void spit(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

/// Self-deleting scratch directory under the system temp dir.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned long> counter{0};
        std::random_device rd;
        path_ = fs::temp_directory_path() /
                ("kbvqa-" + tag + "-" + std::to_string(rd()) + "-" +
                 std::to_string(counter.fetch_add(1)));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

/// Small seeded generator for property-style tests.
class Rng {
public:
    explicit Rng(unsigned seed) : gen_(seed) {}
    int range(int lo, int hi) {  // inclusive
        return std::uniform_int_distribution<int>(lo, hi)(gen_);
    }
    double real(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }
    bool chance(double p) { return std::bernoulli_distribution(p)(gen_); }
    std::string word(int min_len = 1, int max_len = 8) {
        const int n = range(min_len, max_len);
        std::string out;
        for (int i = 0; i < n; ++i) out.push_back(static_cast<char>('a' + range(0, 25)));
        return out;
    }
    std::string sentence(int min_words = 1, int max_words = 6) {
        const int n = range(min_words, max_words);
        std::string out;
        for (int i = 0; i < n; ++i) {
            if (i > 0) out += " ";
            out += word();
        }
        return out;
    }
    std::mt19937& gen() { return gen_; }

private:
    std::mt19937 gen_;
};

inline Sample random_sample(Rng& rng, const std::string& id) {
    Sample s;
    s.id = id;
    s.image_ref = "img/" + rng.word() + ".png";
    s.question = rng.sentence(2, 6) + "?";
    const int n_answers = rng.chance(0.5) ? 10 : rng.range(1, 5);
    for (int i = 0; i < n_answers; ++i) s.gold_answers.push_back(rng.word());
    if (rng.chance(0.3)) {
        s.mc_choices = std::vector<std::string>{rng.word(), rng.word(), rng.word(), rng.word()};
        s.mc_correct_index = rng.range(0, 3);
    }
    s.split = static_cast<Split>(rng.range(0, 2));
    s.dataset = Dataset::Custom;
    return s;
}

inline EvidenceItem random_evidence(Rng& rng) {
    EvidenceItem e;
    e.kind = static_cast<EvidenceKind>(rng.range(0, 4));
    e.text = rng.sentence();
    e.backend_id = rng.word();
    if (e.kind == EvidenceKind::SubQuestionStatement || e.kind == EvidenceKind::KnowledgeStatement)
        e.source_subq = rng.range(1, 8);
    return e;
}

inline PredictionRecord random_record(Rng& rng, const std::string& id) {
    PredictionRecord r;
    r.sample_id = id;
    r.raw_answer = rng.sentence();
    r.normalized_answer = rng.sentence();
    if (rng.chance(0.4)) r.mc_choice_index = rng.range(0, 3);
    const int n_ev = rng.range(0, 4);
    for (int i = 0; i < n_ev; ++i) r.evidence.push_back(random_evidence(rng));
    const int n_sq = rng.range(0, 3);
    for (int i = 0; i < n_sq; ++i)
        r.sub_questions.push_back(
            SubQuestion{i + 1, rng.sentence() + "?", static_cast<Modality>(rng.range(0, 2))});
    const int n_ex = rng.range(0, 3);
    for (int i = 0; i < n_ex; ++i) r.exemplar_ids.push_back(rng.word());
    r.prompt = rng.sentence();
    r.prompt_hash = rng.word();
    r.config_name = "cfg-" + rng.word(1, 3);
    r.latency_ms = rng.range(0, 5000);
    return r;
}

}  // namespace kbvqa::test

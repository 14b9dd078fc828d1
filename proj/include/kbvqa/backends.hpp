#pragma once

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kbvqa/core.hpp"

namespace kbvqa {

using Vector = Eigen::VectorXf;

// ---------------------------------------------------------------------------
// Requests and canonical hashing
// ---------------------------------------------------------------------------

struct CompletionRequest {
    std::string backend_id;
    std::string prompt;
    int max_tokens = 256;
    double temperature = 0.0;
    std::optional<std::vector<std::string>> stop;
};

/// Canonical serialization: UTF-8 JSON, sorted keys, no insignificant
/// whitespace, optional fields omitted when absent.
std::string canonical_json(const CompletionRequest& req);

/// SHA-256 of the canonical serialization; identical requests hash
/// identically regardless of construction order.
std::string request_key(const CompletionRequest& req);
std::string caption_key(const std::string& backend_id, const std::string& image_ref,
                        const std::string& query);
std::string embed_key(const std::string& backend_id, const std::string& kind,
                      const std::string& content);

// ---------------------------------------------------------------------------
// Global offline switch
// ---------------------------------------------------------------------------

/// When set, live adapters refuse to execute (no network attempt is made).
void set_global_offline(bool offline);
bool global_offline();

// ---------------------------------------------------------------------------
// Backend interfaces
// ---------------------------------------------------------------------------

class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    /// Returns the completion text. Throws BackendUnavailable,
    /// MalformedResponse, or ReplayMiss.
    virtual std::string complete(const CompletionRequest& req) = 0;
    virtual const std::string& id() const = 0;
};

class CaptionBackend {
public:
    virtual ~CaptionBackend() = default;
    /// Caption of the image conditioned on `query`.
    virtual std::string caption(const std::string& image_ref, const std::string& query) = 0;
    virtual const std::string& id() const = 0;
};

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    /// Unit vectors (L2 norm within 1e-6 of 1), same dimension for both.
    virtual Vector embed_text(const std::string& text) = 0;
    virtual Vector embed_image(const std::string& image_ref) = 0;
    virtual int dimension() const = 0;
    virtual const std::string& id() const = 0;
};

// ---------------------------------------------------------------------------
// Deterministic mocks
// ---------------------------------------------------------------------------

/// Rule-table completion: exact prompt lookup first, then the fallback
/// function. Thread-safe; counts calls so tests can assert routing.
class MockCompletion : public CompletionBackend {
public:
    using Fallback = std::function<std::string(const CompletionRequest&)>;
    explicit MockCompletion(std::string id, std::map<std::string, std::string> rules = {},
                            Fallback fallback = nullptr);
    std::string complete(const CompletionRequest& req) override;
    const std::string& id() const override { return id_; }
    void add_rule(std::string prompt, std::string response);
    long calls() const { return calls_.load(); }

private:
    std::string id_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> rules_;
    Fallback fallback_;
    std::atomic<long> calls_{0};
};

/// Rule-table captioner keyed on (image_ref, query); defaults to the echo
/// rule "caption for: " + query.
class MockCaptioner : public CaptionBackend {
public:
    using Fallback = std::function<std::string(const std::string&, const std::string&)>;
    explicit MockCaptioner(std::string id, Fallback fallback = nullptr);
    std::string caption(const std::string& image_ref, const std::string& query) override;
    const std::string& id() const override { return id_; }
    void add_rule(const std::string& image_ref, const std::string& query, std::string response);
    long calls() const { return calls_.load(); }

private:
    std::string id_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> rules_;
    Fallback fallback_;
    std::atomic<long> calls_{0};
};

/// Seeded hash-to-vector embedder: deterministic, normalized, no I/O.
class MockEmbedder : public EmbeddingBackend {
public:
    MockEmbedder(int dimension, std::uint64_t seed);
    Vector embed_text(const std::string& text) override;
    Vector embed_image(const std::string& image_ref) override;
    int dimension() const override { return dimension_; }
    const std::string& id() const override { return id_; }
    long calls() const { return calls_.load(); }

private:
    Vector embed(const std::string& domain, const std::string& content);
    int dimension_;
    std::uint64_t seed_;
    std::string id_;
    std::atomic<long> calls_{0};
};

// ---------------------------------------------------------------------------
// Record / replay transcripts
// ---------------------------------------------------------------------------

/// Immutable request-hash -> response map loaded from a JSONL file of
/// {"key": <hex>, "value": <string>} objects.
class Transcript {
public:
    Transcript() = default;
    static Transcript load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
    std::optional<std::string> get(const std::string& key) const;
    void put(std::string key, std::string value);
    size_t size() const { return entries_.size(); }

private:
    std::map<std::string, std::string> entries_;
};

/// Append-only transcript writer shared by all recording wrappers of one
/// run. Duplicate keys are written once; lines are flushed as they land.
class TranscriptRecorder {
public:
    explicit TranscriptRecorder(std::filesystem::path path);
    void record(const std::string& key, const std::string& value);
    size_t size() const;

private:
    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> seen_;
};

class RecordingCompletion : public CompletionBackend {
public:
    RecordingCompletion(std::shared_ptr<CompletionBackend> inner,
                        std::shared_ptr<TranscriptRecorder> recorder);
    std::string complete(const CompletionRequest& req) override;
    const std::string& id() const override { return inner_->id(); }

private:
    std::shared_ptr<CompletionBackend> inner_;
    std::shared_ptr<TranscriptRecorder> recorder_;
};

class RecordingCaptioner : public CaptionBackend {
public:
    RecordingCaptioner(std::shared_ptr<CaptionBackend> inner,
                       std::shared_ptr<TranscriptRecorder> recorder);
    std::string caption(const std::string& image_ref, const std::string& query) override;
    const std::string& id() const override { return inner_->id(); }

private:
    std::shared_ptr<CaptionBackend> inner_;
    std::shared_ptr<TranscriptRecorder> recorder_;
};

class RecordingEmbedder : public EmbeddingBackend {
public:
    RecordingEmbedder(std::shared_ptr<EmbeddingBackend> inner,
                      std::shared_ptr<TranscriptRecorder> recorder);
    Vector embed_text(const std::string& text) override;
    Vector embed_image(const std::string& image_ref) override;
    int dimension() const override { return inner_->dimension(); }
    const std::string& id() const override { return inner_->id(); }

private:
    Vector record(const std::string& kind, const std::string& content, Vector v);
    std::shared_ptr<EmbeddingBackend> inner_;
    std::shared_ptr<TranscriptRecorder> recorder_;
};

class ReplayCompletion : public CompletionBackend {
public:
    ReplayCompletion(std::string id, std::shared_ptr<const Transcript> transcript);
    std::string complete(const CompletionRequest& req) override;
    const std::string& id() const override { return id_; }

private:
    std::string id_;
    std::shared_ptr<const Transcript> transcript_;
};

class ReplayCaptioner : public CaptionBackend {
public:
    ReplayCaptioner(std::string id, std::shared_ptr<const Transcript> transcript);
    std::string caption(const std::string& image_ref, const std::string& query) override;
    const std::string& id() const override { return id_; }

private:
    std::string id_;
    std::shared_ptr<const Transcript> transcript_;
};

class ReplayEmbedder : public EmbeddingBackend {
public:
    ReplayEmbedder(std::string id, int dimension, std::shared_ptr<const Transcript> transcript);
    Vector embed_text(const std::string& text) override;
    Vector embed_image(const std::string& image_ref) override;
    int dimension() const override { return dimension_; }
    const std::string& id() const override { return id_; }

private:
    Vector lookup(const std::string& kind, const std::string& content);
    std::string id_;
    int dimension_;
    std::shared_ptr<const Transcript> transcript_;
};

/// Serialize / parse an embedding vector for transcript values.
std::string vector_to_transcript_value(const Vector& v);
Vector vector_from_transcript_value(const std::string& value);

// ---------------------------------------------------------------------------
// Content-addressed disk cache
// ---------------------------------------------------------------------------

/// One file per key (filename = key). File layout: first line holds the
/// SHA-256 of the value, the rest is the value verbatim. A checksum
/// mismatch is treated as a miss and logged.
class DiskCache {
public:
    explicit DiskCache(std::filesystem::path dir);
    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& value) const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

/// Consults the cache before delegating; stores on miss.
class CachedCompletion : public CompletionBackend {
public:
    CachedCompletion(std::shared_ptr<CompletionBackend> inner, std::shared_ptr<DiskCache> cache);
    std::string complete(const CompletionRequest& req) override;
    const std::string& id() const override { return inner_->id(); }

private:
    std::shared_ptr<CompletionBackend> inner_;
    std::shared_ptr<DiskCache> cache_;
};

class CachedCaptioner : public CaptionBackend {
public:
    CachedCaptioner(std::shared_ptr<CaptionBackend> inner, std::shared_ptr<DiskCache> cache);
    std::string caption(const std::string& image_ref, const std::string& query) override;
    const std::string& id() const override { return inner_->id(); }

private:
    std::shared_ptr<CaptionBackend> inner_;
    std::shared_ptr<DiskCache> cache_;
};

// ---------------------------------------------------------------------------
// Live HTTP adapters
// ---------------------------------------------------------------------------

struct LiveEndpoint {
    std::string base_url;      // e.g. https://api.example.com/v1
    std::string model_name;
    std::string api_key_env;   // env var holding the key; never the key itself
    int max_in_flight = 4;
    int max_attempts = 5;
};

/// Bounded counting semaphore for per-backend in-flight limits.
class Semaphore {
public:
    explicit Semaphore(int slots) : slots_(slots) {}
    void acquire();
    void release();

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int slots_;
};

class ScopedSlot {
public:
    explicit ScopedSlot(Semaphore& s) : sem_(s) { sem_.acquire(); }
    ~ScopedSlot() { sem_.release(); }
    ScopedSlot(const ScopedSlot&) = delete;
    ScopedSlot& operator=(const ScopedSlot&) = delete;

private:
    Semaphore& sem_;
};

/// OpenAI-style /completions endpoint. Retries transient failures with
/// bounded exponential backoff; never executes when the offline flag is set.
class LiveCompletion : public CompletionBackend {
public:
    LiveCompletion(std::string id, LiveEndpoint endpoint);
    std::string complete(const CompletionRequest& req) override;
    const std::string& id() const override { return id_; }
    /// Network attempts made so far (0 while offline).
    long attempts() const { return attempts_.load(); }

private:
    std::string id_;
    LiveEndpoint endpoint_;
    Semaphore slots_;
    std::atomic<long> attempts_{0};
};

/// POST {base_url}/caption with {model, image_ref, query} -> {"caption": ...}.
class LiveCaptioner : public CaptionBackend {
public:
    LiveCaptioner(std::string id, LiveEndpoint endpoint);
    std::string caption(const std::string& image_ref, const std::string& query) override;
    const std::string& id() const override { return id_; }
    long attempts() const { return attempts_.load(); }

private:
    std::string id_;
    LiveEndpoint endpoint_;
    Semaphore slots_;
    std::atomic<long> attempts_{0};
};

/// POST {base_url}/embeddings with {model, input, kind} -> {"data":[{"embedding":[...]}]}.
class LiveEmbedder : public EmbeddingBackend {
public:
    LiveEmbedder(std::string id, LiveEndpoint endpoint, int dimension);
    Vector embed_text(const std::string& text) override;
    Vector embed_image(const std::string& image_ref) override;
    int dimension() const override { return dimension_; }
    const std::string& id() const override { return id_; }
    long attempts() const { return attempts_.load(); }

private:
    Vector embed(const std::string& kind, const std::string& content);
    std::string id_;
    LiveEndpoint endpoint_;
    int dimension_;
    Semaphore slots_;
    std::atomic<long> attempts_{0};
};

}  // namespace kbvqa

#include "kbvqa/backends.hpp"

#include <unistd.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kbvqa/digest.hpp"
#include "kbvqa/errors.hpp"
#include "kbvqa/log.hpp"

namespace kbvqa {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Canonical serialization and keys
// ---------------------------------------------------------------------------

std::string canonical_json(const CompletionRequest& req) {
    json j{{"backend_id", req.backend_id},
           {"max_tokens", req.max_tokens},
           {"prompt", req.prompt},
           {"temperature", req.temperature}};
    if (req.stop) j["stop"] = *req.stop;
    return j.dump();  // nlohmann objects iterate in sorted key order
}

std::string request_key(const CompletionRequest& req) { return sha256_hex(canonical_json(req)); }

std::string caption_key(const std::string& backend_id, const std::string& image_ref,
                        const std::string& query) {
    json j{{"backend_id", backend_id}, {"image_ref", image_ref}, {"op", "caption"}, {"query", query}};
    return sha256_hex(j.dump());
}

std::string embed_key(const std::string& backend_id, const std::string& kind,
                      const std::string& content) {
    json j{{"backend_id", backend_id}, {"content", content}, {"kind", kind}, {"op", "embed"}};
    return sha256_hex(j.dump());
}

// ---------------------------------------------------------------------------
// Offline flag
// ---------------------------------------------------------------------------

namespace {
std::atomic<bool> g_offline{false};
}

void set_global_offline(bool offline) { g_offline.store(offline); }
bool global_offline() { return g_offline.load(); }

// ---------------------------------------------------------------------------
// Mocks
// ---------------------------------------------------------------------------

MockCompletion::MockCompletion(std::string id, std::map<std::string, std::string> rules,
                               Fallback fallback)
    : id_(std::move(id)), rules_(std::move(rules)), fallback_(std::move(fallback)) {}

std::string MockCompletion::complete(const CompletionRequest& req) {
    ++calls_;
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = rules_.find(req.prompt);
    if (it != rules_.end()) return it->second;
    if (fallback_) return fallback_(req);
    throw MalformedResponse("mock completion '" + id_ + "' has no rule for prompt");
}

void MockCompletion::add_rule(std::string prompt, std::string response) {
    std::lock_guard<std::mutex> lock(mutex_);
    rules_[std::move(prompt)] = std::move(response);
}

MockCaptioner::MockCaptioner(std::string id, Fallback fallback)
    : id_(std::move(id)), fallback_(std::move(fallback)) {}

std::string MockCaptioner::caption(const std::string& image_ref, const std::string& query) {
    ++calls_;
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = rules_.find(image_ref + "\x1f" + query);
    if (it != rules_.end()) return it->second;
    if (fallback_) return fallback_(image_ref, query);
    return "caption for: " + query;
}

void MockCaptioner::add_rule(const std::string& image_ref, const std::string& query,
                             std::string response) {
    std::lock_guard<std::mutex> lock(mutex_);
    rules_[image_ref + "\x1f" + query] = std::move(response);
}

namespace {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

MockEmbedder::MockEmbedder(int dimension, std::uint64_t seed)
    : dimension_(dimension),
      seed_(seed),
      id_("mock-embedder-d" + std::to_string(dimension) + "-s" + std::to_string(seed)) {
    if (dimension <= 0) throw DimensionMismatch("embedder dimension must be positive");
}

Vector MockEmbedder::embed(const std::string& domain, const std::string& content) {
    ++calls_;
    const std::uint64_t base = splitmix64(seed_ ^ fnv1a64(domain + "\x1f" + content));
    Vector v(dimension_);
    for (int i = 0; i < dimension_; ++i) {
        const std::uint64_t x = splitmix64(base + static_cast<std::uint64_t>(i));
        // top 53 bits -> [0,1) -> [-1,1)
        const double u = static_cast<double>(x >> 11) * (1.0 / 9007199254740992.0);
        v[i] = static_cast<float>(2.0 * u - 1.0);
    }
    float n = v.norm();
    if (n < 1e-12f) {
        v.setZero();
        v[0] = 1.0f;
        n = 1.0f;
    }
    return v / n;
}

Vector MockEmbedder::embed_text(const std::string& text) { return embed("text", text); }
Vector MockEmbedder::embed_image(const std::string& image_ref) { return embed("image", image_ref); }

// ---------------------------------------------------------------------------
// Transcripts
// ---------------------------------------------------------------------------

Transcript Transcript::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open transcript file: " + path.string());
    Transcript t;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw SchemaViolation("transcript parse error: " + std::string(e.what()), line_no);
        }
        if (!j.is_object() || !j.contains("key") || !j.contains("value"))
            throw SchemaViolation("transcript entry must have key and value", line_no);
        t.entries_[j["key"].get<std::string>()] = j["value"].get<std::string>();
    }
    return t;
}

void Transcript::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write transcript file: " + path.string());
    for (const auto& [key, value] : entries_) {
        json j{{"key", key}, {"value", value}};
        out << j.dump() << "\n";
    }
}

std::optional<std::string> Transcript::get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void Transcript::put(std::string key, std::string value) {
    entries_[std::move(key)] = std::move(value);
}

TranscriptRecorder::TranscriptRecorder(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    if (!std::filesystem::exists(path_)) return;
    // Re-seed dedup state from a previous (interrupted) recording.
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line);
        seen_[j["key"].get<std::string>()] = j["value"].get<std::string>();
    }
}

void TranscriptRecorder::record(const std::string& key, const std::string& value) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = seen_.find(key);
    if (it != seen_.end()) {
        if (it->second != value)
            log::warn("transcript key " + key + " recorded twice with different values");
        return;
    }
    seen_[key] = value;
    std::ofstream out(path_, std::ios::app);
    if (!out) throw ConfigError("cannot append to transcript file: " + path_.string());
    json j{{"key", key}, {"value", value}};
    out << j.dump() << "\n";
}

size_t TranscriptRecorder::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return seen_.size();
}

RecordingCompletion::RecordingCompletion(std::shared_ptr<CompletionBackend> inner,
                                         std::shared_ptr<TranscriptRecorder> recorder)
    : inner_(std::move(inner)), recorder_(std::move(recorder)) {}

std::string RecordingCompletion::complete(const CompletionRequest& req) {
    std::string out = inner_->complete(req);
    recorder_->record(request_key(req), out);
    return out;
}

RecordingCaptioner::RecordingCaptioner(std::shared_ptr<CaptionBackend> inner,
                                       std::shared_ptr<TranscriptRecorder> recorder)
    : inner_(std::move(inner)), recorder_(std::move(recorder)) {}

std::string RecordingCaptioner::caption(const std::string& image_ref, const std::string& query) {
    std::string out = inner_->caption(image_ref, query);
    recorder_->record(caption_key(inner_->id(), image_ref, query), out);
    return out;
}

RecordingEmbedder::RecordingEmbedder(std::shared_ptr<EmbeddingBackend> inner,
                                     std::shared_ptr<TranscriptRecorder> recorder)
    : inner_(std::move(inner)), recorder_(std::move(recorder)) {}

Vector RecordingEmbedder::record(const std::string& kind, const std::string& content, Vector v) {
    recorder_->record(embed_key(inner_->id(), kind, content), vector_to_transcript_value(v));
    return v;
}

Vector RecordingEmbedder::embed_text(const std::string& text) {
    return record("text", text, inner_->embed_text(text));
}

Vector RecordingEmbedder::embed_image(const std::string& image_ref) {
    return record("image", image_ref, inner_->embed_image(image_ref));
}

ReplayCompletion::ReplayCompletion(std::string id, std::shared_ptr<const Transcript> transcript)
    : id_(std::move(id)), transcript_(std::move(transcript)) {}

std::string ReplayCompletion::complete(const CompletionRequest& req) {
    const std::string key = request_key(req);
    auto hit = transcript_->get(key);
    if (!hit) {
        throw ReplayMiss("replay transcript has no entry " + key + " for backend '" + id_ +
                         "' (prompt starts: " + req.prompt.substr(0, 60) + ")");
    }
    return *hit;
}

ReplayCaptioner::ReplayCaptioner(std::string id, std::shared_ptr<const Transcript> transcript)
    : id_(std::move(id)), transcript_(std::move(transcript)) {}

std::string ReplayCaptioner::caption(const std::string& image_ref, const std::string& query) {
    const std::string key = caption_key(id_, image_ref, query);
    auto hit = transcript_->get(key);
    if (!hit) {
        throw ReplayMiss("replay transcript has no caption entry " + key + " for image '" +
                         image_ref + "', query '" + query.substr(0, 60) + "'");
    }
    return *hit;
}

ReplayEmbedder::ReplayEmbedder(std::string id, int dimension,
                               std::shared_ptr<const Transcript> transcript)
    : id_(std::move(id)), dimension_(dimension), transcript_(std::move(transcript)) {}

Vector ReplayEmbedder::lookup(const std::string& kind, const std::string& content) {
    const std::string key = embed_key(id_, kind, content);
    auto hit = transcript_->get(key);
    if (!hit) throw ReplayMiss("replay transcript has no embedding entry " + key);
    Vector v = vector_from_transcript_value(*hit);
    if (v.size() != dimension_)
        throw DimensionMismatch("replayed embedding has dimension " + std::to_string(v.size()) +
                                ", expected " + std::to_string(dimension_));
    return v;
}

Vector ReplayEmbedder::embed_text(const std::string& text) { return lookup("text", text); }
Vector ReplayEmbedder::embed_image(const std::string& image_ref) {
    return lookup("image", image_ref);
}

std::string vector_to_transcript_value(const Vector& v) {
    std::vector<float> raw(v.data(), v.data() + v.size());
    return json(raw).dump();
}

Vector vector_from_transcript_value(const std::string& value) {
    auto raw = json::parse(value).get<std::vector<float>>();
    Vector v(static_cast<Eigen::Index>(raw.size()));
    for (size_t i = 0; i < raw.size(); ++i) v[static_cast<Eigen::Index>(i)] = raw[i];
    return v;
}

// ---------------------------------------------------------------------------
// Disk cache
// ---------------------------------------------------------------------------

namespace {

void check_key(const std::string& key) {
    if (key.empty()) throw std::invalid_argument("cache key is empty");
    for (char c : key) {
        const bool hex = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
        if (!hex) throw std::invalid_argument("cache key must be lowercase hex: " + key);
    }
}

}  // namespace

DiskCache::DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::optional<std::string> DiskCache::get(const std::string& key) const {
    check_key(key);
    const auto path = dir_ / key;
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();
    const size_t nl = content.find('\n');
    if (nl == std::string::npos) {
        log::warn("corrupt cache entry " + key + ": missing checksum line (treated as miss)");
        return std::nullopt;
    }
    const std::string checksum = content.substr(0, nl);
    std::string value = content.substr(nl + 1);
    if (sha256_hex(value) != checksum) {
        log::warn("corrupt cache entry " + key + ": checksum mismatch (treated as miss)");
        return std::nullopt;
    }
    return value;
}

void DiskCache::put(const std::string& key, const std::string& value) const {
    check_key(key);
    static std::atomic<unsigned long> counter{0};
    // unique per process and thread so concurrent writers never share a temp file
    const auto tmp = dir_ / (key + ".tmp" + std::to_string(::getpid()) + "." +
                             std::to_string(counter.fetch_add(1)));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write cache entry: " + tmp.string());
        out << sha256_hex(value) << "\n" << value;
    }
    std::filesystem::rename(tmp, dir_ / key);
}

CachedCompletion::CachedCompletion(std::shared_ptr<CompletionBackend> inner,
                                   std::shared_ptr<DiskCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::string CachedCompletion::complete(const CompletionRequest& req) {
    const std::string key = request_key(req);
    if (auto hit = cache_->get(key)) return *hit;
    std::string out = inner_->complete(req);
    cache_->put(key, out);
    return out;
}

CachedCaptioner::CachedCaptioner(std::shared_ptr<CaptionBackend> inner,
                                 std::shared_ptr<DiskCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::string CachedCaptioner::caption(const std::string& image_ref, const std::string& query) {
    const std::string key = caption_key(inner_->id(), image_ref, query);
    if (auto hit = cache_->get(key)) return *hit;
    std::string out = inner_->caption(image_ref, query);
    cache_->put(key, out);
    return out;
}

// ---------------------------------------------------------------------------
// Semaphore
// ---------------------------------------------------------------------------

void Semaphore::acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [&] { return slots_ > 0; });
    --slots_;
}

void Semaphore::release() {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        ++slots_;
    }
    cv_.notify_one();
}

}  // namespace kbvqa

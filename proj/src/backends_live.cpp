#include "kbvqa/backends.hpp"

// httplib drags in <resolv.h>, whose _res macro clashes with Eigen's
// internal parameter names; Eigen (via backends.hpp) must come first.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include <nlohmann/json.hpp>

#include "kbvqa/errors.hpp"
#include "kbvqa/log.hpp"

namespace kbvqa {

using nlohmann::json;

namespace {

struct ParsedUrl {
    std::string scheme_host;  // "https://host:port", what httplib::Client wants
    std::string path_prefix;  // e.g. "/v1", may be empty
};

ParsedUrl parse_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("base_url must include a scheme: " + base_url);
    const auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

std::string api_key_from_env(const std::string& env_name) {
    if (env_name.empty()) return "";
    const char* value = std::getenv(env_name.c_str());
    return value ? value : "";
}

bool transient_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

/// One guarded POST with retries. Returns the response body.
/// `attempts` is incremented once per actual network attempt.
std::string post_with_retries(const LiveEndpoint& endpoint, const std::string& path,
                              const std::string& body, std::atomic<long>& attempts,
                              const std::string& what) {
    if (global_offline())
        throw BackendUnavailable("offline mode: refusing live call for " + what);

    const ParsedUrl url = parse_base_url(endpoint.base_url);
    const std::string api_key = api_key_from_env(endpoint.api_key_env);

    std::string last_error;
    for (int attempt = 1; attempt <= endpoint.max_attempts; ++attempt) {
        if (attempt > 1) {
            const auto backoff = std::chrono::milliseconds(100) * (1 << (attempt - 2));
            std::this_thread::sleep_for(std::min(backoff, std::chrono::milliseconds(2000)));
        }
        ++attempts;
        httplib::Client client(url.scheme_host);
        client.set_connection_timeout(10);
        client.set_read_timeout(120);
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
        auto res = client.Post(url.path_prefix + path, headers, body, "application/json");
        if (!res) {
            last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status == 200) {
            if (res->body.empty()) throw MalformedResponse(what + ": empty response body");
            return res->body;
        }
        if (res->status == 404 && path == "/caption")
            throw ImageNotFound(what + ": endpoint returned 404");
        if (transient_status(res->status)) {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        throw BackendUnavailable(what + ": endpoint returned status " +
                                 std::to_string(res->status));
    }
    throw BackendUnavailable(what + ": giving up after " + std::to_string(endpoint.max_attempts) +
                             " attempts, last error: " + last_error);
}

}  // namespace

LiveCompletion::LiveCompletion(std::string id, LiveEndpoint endpoint)
    : id_(std::move(id)), endpoint_(std::move(endpoint)), slots_(endpoint_.max_in_flight) {}

std::string LiveCompletion::complete(const CompletionRequest& req) {
    if (req.prompt.empty()) throw std::invalid_argument("completion prompt is empty");
    if (global_offline())
        throw BackendUnavailable("offline mode: live completion backend '" + id_ + "' disabled");
    ScopedSlot slot(slots_);
    json body{{"model", endpoint_.model_name},
              {"prompt", req.prompt},
              {"max_tokens", req.max_tokens},
              {"temperature", req.temperature}};
    if (req.stop) body["stop"] = *req.stop;
    const std::string raw = post_with_retries(endpoint_, "/completions", body.dump(), attempts_,
                                              "completion '" + id_ + "'");
    json parsed;
    try {
        parsed = json::parse(raw);
    } catch (const json::parse_error&) {
        throw MalformedResponse("completion '" + id_ + "': response is not JSON");
    }
    if (parsed.contains("choices") && !parsed["choices"].empty()) {
        const auto& choice = parsed["choices"][0];
        if (choice.contains("text")) return choice["text"].get<std::string>();
        if (choice.contains("message") && choice["message"].contains("content"))
            return choice["message"]["content"].get<std::string>();
    }
    throw MalformedResponse("completion '" + id_ + "': no choices in response");
}

LiveCaptioner::LiveCaptioner(std::string id, LiveEndpoint endpoint)
    : id_(std::move(id)), endpoint_(std::move(endpoint)), slots_(endpoint_.max_in_flight) {}

std::string LiveCaptioner::caption(const std::string& image_ref, const std::string& query) {
    if (global_offline())
        throw BackendUnavailable("offline mode: live caption backend '" + id_ + "' disabled");
    ScopedSlot slot(slots_);
    json body{{"model", endpoint_.model_name}, {"image_ref", image_ref}, {"query", query}};
    const std::string raw =
        post_with_retries(endpoint_, "/caption", body.dump(), attempts_, "caption '" + id_ + "'");
    json parsed;
    try {
        parsed = json::parse(raw);
    } catch (const json::parse_error&) {
        throw MalformedResponse("caption '" + id_ + "': response is not JSON");
    }
    if (!parsed.contains("caption"))
        throw MalformedResponse("caption '" + id_ + "': no caption field in response");
    return parsed["caption"].get<std::string>();
}

LiveEmbedder::LiveEmbedder(std::string id, LiveEndpoint endpoint, int dimension)
    : id_(std::move(id)),
      endpoint_(std::move(endpoint)),
      dimension_(dimension),
      slots_(endpoint_.max_in_flight) {}

Vector LiveEmbedder::embed(const std::string& kind, const std::string& content) {
    if (global_offline())
        throw BackendUnavailable("offline mode: live embedding backend '" + id_ + "' disabled");
    ScopedSlot slot(slots_);
    json body{{"model", endpoint_.model_name}, {"input", content}, {"kind", kind}};
    const std::string raw = post_with_retries(endpoint_, "/embeddings", body.dump(), attempts_,
                                              "embedding '" + id_ + "'");
    json parsed;
    try {
        parsed = json::parse(raw);
    } catch (const json::parse_error&) {
        throw MalformedResponse("embedding '" + id_ + "': response is not JSON");
    }
    if (!parsed.contains("data") || parsed["data"].empty() ||
        !parsed["data"][0].contains("embedding"))
        throw MalformedResponse("embedding '" + id_ + "': no embedding in response");
    auto raw_vec = parsed["data"][0]["embedding"].get<std::vector<float>>();
    if (static_cast<int>(raw_vec.size()) != dimension_)
        throw DimensionMismatch("embedding '" + id_ + "' returned dimension " +
                                std::to_string(raw_vec.size()) + ", configured " +
                                std::to_string(dimension_));
    Vector v(dimension_);
    for (int i = 0; i < dimension_; ++i) v[i] = raw_vec[static_cast<size_t>(i)];
    const float n = v.norm();
    if (n > 0.0f) v /= n;
    return v;
}

Vector LiveEmbedder::embed_text(const std::string& text) { return embed("text", text); }
Vector LiveEmbedder::embed_image(const std::string& image_ref) { return embed("image", image_ref); }

}  // namespace kbvqa

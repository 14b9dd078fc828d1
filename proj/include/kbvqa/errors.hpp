#pragma once

#include <stdexcept>
#include <string>

namespace kbvqa {

// Backend failures
struct BackendUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MalformedResponse : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ReplayMiss : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ImageNotFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CorruptCacheEntry : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Data / schema failures
struct SchemaViolation : std::runtime_error {
    explicit SchemaViolation(const std::string& msg) : std::runtime_error(msg) {}
    SchemaViolation(const std::string& msg, size_t line_number)
        : std::runtime_error("line " + std::to_string(line_number) + ": " + msg),
          line(line_number) {}
    size_t line = 0;  // 0 when not tied to a file line
};
struct AnswerCardinalityViolation : SchemaViolation {
    using SchemaViolation::SchemaViolation;
};
struct MalformedCandidateFile : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MalformedOcrRecord : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Evaluation failures
struct CardinalityViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingSample : std::runtime_error {
    explicit MissingSample(const std::string& id)
        : std::runtime_error("no sample with id '" + id + "'"), sample_id(id) {}
    std::string sample_id;
};

// Index / configuration failures
struct EmptyIndex : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace kbvqa

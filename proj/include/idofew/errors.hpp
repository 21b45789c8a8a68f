#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace idofew {

// Base class for all library errors. Validation problems (bad config, bad
// input files, violated preconditions) derive from ValidationError; everything
// else that goes wrong at runtime derives from RuntimeError. The CLI maps the
// former to exit code 1 and the latter to exit code 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct RuntimeError : Error {
    using Error::Error;
};

struct MalformedRecord : ValidationError {
    std::size_t line_no;
    explicit MalformedRecord(std::size_t line, const std::string& what)
        : ValidationError("malformed record at line " + std::to_string(line) + ": " + what),
          line_no(line) {}
};

struct DuplicateId : ValidationError {
    std::string id;
    explicit DuplicateId(std::string doc_id)
        : ValidationError("duplicate document id \"" + doc_id + "\""), id(std::move(doc_id)) {}
};

struct EmptyCorpus : ValidationError {
    EmptyCorpus() : ValidationError("corpus is empty") {}
};

struct NotEnoughLabels : ValidationError {
    std::size_t available, requested;
    NotEnoughLabels(std::size_t avail, std::size_t req)
        : ValidationError("not enough labeled documents: have " + std::to_string(avail) +
                          ", need " + std::to_string(req)),
          available(avail),
          requested(req) {}
};

struct TooFewDocuments : ValidationError {
    TooFewDocuments(std::size_t n_docs, std::size_t k)
        : ValidationError("too few documents: " + std::to_string(n_docs) + " < k = " +
                          std::to_string(k)) {}
};

struct TooFewPoints : ValidationError {
    TooFewPoints(std::size_t n_points, std::size_t k)
        : ValidationError("too few points: " + std::to_string(n_points) + " < k = " +
                          std::to_string(k)) {}
};

struct InvalidDistribution : ValidationError {
    using ValidationError::ValidationError;
};

struct DimensionMismatch : ValidationError {
    using ValidationError::ValidationError;
};

struct MissingEmbedding : ValidationError {
    std::string id;
    explicit MissingEmbedding(std::string doc_id)
        : ValidationError("no embedding for document id \"" + doc_id + "\""),
          id(std::move(doc_id)) {}
};

struct LabelOutOfRange : ValidationError {
    using ValidationError::ValidationError;
};

struct LengthMismatch : ValidationError {
    using ValidationError::ValidationError;
};

struct EmptyInput : ValidationError {
    using ValidationError::ValidationError;
};

struct ConfigError : ValidationError {
    using ValidationError::ValidationError;
};

struct IoError : RuntimeError {
    using RuntimeError::RuntimeError;
};

}  // namespace idofew

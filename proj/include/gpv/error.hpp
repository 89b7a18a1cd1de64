#pragma once

#include <stdexcept>
#include <string>

namespace gpv {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
    validation,        // bad input, schema violation, precondition failure
    backend,           // chat-model transport or fixture failure
    missing_artifact,  // a prior pipeline stage has not been run
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class BackendError : public Error {
public:
    explicit BackendError(const std::string& what) : Error(ErrorKind::backend, what) {}
};

/// Retries exhausted against a remote inference server.
class TransportError : public BackendError {
public:
    TransportError(const std::string& what, int attempts)
        : BackendError(what), attempts_(attempts) {}
    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

/// Replay mode was asked for a request that has no recorded response.
class FixtureMissError : public BackendError {
public:
    FixtureMissError(const std::string& request_digest)
        : BackendError("no replay fixture for request " + request_digest),
          digest_(request_digest) {}
    const std::string& request_digest() const noexcept { return digest_; }

private:
    std::string digest_;
};

/// The model produced a label outside the requested label set.
class UnparseableLabelError : public Error {
public:
    explicit UnparseableLabelError(std::string raw)
        : Error(ErrorKind::validation, "unparseable label: \"" + raw + "\""), raw_(std::move(raw)) {}
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

class MissingArtifactError : public Error {
public:
    explicit MissingArtifactError(const std::string& what) : Error(ErrorKind::missing_artifact, what) {}
};

int exit_code(ErrorKind kind) noexcept;

}  // namespace gpv

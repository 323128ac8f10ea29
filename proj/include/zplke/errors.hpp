#pragma once

#include <stdexcept>
#include <string>

namespace zplke {

// Input rows that cannot be parsed (carries the 1-based line number when known).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, long line = -1)
        : std::runtime_error(line >= 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

// Domain invariant violations (empty fields, mixed relations, bad spans, ...).
class ValidationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Alternative sampling could not satisfy the exclusion rules.
class SamplingError : public std::runtime_error {
public:
    SamplingError(const std::string& msg, std::string relation_id, std::size_t shortfall)
        : std::runtime_error(msg), relation_id_(std::move(relation_id)), shortfall_(shortfall) {}
    const std::string& relation_id() const { return relation_id_; }
    std::size_t shortfall() const { return shortfall_; }

private:
    std::string relation_id_;
    std::size_t shortfall_;
};

// Transport-level failure talking to a remote backend; retryable.
class BackendError : public std::runtime_error {
public:
    BackendError(const std::string& msg, int attempts)
        : std::runtime_error(msg + " (after " + std::to_string(attempts) + " attempt(s))"),
          attempts_(attempts) {}
    int attempts() const { return attempts_; }

private:
    int attempts_;
};

// Backend replied but the payload violates the wire contract.
class ProtocolError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Backend does not support the requested operation.
class CapabilityError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Run-configuration file problems.
class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Token spans could not be aligned to a prompt's recorded character spans.
class AlignmentError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace zplke

#pragma once

#include <stdexcept>
#include <string>

namespace probcoh {

// Failure classes. The CLI maps each class onto a distinct exit code.
enum class ErrorKind {
    validation,
    network,
    infeasible_fit,
    io,
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

// A judgment needed by an identity is absent from the table.
class MissingJudgmentError : public ValidationError {
public:
    MissingJudgmentError(std::string pair_id, std::string query, long rep, const std::string& what)
        : ValidationError(what), pair_id_(std::move(pair_id)), query_(std::move(query)), rep_(rep) {}

    const std::string& pair_id() const noexcept { return pair_id_; }
    const std::string& query() const noexcept { return query_; }
    long rep() const noexcept { return rep_; }  // -1 when not tied to a repetition

private:
    std::string pair_id_;
    std::string query_;
    long rep_;
};

class NetworkError : public Error {
public:
    explicit NetworkError(const std::string& what) : Error(ErrorKind::network, what) {}
};

class AuthenticationError : public NetworkError {
public:
    explicit AuthenticationError(const std::string& what) : NetworkError(what) {}
};

class ExhaustedRetriesError : public NetworkError {
public:
    ExhaustedRetriesError(int last_status, const std::string& what)
        : NetworkError(what), last_status_(last_status) {}

    // 0 when the last attempt failed below HTTP (timeout, connection).
    int last_status() const noexcept { return last_status_; }

private:
    int last_status_;
};

class MalformedResponseError : public NetworkError {
public:
    explicit MalformedResponseError(const std::string& what) : NetworkError(what) {}
};

// Replay mode asked for a request that the fixture does not contain.
class ReplayMissError : public NetworkError {
public:
    explicit ReplayMissError(const std::string& what) : NetworkError(what) {}
};

class InfeasibleFitError : public Error {
public:
    explicit InfeasibleFitError(const std::string& what) : Error(ErrorKind::infeasible_fit, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

} // namespace probcoh

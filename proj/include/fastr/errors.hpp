#pragma once

#include <stdexcept>
#include <string>

namespace fastr {

/// Error categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
    other = 1,
    validation = 2,
    numeric = 3,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Shape mismatch between operands.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

/// Invalid configuration value (model spec, fit config, basis sizes, ...).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

/// Input violates a documented precondition (e.g. asymmetric matrix).
class ContractError : public Error {
public:
    explicit ContractError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

/// Data ingestion or schema failure; messages name the row and/or column.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

/// Requested degrees of freedom cannot be attained by the smoother.
class InfeasibleDfError : public Error {
public:
    explicit InfeasibleDfError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class NotPositiveDefiniteError : public Error {
public:
    explicit NotPositiveDefiniteError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t epoch, std::size_t step)
        : Error(ErrorKind::numeric, what), epoch_(epoch), step_(step) {}
    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t epoch_;
    std::size_t step_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::other, what) {}
};

} // namespace fastr

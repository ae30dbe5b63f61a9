#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qtriage {

/// Failure category; the CLI maps each category onto an exit status.
enum class ErrorKind { Argument, Parse, Validation, Stratification, Training, Config, Io };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ArgumentError : Error {
    explicit ArgumentError(const std::string& what) : Error(ErrorKind::Argument, what) {}
};

/// Malformed input record. `line` is 1-based, 0 when not line-addressable.
struct ParseError : Error {
    ParseError(std::size_t line, const std::string& what)
        : Error(ErrorKind::Parse, line ? "line " + std::to_string(line) + ": " + what : what), line(line) {}
    std::size_t line;
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

struct StratificationError : Error {
    explicit StratificationError(const std::string& what) : Error(ErrorKind::Stratification, what) {}
};

/// Degenerate training input (e.g. a single distinct label for a discriminative learner).
struct TrainingError : Error {
    explicit TrainingError(const std::string& what) : Error(ErrorKind::Training, what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

}  // namespace qtriage

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace top {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Content, history, stage set or metric disagree on text vs image.
class ModalityError : public Error {
public:
    using Error::Error;
};

/// A metric needs data the sample does not carry (embedding, logprobs, ...).
class MissingDataError : public Error {
public:
    using Error::Error;
};

/// The optimizer produced a NaN or infinite objective.
class NonFiniteError : public Error {
public:
    using Error::Error;
};

class ImageIoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Parse failure tied to a 1-based line of an input file.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Wraps a failure raised inside a pipeline stage with the stage's identity.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

} // namespace top

#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tokevolve {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file or record could not be parsed. Carries the location when known.
class ParseError : public Error {
public:
    ParseError(std::string source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what),
          source_(std::move(source)),
          line_(line) {}

    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string source_;
    std::size_t line_;
};

/// A tokenizer failed structural validation.
class ValidationError : public Error {
public:
    ValidationError(const std::string& what, std::vector<std::string> details)
        : Error(what), details_(std::move(details)) {}

    const std::vector<std::string>& details() const noexcept { return details_; }

private:
    std::vector<std::string> details_;
};

}  // namespace tokevolve

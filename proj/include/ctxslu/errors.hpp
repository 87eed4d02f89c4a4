#pragma once

#include <stdexcept>
#include <string>

namespace ctxslu {

// Every error raised by the library derives from Error so callers (the CLI in
// particular) can map categories onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error { using Error::Error; };
class IndexError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class StateError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };
class DeterminismError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class GenerationError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class VersionError : public Error { using Error::Error; };

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace ctxslu

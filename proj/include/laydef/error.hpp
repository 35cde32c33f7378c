#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace laydef {

// Base of every error the library raises. Callers that only care about
// "something went wrong" catch this; the CLI maps it to exit status 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input record. line is 1-based; 0 when not tied to a file line.
class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : Error(format(file, line, what)), file_(std::move(file)), line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& file, std::size_t line, const std::string& what) {
    std::string out = file.empty() ? std::string("<input>") : file;
    if (line > 0) out += ":" + std::to_string(line);
    return out + ": " + what;
  }

  std::string file_;
  std::size_t line_;
};

class DuplicateIdError : public Error {
 public:
  using Error::Error;
};

// A reference to something that should exist (an id, a run, a point) does not.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Asked for more items than are available.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConflictError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class EmptyOutputError : public Error {
 public:
  using Error::Error;
};

// A statistic that has no value for the given input (no tokens, no judgments).
class UndefinedInputError : public Error {
 public:
  using Error::Error;
};

}  // namespace laydef

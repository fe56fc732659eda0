#ifndef DISCOEXPLORER_ERROR_HPP
#define DISCOEXPLORER_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace discoexplorer {

enum class ErrorKind {
  Format,      // malformed input file
  Alignment,   // relation does not fit the token data
  Integrity,   // internal model inconsistency
  Parse,       // DEQL syntax
  Validation,  // filter value not in inventory
  NotFound,    // unknown dataset
  Io,
};

inline const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Format: return "format_error";
    case ErrorKind::Alignment: return "alignment_error";
    case ErrorKind::Integrity: return "integrity_error";
    case ErrorKind::Parse: return "parse_error";
    case ErrorKind::Validation: return "validation_error";
    case ErrorKind::NotFound: return "not_found";
    case ErrorKind::Io: return "io_error";
  }
  return "error";
}

/// Base exception for everything the library reports. `detail` carries
/// machine-readable context (a file position, the allowed values of a filter).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message, std::string detail = {})
      : std::runtime_error(message), kind_(kind), detail_(std::move(detail)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

class FormatError : public Error {
 public:
  FormatError(std::string message, std::string source = {}, std::size_t line = 0,
              std::size_t column = 0)
      : Error(ErrorKind::Format, decorate(message, source, line, column), position(source, line, column)),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string position(const std::string& source, std::size_t line, std::size_t column) {
    std::string out = source;
    if (line > 0) {
      out += (out.empty() ? "line " : ":") + std::to_string(line);
      if (column > 0) out += ":" + std::to_string(column);
    }
    return out;
  }
  static std::string decorate(const std::string& message, const std::string& source, std::size_t line,
                              std::size_t column) {
    auto pos = position(source, line, column);
    return pos.empty() ? message : pos + ": " + message;
  }

  std::size_t line_;
  std::size_t column_;
};

class AlignmentError : public Error {
 public:
  explicit AlignmentError(std::string message, std::string detail = {})
      : Error(ErrorKind::Alignment, std::move(message), std::move(detail)) {}
};

class IntegrityError : public Error {
 public:
  explicit IntegrityError(std::string message) : Error(ErrorKind::Integrity, std::move(message)) {}
};

/// DEQL syntax error. `offset` is the byte offset into the query string.
class ParseError : public Error {
 public:
  ParseError(std::string message, std::size_t offset)
      : Error(ErrorKind::Parse, std::move(message), "offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string message, std::vector<std::string> allowed)
      : Error(ErrorKind::Validation, std::move(message), join(allowed)), allowed_(std::move(allowed)) {}

  const std::vector<std::string>& allowed() const noexcept { return allowed_; }

 private:
  static std::string join(const std::vector<std::string>& values) {
    std::string out = "allowed: ";
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out += ", ";
      out += values[i];
    }
    return out;
  }

  std::vector<std::string> allowed_;
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(std::string message) : Error(ErrorKind::NotFound, std::move(message)) {}
};

class IoError : public Error {
 public:
  explicit IoError(std::string message) : Error(ErrorKind::Io, std::move(message)) {}
};

}  // namespace discoexplorer

#endif  // DISCOEXPLORER_ERROR_HPP

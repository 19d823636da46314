#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sheetgram {

/// Broad failure classes. The C API and the HTTP service map these onto
/// status codes, so keep the list short.
enum class errc {
  invalid_argument,  // malformed input that is not a parse problem
  parse,             // formula, grammar, address or file syntax
  conflict,          // a command precondition failed; state is unchanged
  not_found,         // unknown session, attribute, rule ...
  io,
};

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

/// Syntax error with a 1-based line (0 when the input is a single line) and
/// a 1-based column into that line.
class parse_error : public error {
 public:
  parse_error(const std::string& what, std::size_t line, std::size_t column)
      : error(errc::parse, format(what, line, column)), message_(what), line_(line), column_(column) {}

  const std::string& message() const noexcept { return message_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    if (line == 0) return what + " (at position " + std::to_string(column) + ")";
    return what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")";
  }

  std::string message_;
  std::size_t line_;
  std::size_t column_;
};

/// A request whose shape is wrong: missing fields, wrong JSON types.
class bad_payload : public error {
 public:
  explicit bad_payload(const std::string& what) : error(errc::invalid_argument, what) {}
};

inline error conflict(const std::string& what) { return error(errc::conflict, what); }
inline error not_found(const std::string& what) { return error(errc::not_found, what); }
inline error invalid(const std::string& what) { return error(errc::invalid_argument, what); }

}  // namespace sheetgram

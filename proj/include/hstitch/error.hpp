#pragma once

#include <stdexcept>
#include <string>

namespace hstitch {

enum class ErrorKind {
  InvalidArgument,
  Format,
  Io,
  Numeric,
  MissingModel,
};

inline const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Format: return "format";
    case ErrorKind::Io: return "io";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::MissingModel: return "missing_model";
  }
  return "unknown";
}

// Every failure raised by the library carries a category so the CLI can emit
// a one-line machine-parsable error.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, const std::string& what,
                    ErrorKind kind = ErrorKind::InvalidArgument) {
  if (!cond) throw Error(kind, what);
}

}  // namespace hstitch

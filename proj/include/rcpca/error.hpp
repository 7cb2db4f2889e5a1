#pragma once

#include <stdexcept>
#include <string>

namespace rcpca {

enum class ErrorKind {
  Argument,
  Config,
  Io,
  Parse,
  Dimension,
  DegenerateColumn,
  ModeBInfeasible,
  NonContributingBlock,
  SingularGradient,
  BadStart,
  UndefinedContributions,
  Catalog,
  UnsupportedVerification,
  NonConvergence,
  Internal,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Argument: return "argument error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Io: return "io error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::DegenerateColumn: return "degenerate-column error";
    case ErrorKind::ModeBInfeasible: return "mode-b-infeasible error";
    case ErrorKind::NonContributingBlock: return "non-contributing-block error";
    case ErrorKind::SingularGradient: return "singular-gradient error";
    case ErrorKind::BadStart: return "bad-start error";
    case ErrorKind::UndefinedContributions: return "undefined-contributions error";
    case ErrorKind::Catalog: return "catalog error";
    case ErrorKind::UnsupportedVerification: return "unsupported-verification error";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::Internal: return "internal assertion";
  }
  return "error";
}

}  // namespace rcpca

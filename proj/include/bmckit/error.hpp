#pragma once

#include <stdexcept>
#include <string>

namespace bmckit {

enum class ErrorKind {
  NotStochastic,
  NotIrreducible,
  BadAlpha,
  ClusterTooSmall,
  NoConvergence,
  NoMixing,
  DegenerateVectors,
  FactorizationBreakdown,
  EmptyEmbedding,
  NoCenters,
  DegenerateSplit,
  EigenFailure,
  NormalizeUndefined,
  Config,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

const char* error_kind_name(ErrorKind kind);

// Exit-code mapping used by the CLI: 2 for configuration/input problems,
// 3 for numerical failures.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Io:
    case ErrorKind::NotStochastic:
    case ErrorKind::NotIrreducible:
    case ErrorKind::BadAlpha:
    case ErrorKind::ClusterTooSmall:
      return 2;
    default:
      return 3;
  }
}

}  // namespace bmckit

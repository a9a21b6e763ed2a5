#pragma once

#include <stdexcept>
#include <string>

namespace oamlink {

enum class ErrorKind {
  InvalidMode,
  Parameter,
  EmptySubspace,
  InvalidProjector,
  InsufficientSpan,
  UndefinedCorrelation,
  IncompleteSettings,
  RankDeficiency,
  EmptyDiagonal,
  Config,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so that callers
/// (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace oamlink

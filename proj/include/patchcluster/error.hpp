#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace patchcluster {

enum class ErrorKind {
  Config,
  Schema,
  MalformedDiff,
  HunkMismatch,
  Workspace,
  ResultParse,
  ExternalStrategy,
  UnknownPatch,
  MissingLabel,
  NoMixedClusters,
  InvariantViolation,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. The kind selects the CLI exit code;
/// the stage tag is filled in by the pipeline when the error crosses a stage
/// boundary.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const {
    Error tagged(kind_, "[" + stage + "] " + what());
    tagged.stage_ = std::move(stage);
    return tagged;
  }

 private:
  ErrorKind kind_;
  std::string stage_;
};

/// 2 = configuration/input error, 3 = adapter/protocol error,
/// 4 = internal invariant violation.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace patchcluster

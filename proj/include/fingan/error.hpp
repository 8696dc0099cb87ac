#pragma once

#include <stdexcept>
#include <string>

namespace fingan {

enum class ErrorCode {
  InvalidArgument = 1,
  Io,
  MissingColumn,
  UnparseableNumeric,
  UnknownCategory,
  EmptyFile,
  SchemaMismatch,
  DegenerateClass,
  TooFewSamples,
  ShapeMismatch,
  NonFiniteInput,
  NonFiniteGradient,
  NonFiniteLoss,
  EmptyMinority,
  InvalidOneHot,
  NoDiscreteColumns,
  SolverStall,
  LengthMismatch,
  UndefinedMetric,
  NotATree,
  Serialization,
};

const char* to_string(ErrorCode code) noexcept;

// All library failures are reported through this exception; the C API maps
// the code onto its status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace fingan

#pragma once

#include <stdexcept>
#include <string>

namespace jdsem {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  GapInParamIndices,
  AsymmetricEntryMap,
  NonzeroBDiagonal,
  SingularPsi,
  NotPositiveDefinite,
  NonOrthonormalF,
  InitNotPD,
  AllStartsFailed,
  EmptyCandidateList,
  NonUniformGrid,
  MalformedRow,
  TooFewRows,
  ParseError,
  IoError,
};

[[nodiscard]] const char* to_string(ErrorCode code) noexcept;

// Numerical failures map to CLI exit code 3, everything else to 2.
[[nodiscard]] bool is_numerical(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace jdsem

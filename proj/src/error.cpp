#include "jdsem/error.hpp"

namespace jdsem {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::GapInParamIndices: return "GapInParamIndices";
    case ErrorCode::AsymmetricEntryMap: return "AsymmetricEntryMap";
    case ErrorCode::NonzeroBDiagonal: return "NonzeroBDiagonal";
    case ErrorCode::SingularPsi: return "SingularPsi";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NonOrthonormalF: return "NonOrthonormalF";
    case ErrorCode::InitNotPD: return "InitNotPD";
    case ErrorCode::AllStartsFailed: return "AllStartsFailed";
    case ErrorCode::EmptyCandidateList: return "EmptyCandidateList";
    case ErrorCode::NonUniformGrid: return "NonUniformGrid";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::SingularPsi:
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::InitNotPD:
    case ErrorCode::AllStartsFailed:
      return true;
    default:
      return false;
  }
}

}  // namespace jdsem

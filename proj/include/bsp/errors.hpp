#pragma once

#include <stdexcept>
#include <string>

namespace bsp {

// Base class for every error raised by the library. Callers that only care
// about "something went wrong" can catch this; tests match the leaf types.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BSP_DEFINE_ERROR(Name)                                     \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

// sparse-linalg
BSP_DEFINE_ERROR(NotPositiveDefinite);
BSP_DEFINE_ERROR(DimensionMismatch);
BSP_DEFINE_ERROR(ShapeViolation);
BSP_DEFINE_ERROR(RankDeficientAugmentation);
BSP_DEFINE_ERROR(InvalidMatrix);

// belief / sparsify
BSP_DEFINE_ERROR(LayoutMismatch);
BSP_DEFINE_ERROR(InvalidSpec);

// decision
BSP_DEFINE_ERROR(IndexOutOfRange);
BSP_DEFINE_ERROR(LengthMismatch);
BSP_DEFINE_ERROR(DegenerateInput);

// bounds
BSP_DEFINE_ERROR(DisconnectedGraph);
BSP_DEFINE_ERROR(NotRankOne);
BSP_DEFINE_ERROR(AlphaTooSmall);
BSP_DEFINE_ERROR(InconsistentBounds);

// scenario / io
BSP_DEFINE_ERROR(InfeasibleConfig);
BSP_DEFINE_ERROR(IoError);
BSP_DEFINE_ERROR(SchemaError);

#undef BSP_DEFINE_ERROR

// Raised by solve() when a single candidate fails; carries the candidate id.
class CandidateError : public Error {
 public:
  CandidateError(int candidate_id, const std::string& what)
      : Error("candidate " + std::to_string(candidate_id) + ": " + what),
        candidate_id_(candidate_id) {}
  int candidateId() const { return candidate_id_; }

 private:
  int candidate_id_;
};

}  // namespace bsp

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace forge {

enum class ErrorCode {
  kInvalidArgument,
  kCapExceeded,
  kBudgetExceeded,
  kScheduleViolation,
  kEvenN,
  kWidthMismatch,
  kShapeMismatch,
  kSupportMismatch,
  kAbsoluteContinuityViolated,
  kInvalidTargetSet,
  kEmptyFamily,
  kEmptyConsistentSet,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kCapExceeded: return "CapExceeded";
    case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
    case ErrorCode::kScheduleViolation: return "ScheduleViolation";
    case ErrorCode::kEvenN: return "EvenN";
    case ErrorCode::kWidthMismatch: return "WidthMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kSupportMismatch: return "SupportMismatch";
    case ErrorCode::kAbsoluteContinuityViolated: return "AbsoluteContinuityViolated";
    case ErrorCode::kInvalidTargetSet: return "InvalidTargetSet";
    case ErrorCode::kEmptyFamily: return "EmptyFamily";
    case ErrorCode::kEmptyConsistentSet: return "EmptyConsistentSet";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when an exhaustive computation would exceed its configured cap.
/// `required` is the state count the computation needed (saturating).
class CapExceeded : public Error {
 public:
  CapExceeded(const std::string& what, std::uint64_t required, std::uint64_t cap)
      : Error(ErrorCode::kCapExceeded, what + " (required " + std::to_string(required) +
                                           ", cap " + std::to_string(cap) + ")"),
        required_(required),
        cap_(cap) {}
  std::uint64_t required() const { return required_; }
  std::uint64_t cap() const { return cap_; }

 private:
  std::uint64_t required_;
  std::uint64_t cap_;
};

inline constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 24;

/// 2^bits, saturating at UINT64_MAX.
inline std::uint64_t pow2_saturating(std::uint64_t bits) {
  return bits >= 64 ? UINT64_MAX : (std::uint64_t{1} << bits);
}

}  // namespace forge

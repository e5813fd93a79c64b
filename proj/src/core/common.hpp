#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tega {

enum class ErrorCode {
  kInvalidArgument = 1,
  kDimensionMismatch,
  kNoContact,
  kCalibration,
  kUnknownObject,
  kIo,
  kParse,
  kReplayMismatch,
};

// All recoverable failures in the core surface as tega::Error; the C API maps
// the code onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class Finger { kThumb = 0, kIndex = 1, kMiddle = 2, kRing = 3 };

inline constexpr std::size_t kFingerCount = 4;
inline constexpr std::array<Finger, kFingerCount> kAllFingers = {
    Finger::kThumb, Finger::kIndex, Finger::kMiddle, Finger::kRing};

std::string_view finger_name(Finger f);
Finger parse_finger(std::string_view name);
inline std::size_t finger_slot(Finger f) { return static_cast<std::size_t>(f); }

std::string_view version();

}  // namespace tega

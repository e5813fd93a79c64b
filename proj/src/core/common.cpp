#include "core/common.hpp"

namespace tega {

namespace {
constexpr std::array<std::string_view, kFingerCount> kFingerNames = {
    "thumb", "index", "middle", "ring"};
}

std::string_view finger_name(Finger f) { return kFingerNames[finger_slot(f)]; }

Finger parse_finger(std::string_view name) {
  for (std::size_t i = 0; i < kFingerCount; ++i) {
    if (kFingerNames[i] == name) return kAllFingers[i];
  }
  throw Error(ErrorCode::kParse, "unknown finger '" + std::string(name) + "'");
}

std::string_view version() { return TEGA_VERSION_STRING; }

}  // namespace tega

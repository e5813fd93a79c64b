#pragma once

#include <filesystem>
#include <vector>

#include "core/trial.hpp"
#include "core/wire.hpp"

namespace tega {

// Object library: JSON array of objects; crush_force null means rigid.
Json object_to_json(const ObjectSpec& o);
ObjectSpec object_from_json(const Json& j);
Json objects_to_json(const std::vector<ObjectSpec>& objects);
std::vector<ObjectSpec> objects_from_json(const Json& j);

// Full trial configuration. Reading starts from `base` and overwrites only the
// keys present; unknown keys are rejected. The result is not validated.
Json trial_config_to_json(const TrialConfig& c);
TrialConfig trial_config_from_json(const Json& j, TrialConfig base = {});

// Helper for strict nested-object parsing.
class JsonReader {
 public:
  JsonReader(const Json& j, std::string path);
  ~JsonReader() = default;

  template <typename T>
  bool read(const char* key, T& out) {
    const Json* v = find(key);
    if (!v) return false;
    try {
      out = v->get<T>();
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::kParse, path_ + "." + key + ": " + ex.what());
    }
    return true;
  }
  const Json* find(const char* key);
  std::string child(const char* key) const { return path_ + "." + key; }
  // Throws on keys never looked up.
  void finish() const;

 private:
  const Json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

}  // namespace tega

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "core/tactile.hpp"

namespace tega {

// Raw frame record: little-endian u32 width, u32 height, then width*height RGB
// byte triples, row-major.
void write_raw_frame(std::ostream& out, const TactileFrame& frame);
TactileFrame read_raw_frame(std::istream& in, Finger finger, double timestamp);

// Binary PPM (P6, maxval 255).
void write_ppm(const std::filesystem::path& path, const TactileFrame& frame);
TactileFrame read_ppm(const std::filesystem::path& path, Finger finger, double timestamp);

enum class FrameKind { kBaseline, kFrame };

// One line of a recorded-stream manifest. `offset` is set for frames stored in
// a raw stream file and absent for one-file-per-frame (PPM) storage.
struct ManifestEntry {
  double t = 0.0;
  Finger finger = Finger::kThumb;
  FrameKind kind = FrameKind::kFrame;
  std::string file;
  std::optional<std::uint64_t> offset;

  bool operator==(const ManifestEntry&) const = default;
};

std::string manifest_line(const ManifestEntry& entry);
ManifestEntry parse_manifest_line(const std::string& line);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
TactileFrame load_frame(const ManifestEntry& entry, const std::filesystem::path& base_dir);

enum class FrameStorage { kRawStream, kPpmDirectory };

// Appends frames to a directory together with its manifest.
class FrameRecorder {
 public:
  FrameRecorder(std::filesystem::path dir, FrameStorage storage);

  void record(const TactileFrame& frame, FrameKind kind);
  void flush();

  static constexpr const char* kManifestName = "frames_manifest.jsonl";
  static constexpr const char* kStreamName = "frames.bin";

 private:
  std::filesystem::path dir_;
  FrameStorage storage_;
  std::ofstream manifest_;
  std::ofstream stream_;
  std::uint64_t offset_ = 0;
  std::uint64_t count_ = 0;
};

}  // namespace tega

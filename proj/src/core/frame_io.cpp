#include "core/frame_io.hpp"

#include <array>
#include <cstdio>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace tega {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                 static_cast<char>((v >> 16) & 0xff),
                                 static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), b.size());
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), b.size())) {
    throw Error(ErrorCode::kIo, "truncated raw frame header");
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

// Frames larger than this are rejected as corrupt headers.
constexpr std::uint32_t kMaxSide = 4096;

std::string kind_name(FrameKind kind) {
  return kind == FrameKind::kBaseline ? "baseline" : "frame";
}

}  // namespace

void write_raw_frame(std::ostream& out, const TactileFrame& frame) {
  if (frame.rgb.size() != 3 * frame.pixel_count()) {
    throw Error(ErrorCode::kDimensionMismatch, "frame buffer does not match its size");
  }
  put_u32(out, static_cast<std::uint32_t>(frame.width));
  put_u32(out, static_cast<std::uint32_t>(frame.height));
  out.write(reinterpret_cast<const char*>(frame.rgb.data()),
            static_cast<std::streamsize>(frame.rgb.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing raw frame");
}

TactileFrame read_raw_frame(std::istream& in, Finger finger, double timestamp) {
  TactileFrame f;
  f.finger = finger;
  f.timestamp = timestamp;
  const std::uint32_t w = get_u32(in);
  const std::uint32_t h = get_u32(in);
  if (w == 0 || h == 0 || w > kMaxSide || h > kMaxSide) {
    throw Error(ErrorCode::kParse, "implausible raw frame size " + std::to_string(w) + "x" +
                                       std::to_string(h));
  }
  f.width = static_cast<int>(w);
  f.height = static_cast<int>(h);
  f.rgb.resize(3 * f.pixel_count());
  if (!in.read(reinterpret_cast<char*>(f.rgb.data()),
               static_cast<std::streamsize>(f.rgb.size()))) {
    throw Error(ErrorCode::kIo, "truncated raw frame payload");
  }
  return f;
}

void write_ppm(const std::filesystem::path& path, const TactileFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  out << "P6\n" << frame.width << ' ' << frame.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.rgb.data()),
            static_cast<std::streamsize>(frame.rgb.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

TactileFrame read_ppm(const std::filesystem::path& path, Finger finger, double timestamp) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  auto token = [&in, &path]() {
    std::string tok;
    while (in) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      in >> tok;
      break;
    }
    if (tok.empty()) throw Error(ErrorCode::kParse, "truncated PPM header in " + path.string());
    return tok;
  };
  if (token() != "P6") throw Error(ErrorCode::kParse, path.string() + " is not a P6 PPM");
  TactileFrame f;
  f.finger = finger;
  f.timestamp = timestamp;
  try {
    f.width = std::stoi(token());
    f.height = std::stoi(token());
    if (std::stoi(token()) != 255) {
      throw Error(ErrorCode::kParse, "only 8-bit PPM is supported");
    }
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kParse, "malformed PPM header in " + path.string());
  }
  if (f.width <= 0 || f.height <= 0 || f.width > static_cast<int>(kMaxSide) ||
      f.height > static_cast<int>(kMaxSide)) {
    throw Error(ErrorCode::kParse, "implausible PPM size in " + path.string());
  }
  in.get();  // single whitespace byte after maxval
  f.rgb.resize(3 * f.pixel_count());
  if (!in.read(reinterpret_cast<char*>(f.rgb.data()),
               static_cast<std::streamsize>(f.rgb.size()))) {
    throw Error(ErrorCode::kIo, "truncated PPM payload in " + path.string());
  }
  return f;
}

std::string manifest_line(const ManifestEntry& e) {
  nlohmann::ordered_json j;
  j["t"] = e.t;
  j["finger"] = finger_name(e.finger);
  j["kind"] = kind_name(e.kind);
  j["file"] = e.file;
  if (e.offset) j["offset"] = *e.offset;
  return j.dump();
}

ManifestEntry parse_manifest_line(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    ManifestEntry e;
    e.t = j.at("t").get<double>();
    e.finger = parse_finger(j.at("finger").get<std::string>());
    const std::string kind = j.value("kind", std::string("frame"));
    if (kind == "baseline") {
      e.kind = FrameKind::kBaseline;
    } else if (kind == "frame") {
      e.kind = FrameKind::kFrame;
    } else {
      throw Error(ErrorCode::kParse, "unknown frame kind '" + kind + "'");
    }
    e.file = j.at("file").get<std::string>();
    if (j.contains("offset")) e.offset = j.at("offset").get<std::uint64_t>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kParse, std::string("bad manifest line: ") + ex.what());
  }
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + path.string());
  std::vector<ManifestEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_manifest_line(line));
  }
  return out;
}

TactileFrame load_frame(const ManifestEntry& entry, const std::filesystem::path& base_dir) {
  const std::filesystem::path path = base_dir / entry.file;
  if (!entry.offset) return read_ppm(path, entry.finger, entry.t);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  in.seekg(static_cast<std::streamoff>(*entry.offset));
  if (!in) throw Error(ErrorCode::kIo, "bad offset into " + path.string());
  return read_raw_frame(in, entry.finger, entry.t);
}

FrameRecorder::FrameRecorder(std::filesystem::path dir, FrameStorage storage)
    : dir_(std::move(dir)), storage_(storage) {
  std::filesystem::create_directories(dir_);
  manifest_.open(dir_ / kManifestName, std::ios::trunc);
  if (!manifest_) throw Error(ErrorCode::kIo, "cannot create frame manifest in " + dir_.string());
  if (storage_ == FrameStorage::kRawStream) {
    stream_.open(dir_ / kStreamName, std::ios::binary | std::ios::trunc);
    if (!stream_) throw Error(ErrorCode::kIo, "cannot create frame stream in " + dir_.string());
  } else {
    std::filesystem::create_directories(dir_ / "frames");
  }
}

void FrameRecorder::record(const TactileFrame& frame, FrameKind kind) {
  ManifestEntry e;
  e.t = frame.timestamp;
  e.finger = frame.finger;
  e.kind = kind;
  if (storage_ == FrameStorage::kRawStream) {
    e.file = kStreamName;
    e.offset = offset_;
    write_raw_frame(stream_, frame);
    offset_ += 8 + frame.rgb.size();
  } else {
    char name[64];
    std::snprintf(name, sizeof(name), "frames/%07llu_%s.ppm",
                  static_cast<unsigned long long>(count_),
                  std::string(finger_name(frame.finger)).c_str());
    e.file = name;
    write_ppm(dir_ / e.file, frame);
  }
  ++count_;
  manifest_ << manifest_line(e) << '\n';
}

void FrameRecorder::flush() {
  manifest_.flush();
  if (stream_.is_open()) stream_.flush();
  if (!manifest_ || (stream_.is_open() && !stream_)) {
    throw Error(ErrorCode::kIo, "failed flushing recorded frames");
  }
}

}  // namespace tega

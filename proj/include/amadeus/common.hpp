/// @file
/// @brief Shared basics: time grid constants, errors, deterministic RNG helpers.
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace amadeus {

// Time is measured in whole-note units everywhere. The default quantization
// grid is a semiquaver; finer grids (e.g. 1/32) are a configuration option.
inline constexpr double kDefaultGrid = 1.0 / 16.0;

// Playable piano range, MIDI note numbers A0..C8.
inline constexpr int kMinMidiPitch = 21;
inline constexpr int kMaxMidiPitch = 108;
inline constexpr int kNumPitches = 88;

// Pitch-class indices used by the stream symbols and one-hot frames:
// 0..87 playable (MIDI pitch - 21), then the two special classes.
inline constexpr int kSustainClass = 88;
inline constexpr int kRestClass = 89;
inline constexpr int kPitchClasses = 90;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t byte_offset)
      : std::runtime_error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
        offset(byte_offset) {}
  std::size_t offset;
};

using WarningSink = std::vector<std::string>;

inline void warn(WarningSink* sink, std::string msg) {
  if (sink) sink->push_back(std::move(msg));
}

namespace rng {

// Hand-rolled draws on top of mt19937_64 so sampling is reproducible across
// standard libraries (std::uniform_*_distribution is implementation-defined).
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, bound) by rejection.
inline std::uint64_t uniform_below(std::mt19937_64& gen, std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = gen();
  } while (x >= limit);
  return x % bound;
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& gen) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(uniform_below(gen, i));
    std::swap(v[i - 1], v[j]);
  }
}

// Derives a stream seed from a master seed and a tag (splitmix64 mixing).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace rng

inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Shortest exact decimal for grid-aligned times (binary fractions print
// exactly under %g with enough significant digits).
inline std::string format_time(double t) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", t);
  return buf;
}

}  // namespace amadeus

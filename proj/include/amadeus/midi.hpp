/// @file
/// @brief Standard MIDI File ingestion: parsing, tempo normalization, grid
/// quantization, key estimation and transposition to a common key.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "amadeus/common.hpp"

namespace amadeus {

struct TimedNote {
  int pitch = 0;        // MIDI note number, kept within [21,108]
  double onset = 0.0;   // whole-note units
  double duration = 0.0;
};

inline bool note_order(const TimedNote& a, const TimedNote& b) {
  if (a.onset != b.onset) return a.onset < b.onset;
  if (a.pitch != b.pitch) return a.pitch > b.pitch;  // descending pitch at equal onset
  return a.duration < b.duration;
}

struct QuantizedTrack {
  std::string source_id;
  std::vector<TimedNote> notes;  // sorted by (onset, descending pitch)
  int key_offset = 0;            // semitone shift applied by transposition
};

enum class Mode { Major = 0, Minor = 1 };

struct KeyEstimate {
  int tonic = 0;  // pitch class 0..11, 0 = C
  Mode mode = Mode::Major;
};

namespace detail {

class MidiReader {
 public:
  MidiReader(std::span<const std::uint8_t> bytes) : data_(bytes) {}

  std::size_t pos() const { return pos_; }
  bool eof() const { return pos_ >= data_.size(); }

  std::uint8_t u8() {
    if (pos_ >= data_.size()) throw ParseError("unexpected end of file", pos_);
    return data_[pos_++];
  }
  std::uint8_t peek() const {
    if (pos_ >= data_.size()) throw ParseError("unexpected end of file", pos_);
    return data_[pos_];
  }
  std::uint16_t u16() { return static_cast<std::uint16_t>(u8() << 8 | u8()); }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = v << 8 | u8();
    return v;
  }
  // MIDI variable-length quantity, at most 4 bytes.
  std::uint32_t vlq() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      std::uint8_t b = u8();
      v = v << 7 | (b & 0x7f);
      if (!(b & 0x80)) return v;
    }
    throw ParseError("variable-length quantity longer than 4 bytes", pos_);
  }
  void skip(std::size_t n) {
    if (pos_ + n > data_.size()) throw ParseError("chunk overruns file", pos_);
    pos_ += n;
  }
  void expect_tag(const char* tag) {
    for (int i = 0; i < 4; ++i) {
      if (u8() != static_cast<std::uint8_t>(tag[i]))
        throw ParseError(std::string("expected chunk tag '") + tag + "'", pos_ - 1);
    }
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

struct RawNote {
  int pitch;
  std::int64_t on_tick;
  std::int64_t off_tick;
};

struct TempoEvent {
  std::int64_t tick;
  std::uint32_t us_per_quarter;
};

// Piecewise tick->microsecond conversion with the SMF default of 120 bpm.
class TempoMap {
 public:
  explicit TempoMap(std::vector<TempoEvent> events, int division) : division_(division) {
    std::stable_sort(events.begin(), events.end(),
                     [](const TempoEvent& a, const TempoEvent& b) { return a.tick < b.tick; });
    segments_.push_back({0, 0.0, 500000});
    for (const TempoEvent& e : events) {
      Segment& last = segments_.back();
      if (e.tick == last.tick) {
        last.us_per_quarter = e.us_per_quarter;
        continue;
      }
      double us = last.us_at + ticks_to_us(e.tick - last.tick, last.us_per_quarter);
      segments_.push_back({e.tick, us, e.us_per_quarter});
    }
  }

  double microseconds_at(std::int64_t tick) const {
    const Segment* seg = &segments_.front();
    for (const Segment& s : segments_) {
      if (s.tick > tick) break;
      seg = &s;
    }
    return seg->us_at + ticks_to_us(tick - seg->tick, seg->us_per_quarter);
  }

  // Whole-note units at the 120 bpm reference (one whole note = 2 s).
  double whole_notes_at(std::int64_t tick) const { return microseconds_at(tick) / 2e6; }

 private:
  struct Segment {
    std::int64_t tick;
    double us_at;
    std::uint32_t us_per_quarter;
  };
  double ticks_to_us(std::int64_t ticks, std::uint32_t us_per_quarter) const {
    return static_cast<double>(ticks) * us_per_quarter / division_;
  }
  int division_;
  std::vector<Segment> segments_;
};

}  // namespace detail

/// Parses an SMF format 0 or 1 file into a flat note list with absolute times
/// in whole-note units (tempo map applied at the 120 bpm reference). The
/// result is an unquantized intermediate; run quantize() before transcription.
inline QuantizedTrack parse_midi(std::span<const std::uint8_t> bytes, std::string source_id = "",
                                 WarningSink* warnings = nullptr) {
  detail::MidiReader r(bytes);
  r.expect_tag("MThd");
  std::uint32_t header_len = r.u32();
  if (header_len < 6) throw ParseError("MThd length must be at least 6", r.pos() - 4);
  std::uint16_t format = r.u16();
  std::uint16_t ntrks = r.u16();
  std::uint16_t division = r.u16();
  r.skip(header_len - 6);
  if (format > 1) throw ParseError("unsupported SMF format " + std::to_string(format), 8);
  if (division & 0x8000) throw ParseError("SMPTE time division is unsupported", 12);
  if (division == 0) throw ParseError("time division must be positive", 12);

  std::vector<detail::RawNote> raw;
  std::vector<detail::TempoEvent> tempos;

  for (int trk = 0; trk < ntrks; ++trk) {
    r.expect_tag("MTrk");
    std::uint32_t len = r.u32();
    std::size_t track_end = r.pos() + len;
    if (track_end > bytes.size()) throw ParseError("track length overruns file", r.pos() - 4);

    std::int64_t tick = 0;
    std::uint8_t running_status = 0;
    // One sounding map per (channel, pitch) within this track.
    std::map<std::pair<int, int>, std::int64_t> sounding;
    bool ended = false;

    while (r.pos() < track_end && !ended) {
      tick += r.vlq();
      std::uint8_t status = r.peek();
      if (status & 0x80) {
        r.u8();
        if (status < 0xf0) running_status = status;
      } else {
        if (running_status == 0) throw ParseError("data byte without running status", r.pos());
        status = running_status;
      }

      auto close_note = [&](int channel, int pitch, std::int64_t off_tick) {
        auto it = sounding.find({channel, pitch});
        if (it == sounding.end()) {
          warn(warnings, source_id + ": note-off without matching note-on (pitch " +
                             std::to_string(pitch) + ")");
          return;
        }
        if (off_tick > it->second) {
          raw.push_back({pitch, it->second, off_tick});
        } else {
          warn(warnings, source_id + ": zero-length note dropped (pitch " + std::to_string(pitch) + ")");
        }
        sounding.erase(it);
      };

      switch (status & 0xf0) {
        case 0x80: {
          int pitch = r.u8() & 0x7f;
          r.u8();
          close_note(status & 0x0f, pitch, tick);
          break;
        }
        case 0x90: {
          int pitch = r.u8() & 0x7f;
          int vel = r.u8() & 0x7f;
          int channel = status & 0x0f;
          if (vel == 0) {
            close_note(channel, pitch, tick);
          } else {
            // Re-strike while sounding closes the previous note here.
            if (sounding.count({channel, pitch})) close_note(channel, pitch, tick);
            sounding[{channel, pitch}] = tick;
          }
          break;
        }
        case 0xa0:
        case 0xb0:
        case 0xe0:
          r.skip(2);
          break;
        case 0xc0:
        case 0xd0:
          r.skip(1);
          break;
        case 0xf0: {
          if (status == 0xf0 || status == 0xf7) {
            std::uint32_t n = r.vlq();
            r.skip(n);
          } else if (status == 0xff) {
            std::uint8_t type = r.u8();
            std::uint32_t n = r.vlq();
            if (type == 0x51) {
              if (n != 3) throw ParseError("tempo meta event must carry 3 bytes", r.pos());
              std::uint32_t us = r.u8();
              us = us << 8 | r.u8();
              us = us << 8 | r.u8();
              tempos.push_back({tick, us});
            } else if (type == 0x2f) {
              r.skip(n);
              ended = true;
            } else {
              r.skip(n);
            }
          } else {
            throw ParseError("unsupported system message", r.pos() - 1);
          }
          break;
        }
        default:
          throw ParseError("invalid status byte", r.pos() - 1);
      }
    }

    for (auto& [key, on_tick] : sounding) {
      warn(warnings, source_id + ": note-on without note-off closed at end of track (pitch " +
                         std::to_string(key.second) + ")");
      if (tick > on_tick) raw.push_back({key.second, on_tick, tick});
    }
    if (r.pos() != track_end) r.skip(track_end - r.pos());
  }

  detail::TempoMap tempo_map(std::move(tempos), division);
  QuantizedTrack track;
  track.source_id = std::move(source_id);
  int dropped = 0;
  for (const detail::RawNote& n : raw) {
    if (n.pitch < kMinMidiPitch || n.pitch > kMaxMidiPitch) {
      ++dropped;
      continue;
    }
    double onset = tempo_map.whole_notes_at(n.on_tick);
    double end = tempo_map.whole_notes_at(n.off_tick);
    if (end <= onset) continue;
    track.notes.push_back({n.pitch, onset, end - onset});
  }
  if (dropped > 0)
    warn(warnings, track.source_id + ": dropped " + std::to_string(dropped) +
                       " notes outside the 88-key range");
  std::sort(track.notes.begin(), track.notes.end(), note_order);
  return track;
}

inline QuantizedTrack parse_midi_file(const std::string& path, WarningSink* warnings = nullptr) {
  std::string bytes = read_file_bytes(path);
  std::string id = std::filesystem::path(path).stem().string();
  return parse_midi(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()),
                    id, warnings);
}

/// Snaps every onset and note end to the nearest grid point. Notes whose
/// snapped duration collapses to zero get one grid step; notes that land on
/// the same (onset, pitch) cell are merged keeping the longest duration.
inline QuantizedTrack quantize(const QuantizedTrack& track, double grid = kDefaultGrid,
                               WarningSink* warnings = nullptr) {
  if (grid <= 0) throw std::invalid_argument("quantize: grid must be positive");
  QuantizedTrack out;
  out.source_id = track.source_id;
  out.key_offset = track.key_offset;
  out.notes.reserve(track.notes.size());
  for (const TimedNote& n : track.notes) {
    double onset = std::round(n.onset / grid) * grid;
    double end = std::round((n.onset + n.duration) / grid) * grid;
    double duration = end - onset;
    if (duration <= 0) duration = grid;
    out.notes.push_back({n.pitch, onset, duration});
  }
  std::sort(out.notes.begin(), out.notes.end(), note_order);
  // Merge duplicates created by snapping.
  std::vector<TimedNote> merged;
  for (const TimedNote& n : out.notes) {
    if (!merged.empty() && merged.back().onset == n.onset && merged.back().pitch == n.pitch) {
      if (n.duration > merged.back().duration) merged.back().duration = n.duration;
      warn(warnings, out.source_id + ": merged duplicate note at onset " + format_time(n.onset) +
                         " (pitch " + std::to_string(n.pitch) + ")");
      continue;
    }
    merged.push_back(n);
  }
  out.notes = std::move(merged);
  return out;
}

namespace detail {

// Krumhansl-Kessler key profiles, indexed by scale degree from the tonic.
inline constexpr std::array<double, 12> kMajorProfile = {
    6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88};
inline constexpr std::array<double, 12> kMinorProfile = {
    6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17};

inline double profile_correlation(const std::array<double, 12>& hist,
                                  const std::array<double, 12>& profile, int tonic) {
  double hm = 0, pm = 0;
  for (int i = 0; i < 12; ++i) {
    hm += hist[i];
    pm += profile[i];
  }
  hm /= 12;
  pm /= 12;
  double num = 0, hv = 0, pv = 0;
  for (int i = 0; i < 12; ++i) {
    double dh = hist[i] - hm;
    double dp = profile[(i - tonic + 12) % 12] - pm;
    num += dh * dp;
    hv += dh * dh;
    pv += dp * dp;
  }
  if (hv == 0 || pv == 0) return 0.0;
  return num / std::sqrt(hv * pv);
}

}  // namespace detail

/// Estimates tonic and mode by correlating the duration-weighted pitch-class
/// histogram against the major/minor profiles; ties keep the first candidate
/// in (tonic, Major-then-Minor) scan order.
inline KeyEstimate estimate_key(const QuantizedTrack& track) {
  if (track.notes.empty()) throw std::invalid_argument("estimate_key: track is empty");
  std::array<double, 12> hist{};
  for (const TimedNote& n : track.notes) hist[n.pitch % 12] += n.duration;

  KeyEstimate best;
  double best_score = -2.0;
  for (int tonic = 0; tonic < 12; ++tonic) {
    for (Mode mode : {Mode::Major, Mode::Minor}) {
      const auto& profile = (mode == Mode::Major) ? detail::kMajorProfile : detail::kMinorProfile;
      double score = detail::profile_correlation(hist, profile, tonic);
      if (score > best_score) {
        best_score = score;
        best = {tonic, mode};
      }
    }
  }
  return best;
}

/// Shifts all pitches so the estimated tonic lands on C (major) or A (minor),
/// choosing the direction with the smaller |offset| (6-semitone ties go down)
/// and octave-folding any pitch pushed outside the 88-key range.
inline QuantizedTrack transpose_to_common_key(const QuantizedTrack& track, KeyEstimate key) {
  int target = (key.mode == Mode::Major) ? 0 : 9;
  int offset = (target - key.tonic + 18) % 12 - 6;
  QuantizedTrack out = track;
  out.key_offset = offset;
  for (TimedNote& n : out.notes) {
    n.pitch += offset;
    while (n.pitch < kMinMidiPitch) n.pitch += 12;
    while (n.pitch > kMaxMidiPitch) n.pitch -= 12;
  }
  std::sort(out.notes.begin(), out.notes.end(), note_order);
  return out;
}

// ---------------------------------------------------------------------------
// SMF writer: format 0, division 480, fixed 120 bpm.
// ---------------------------------------------------------------------------

inline constexpr int kWriterDivision = 480;
inline constexpr int kTicksPerWholeNote = kWriterDivision * 4;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v >> 24));
  out.push_back(static_cast<char>(v >> 16));
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

inline void put_vlq(std::string& out, std::uint32_t v) {
  char buf[4];
  int n = 0;
  buf[n++] = static_cast<char>(v & 0x7f);
  while (v >>= 7) buf[n++] = static_cast<char>(v & 0x7f | 0x80);
  while (n--) out.push_back(buf[n]);
}

}  // namespace detail

inline std::string write_midi(const QuantizedTrack& track) {
  struct Event {
    std::int64_t tick;
    int order;  // note-offs before note-ons at the same tick
    std::uint8_t status, d1, d2;
  };
  std::vector<Event> events;
  events.reserve(track.notes.size() * 2);
  for (const TimedNote& n : track.notes) {
    auto on = static_cast<std::int64_t>(std::llround(n.onset * kTicksPerWholeNote));
    auto off = static_cast<std::int64_t>(std::llround((n.onset + n.duration) * kTicksPerWholeNote));
    if (off <= on) off = on + 1;
    std::uint8_t pitch = static_cast<std::uint8_t>(n.pitch);
    events.push_back({on, 1, 0x90, pitch, 0x40});
    events.push_back({off, 0, 0x80, pitch, 0x40});
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.tick != b.tick) return a.tick < b.tick;
    return a.order < b.order;
  });

  std::string body;
  // Tempo 120 bpm (500000 us per quarter) at tick 0.
  body.append("\x00\xff\x51\x03\x07\xa1\x20", 7);
  std::int64_t cursor = 0;
  for (const Event& e : events) {
    detail::put_vlq(body, static_cast<std::uint32_t>(e.tick - cursor));
    cursor = e.tick;
    body.push_back(static_cast<char>(e.status));
    body.push_back(static_cast<char>(e.d1));
    body.push_back(static_cast<char>(e.d2));
  }
  body.append("\x00\xff\x2f\x00", 4);

  std::string out;
  out += "MThd";
  detail::put_u32(out, 6);
  out.append("\x00\x00\x00\x01", 4);  // format 0, one track
  out.push_back(static_cast<char>(kWriterDivision >> 8));
  out.push_back(static_cast<char>(kWriterDivision & 0xff));
  out += "MTrk";
  detail::put_u32(out, static_cast<std::uint32_t>(body.size()));
  out += body;
  return out;
}

inline void write_midi_file(const QuantizedTrack& track, const std::string& path) {
  write_file_bytes(path, write_midi(track));
}

}  // namespace amadeus

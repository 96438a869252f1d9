/// @file
/// @brief The multi-stream codec: transcription of quantized polyphonic
/// tracks into a fixed number of monophonic streams with Sustain/Rest
/// symbols, the inverse decoder, one-hot frame encoding, the line-oriented
/// text format, and the composition-space counting analytics.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "amadeus/common.hpp"
#include "amadeus/midi.hpp"

namespace amadeus {

using BigInt = boost::multiprecision::cpp_int;

// ---------------------------------------------------------------------------
// Duration vocabulary
// ---------------------------------------------------------------------------

class DurationVocab {
 public:
  DurationVocab() = default;
  DurationVocab(std::vector<double> durations, double grid = kDefaultGrid) : grid_(grid) {
    durations_ = std::move(durations);
    std::sort(durations_.begin(), durations_.end());
    durations_.erase(std::unique(durations_.begin(), durations_.end()), durations_.end());
    if (durations_.empty()) throw std::invalid_argument("duration vocabulary is empty");
    for (double d : durations_) {
      if (to_units(d) <= 0) throw std::invalid_argument("durations must be positive grid multiples");
    }
    rebuild_feasibility();
  }

  int size() const { return static_cast<int>(durations_.size()); }
  double grid() const { return grid_; }
  double d0() const { return durations_.front(); }
  double max() const { return durations_.back(); }
  double at(int i) const { return durations_.at(i); }
  const std::vector<double>& values() const { return durations_; }

  bool contains(double d) const {
    return std::find(durations_.begin(), durations_.end(), d) != durations_.end();
  }

  // Nearest vocabulary member; equidistant values take the shorter one.
  int snap_index(double d) const {
    int best = 0;
    double best_err = std::abs(durations_[0] - d);
    for (int i = 1; i < size(); ++i) {
      double err = std::abs(durations_[i] - d);
      if (err < best_err) {
        best = i;
        best_err = err;
      }
    }
    return best;
  }

  int index_of(double d) const {
    for (int i = 0; i < size(); ++i)
      if (durations_[i] == d) return i;
    throw std::invalid_argument("duration " + format_time(d) + " is not in the vocabulary");
  }

  // Whether `gap` is a sum of vocabulary durations (empty sum included).
  bool representable(double gap) const {
    std::int64_t u = to_units(gap);
    if (u < 0) return false;
    ensure_feasible_up_to(u);
    return feasible_[static_cast<std::size_t>(u)];
  }

  // Largest vocabulary duration <= gap whose remainder stays representable.
  // Throws when the gap cannot be tiled at all.
  double best_chunk(double gap) const {
    std::int64_t u = to_units(gap);
    ensure_feasible_up_to(u);
    for (int i = size() - 1; i >= 0; --i) {
      std::int64_t du = unit_durations_[i];
      if (du <= u && feasible_[static_cast<std::size_t>(u - du)]) return durations_[i];
    }
    throw std::runtime_error("rest gap of " + format_time(gap) +
                             " whole notes is not representable as a sum of vocabulary durations");
  }

  std::int64_t to_units(double t) const {
    auto u = static_cast<std::int64_t>(std::llround(t / grid_));
    if (std::abs(t - static_cast<double>(u) * grid_) > 1e-9)
      throw std::invalid_argument("time " + format_time(t) + " is not aligned to the grid");
    return u;
  }

 private:
  void rebuild_feasibility() {
    unit_durations_.clear();
    for (double d : durations_) unit_durations_.push_back(to_units(d));
    feasible_.assign(1, true);
  }
  void ensure_feasible_up_to(std::int64_t u) const {
    for (std::size_t t = feasible_.size(); t <= static_cast<std::size_t>(u); ++t) {
      bool ok = false;
      for (std::int64_t du : unit_durations_) {
        if (du <= static_cast<std::int64_t>(t) && feasible_[t - du]) {
          ok = true;
          break;
        }
      }
      feasible_.push_back(ok);
    }
  }

  std::vector<double> durations_;
  std::vector<std::int64_t> unit_durations_;
  mutable std::vector<bool> feasible_;
  double grid_ = kDefaultGrid;
};

struct RepresentationConfig {
  int n_s = 5;
  double grid = kDefaultGrid;
  DurationVocab vocab;
  static constexpr int n_p = kNumPitches;

  int n_d() const { return vocab.size(); }
  int frame_size() const { return n_s * (kPitchClasses + n_d()); }
};

/// Smallest high-frequency duration set covering `coverage` of the corpus
/// notes (most frequent first, ties to the shorter duration); the grid unit
/// itself is always included.
inline DurationVocab derive_duration_vocab(const std::vector<QuantizedTrack>& corpus,
                                           double coverage = 0.98, double grid = kDefaultGrid) {
  std::map<std::int64_t, std::int64_t> counts;
  std::int64_t total = 0;
  for (const QuantizedTrack& t : corpus) {
    for (const TimedNote& n : t.notes) {
      auto u = static_cast<std::int64_t>(std::llround(n.duration / grid));
      ++counts[u];
      ++total;
    }
  }
  if (total == 0) throw std::invalid_argument("cannot derive a duration vocabulary from an empty corpus");

  std::vector<std::pair<std::int64_t, std::int64_t>> classes(counts.begin(), counts.end());
  std::sort(classes.begin(), classes.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<double> picked = {grid};
  std::int64_t cum = 0;
  for (const auto& [units, count] : classes) {
    cum += count;
    picked.push_back(static_cast<double>(units) * grid);
    if (static_cast<double>(cum) >= coverage * static_cast<double>(total)) break;
  }
  return DurationVocab(std::move(picked), grid);
}

// ---------------------------------------------------------------------------
// Stream symbols and sequences
// ---------------------------------------------------------------------------

struct StreamSymbol {
  int pitch = kRestClass;  // 0..87 playable (midi - 21), 88 sustain, 89 rest
  int duration_index = 0;

  bool is_strike() const { return pitch < kSustainClass; }
  bool is_sustain() const { return pitch == kSustainClass; }
  bool is_rest() const { return pitch == kRestClass; }
};

struct NoteSet {
  double onset = 0.0;
  std::vector<StreamSymbol> symbols;  // exactly n_s entries, index 0 = lowest stream
};

struct MultiStreamSequence {
  RepresentationConfig config;
  std::vector<NoteSet> note_sets;
};

enum class OverflowPolicy { Error, DropLowest };

// ---------------------------------------------------------------------------
// Transcription
// ---------------------------------------------------------------------------

/// Converts a quantized track into note-sets. Note-set onsets follow the
/// timeline rule: the next onset is the earliest symbol end time beyond the
/// current one, so note ends and rest chunks open additional gap sets
/// between strikes. New strikes are sorted by descending pitch and fill the
/// free streams in ascending index order; rests always end exactly at the
/// next onset.
inline MultiStreamSequence transcribe(const QuantizedTrack& track,
                                      const RepresentationConfig& config,
                                      OverflowPolicy policy = OverflowPolicy::Error,
                                      WarningSink* warnings = nullptr) {
  MultiStreamSequence seq;
  seq.config = config;
  if (track.notes.empty()) return seq;

  struct Pending {
    int pitch;  // class 0..87
    double onset;
    int dur_index;
  };
  std::vector<Pending> notes;
  notes.reserve(track.notes.size());
  for (const TimedNote& n : track.notes) {
    if (n.pitch < kMinMidiPitch || n.pitch > kMaxMidiPitch)
      throw std::invalid_argument("pitch " + std::to_string(n.pitch) + " outside the 88-key range");
    config.vocab.to_units(n.onset);  // alignment check
    notes.push_back({n.pitch - kMinMidiPitch, n.onset, config.vocab.snap_index(n.duration)});
  }
  std::sort(notes.begin(), notes.end(), [](const Pending& a, const Pending& b) {
    if (a.onset != b.onset) return a.onset < b.onset;
    return a.pitch > b.pitch;
  });

  struct StreamState {
    bool active = false;
    double end = 0.0;
  };
  std::vector<StreamState> streams(config.n_s);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::size_t next_note = 0;
  double t = notes.front().onset;
  while (true) {
    for (StreamState& s : streams)
      if (s.active && s.end <= t) s.active = false;

    std::vector<Pending> strikes;
    while (next_note < notes.size() && notes[next_note].onset == t) {
      const Pending& p = notes[next_note++];
      if (!strikes.empty() && strikes.back().pitch == p.pitch) {
        warn(warnings, track.source_id + ": merged duplicate simultaneous pitch at onset " +
                           format_time(t));
        if (config.vocab.at(p.dur_index) > config.vocab.at(strikes.back().dur_index))
          strikes.back().dur_index = p.dur_index;
        continue;
      }
      strikes.push_back(p);
    }

    std::vector<int> free_streams;
    for (int s = 0; s < config.n_s; ++s)
      if (!streams[s].active) free_streams.push_back(s);

    if (strikes.size() > free_streams.size()) {
      if (policy == OverflowPolicy::Error)
        throw std::runtime_error("instantaneous polyphony exceeds the stream count at onset " +
                                 format_time(t));
      warn(warnings, track.source_id + ": dropped " +
                         std::to_string(strikes.size() - free_streams.size()) +
                         " lowest-pitched notes at onset " + format_time(t));
      strikes.resize(free_streams.size());
    }

    NoteSet set;
    set.onset = t;
    set.symbols.assign(config.n_s, StreamSymbol{});
    for (int s = 0; s < config.n_s; ++s) {
      if (streams[s].active) {
        set.symbols[s] = {kSustainClass, config.vocab.snap_index(streams[s].end - t)};
      }
    }
    std::vector<int> rest_streams;
    for (std::size_t k = 0; k < free_streams.size(); ++k) {
      int s = free_streams[k];
      if (k < strikes.size()) {
        set.symbols[s] = {strikes[k].pitch, strikes[k].dur_index};
        streams[s] = {true, t + config.vocab.at(strikes[k].dur_index)};
      } else {
        rest_streams.push_back(s);
      }
    }

    double next_strike = next_note < notes.size() ? notes[next_note].onset : kInf;
    double boundary = next_strike;
    for (const StreamState& s : streams)
      if (s.active && s.end > t) boundary = std::min(boundary, s.end);

    // A further note-set exists at the boundary iff a strike is coming or a
    // note keeps sounding past it; otherwise this set ends the sequence and
    // its rests take the smallest duration.
    bool more = next_strike != kInf;
    if (!more)
      for (const StreamState& s : streams)
        if (s.active && s.end > boundary) more = true;
    if (!more) {
      for (int s : rest_streams) set.symbols[s] = {kRestClass, config.vocab.index_of(config.vocab.d0())};
      seq.note_sets.push_back(std::move(set));
      break;
    }

    double t_next;
    double gap = boundary - t;
    if (!rest_streams.empty()) {
      double rest_dur = config.vocab.contains(gap) ? gap : config.vocab.best_chunk(gap);
      int rest_index = config.vocab.index_of(rest_dur);
      for (int s : rest_streams) set.symbols[s] = {kRestClass, rest_index};
      t_next = t + rest_dur;
    } else {
      t_next = boundary;
    }
    seq.note_sets.push_back(std::move(set));
    t = t_next;
  }
  return seq;
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

/// Emits one note per strike symbol; Sustain and Rest emit nothing. A Sustain
/// with no note sounding in its stream is an integrity error.
inline QuantizedTrack decode(const MultiStreamSequence& seq) {
  QuantizedTrack track;
  const auto& vocab = seq.config.vocab;
  std::vector<double> stream_end(seq.config.n_s, -1.0);
  for (const NoteSet& set : seq.note_sets) {
    if (static_cast<int>(set.symbols.size()) != seq.config.n_s)
      throw std::runtime_error("note-set at onset " + format_time(set.onset) +
                               " does not have n_s symbols");
    for (int s = 0; s < seq.config.n_s; ++s) {
      const StreamSymbol& sym = set.symbols[s];
      if (sym.is_sustain()) {
        if (stream_end[s] <= set.onset)
          throw std::runtime_error("sustain with no sounding note in stream " + std::to_string(s) +
                                   " at onset " + format_time(set.onset));
      } else if (sym.is_strike()) {
        double dur = vocab.at(sym.duration_index);
        track.notes.push_back({sym.pitch + kMinMidiPitch, set.onset, dur});
        stream_end[s] = set.onset + dur;
      }
    }
  }
  std::sort(track.notes.begin(), track.notes.end(), note_order);
  return track;
}

// ---------------------------------------------------------------------------
// Timeline resolution and validation
// ---------------------------------------------------------------------------

enum class SymbolKind { Strike, Sustain, Rest };

struct ResolvedSymbol {
  SymbolKind kind;
  int pitch = -1;        // class 0..87 for strikes and sustains
  double duration = 0;   // strike: vocab value; sustain: remaining time;
                         // rest: vocab value truncated at the next onset
};

/// Walks the timeline and resolves every symbol to its sounding content.
inline std::vector<std::vector<ResolvedSymbol>> resolve_timeline(const MultiStreamSequence& seq) {
  std::vector<std::vector<ResolvedSymbol>> out;
  out.reserve(seq.note_sets.size());
  struct SoundingNote {
    int pitch = -1;
    double end = -1;
  };
  std::vector<SoundingNote> sounding(seq.config.n_s);
  for (std::size_t k = 0; k < seq.note_sets.size(); ++k) {
    const NoteSet& set = seq.note_sets[k];
    double next_onset = k + 1 < seq.note_sets.size() ? seq.note_sets[k + 1].onset
                                                     : std::numeric_limits<double>::infinity();
    std::vector<ResolvedSymbol> row(seq.config.n_s);
    for (int s = 0; s < seq.config.n_s; ++s) {
      const StreamSymbol& sym = set.symbols[s];
      if (sym.is_strike()) {
        double dur = seq.config.vocab.at(sym.duration_index);
        sounding[s] = {sym.pitch, set.onset + dur};
        row[s] = {SymbolKind::Strike, sym.pitch, dur};
      } else if (sym.is_sustain()) {
        row[s] = {SymbolKind::Sustain, sounding[s].pitch, sounding[s].end - set.onset};
      } else {
        double dur = seq.config.vocab.at(sym.duration_index);
        row[s] = {SymbolKind::Rest, -1, std::min(dur, next_onset - set.onset)};
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

enum class ValidationLevel {
  Composed,   // what any composition must satisfy: shape, sustain determinism, timeline rule
  Canonical,  // transcription output: additionally ordering and exact rest spans
};

/// Returns a description of the first invariant violation, or nullopt.
inline std::optional<std::string> find_violation(const MultiStreamSequence& seq,
                                                 ValidationLevel level = ValidationLevel::Composed) {
  const auto& cfg = seq.config;
  std::vector<double> stream_end(cfg.n_s, -1.0);
  double prev_onset = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < seq.note_sets.size(); ++k) {
    const NoteSet& set = seq.note_sets[k];
    auto where = [&] { return " at note-set " + std::to_string(k); };
    if (static_cast<int>(set.symbols.size()) != cfg.n_s) return "wrong symbol count" + where();
    if (set.onset <= prev_onset) return "onsets not strictly increasing" + where();
    prev_onset = set.onset;

    double min_end = std::numeric_limits<double>::infinity();
    std::vector<int> strike_streams;
    for (int s = 0; s < cfg.n_s; ++s) {
      const StreamSymbol& sym = set.symbols[s];
      if (sym.pitch < 0 || sym.pitch >= kPitchClasses) return "pitch class out of range" + where();
      if (sym.duration_index < 0 || sym.duration_index >= cfg.n_d())
        return "duration index out of range" + where();
      bool sounding = stream_end[s] > set.onset;
      if (sym.is_sustain()) {
        if (!sounding) return "sustain without a sounding note in stream " + std::to_string(s) + where();
        if (level == ValidationLevel::Canonical &&
            sym.duration_index != cfg.vocab.snap_index(stream_end[s] - set.onset))
          return "sustain duration not snapped to remaining time" + where();
        min_end = std::min(min_end, stream_end[s]);
      } else {
        if (sounding)
          return "stream " + std::to_string(s) + " must sustain its sounding note" + where();
        if (sym.is_strike()) {
          strike_streams.push_back(s);
          stream_end[s] = set.onset + cfg.vocab.at(sym.duration_index);
          min_end = std::min(min_end, stream_end[s]);
        } else {
          min_end = std::min(min_end, set.onset + cfg.vocab.at(sym.duration_index));
        }
      }
    }
    if (level == ValidationLevel::Canonical && !strike_streams.empty()) {
      for (std::size_t i = 1; i < strike_streams.size(); ++i) {
        if (set.symbols[strike_streams[i]].pitch >= set.symbols[strike_streams[i - 1]].pitch)
          return "new strikes not in descending pitch order" + where();
      }
      // Strikes occupy the lowest free streams.
      std::vector<int> free_streams;
      for (int s = 0; s < cfg.n_s; ++s)
        if (!set.symbols[s].is_sustain()) free_streams.push_back(s);
      for (std::size_t i = 0; i < strike_streams.size(); ++i)
        if (free_streams[i] != strike_streams[i])
          return "strikes do not fill the lowest free streams" + where();
    }
    if (k + 1 < seq.note_sets.size()) {
      double next_onset = seq.note_sets[k + 1].onset;
      if (next_onset != min_end)
        return "timeline rule violated: next onset " + format_time(next_onset) +
               " != earliest symbol end " + format_time(min_end) + where();
      if (level == ValidationLevel::Canonical) {
        for (int s = 0; s < cfg.n_s; ++s)
          if (set.symbols[s].is_rest() &&
              set.onset + cfg.vocab.at(set.symbols[s].duration_index) != next_onset)
            return "rest does not reach the next onset exactly" + where();
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Frame encoding
// ---------------------------------------------------------------------------

/// Concatenates, per stream, a 90-wide one-hot pitch block and an n_d-wide
/// one-hot duration block.
inline std::vector<double> encode_frame(const NoteSet& set, const RepresentationConfig& config) {
  std::vector<double> frame(config.frame_size(), 0.0);
  int block = kPitchClasses + config.n_d();
  for (int s = 0; s < config.n_s; ++s) {
    const StreamSymbol& sym = set.symbols.at(s);
    frame[s * block + sym.pitch] = 1.0;
    frame[s * block + kPitchClasses + sym.duration_index] = 1.0;
  }
  return frame;
}

/// The all-rest frame used to pad contexts before a song starts.
inline std::vector<double> rest_frame(const RepresentationConfig& config) {
  NoteSet set;
  set.symbols.assign(config.n_s, StreamSymbol{kRestClass, 0});
  return encode_frame(set, config);
}

// ---------------------------------------------------------------------------
// Text format: header line, then one line per note-set.
//   ns=<int> vocab=<comma-separated durations>
//   <onset>;<tok>,<dur_index>|... with pitch tokens 0..87, S, R
// ---------------------------------------------------------------------------

inline std::string serialize_msq(const MultiStreamSequence& seq) {
  std::string out = "ns=" + std::to_string(seq.config.n_s) + " vocab=";
  for (int i = 0; i < seq.config.n_d(); ++i) {
    if (i) out += ',';
    out += format_time(seq.config.vocab.at(i));
  }
  out += '\n';
  for (const NoteSet& set : seq.note_sets) {
    out += format_time(set.onset);
    out += ';';
    for (int s = 0; s < seq.config.n_s; ++s) {
      if (s) out += '|';
      const StreamSymbol& sym = set.symbols[s];
      if (sym.is_sustain())
        out += 'S';
      else if (sym.is_rest())
        out += 'R';
      else
        out += std::to_string(sym.pitch);
      out += ',';
      out += std::to_string(sym.duration_index);
    }
    out += '\n';
  }
  return out;
}

inline MultiStreamSequence parse_msq(const std::string& text, double grid = kDefaultGrid) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("msq: missing header line");
  int n_s = 0;
  std::vector<double> durations;
  {
    std::istringstream hs(line);
    std::string field;
    while (hs >> field) {
      if (field.rfind("ns=", 0) == 0) {
        n_s = std::stoi(field.substr(3));
      } else if (field.rfind("vocab=", 0) == 0) {
        std::istringstream vs(field.substr(6));
        std::string tok;
        while (std::getline(vs, tok, ',')) durations.push_back(std::stod(tok));
      } else {
        throw std::runtime_error("msq: unknown header field '" + field + "'");
      }
    }
  }
  if (n_s <= 0) throw std::runtime_error("msq: header must set ns");
  MultiStreamSequence seq;
  seq.config.n_s = n_s;
  seq.config.grid = grid;
  seq.config.vocab = DurationVocab(durations, grid);

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto semi = line.find(';');
    if (semi == std::string::npos)
      throw std::runtime_error("msq line " + std::to_string(line_no) + ": missing ';'");
    NoteSet set;
    set.onset = std::stod(line.substr(0, semi));
    std::istringstream body(line.substr(semi + 1));
    std::string cell;
    while (std::getline(body, cell, '|')) {
      auto comma = cell.find(',');
      if (comma == std::string::npos)
        throw std::runtime_error("msq line " + std::to_string(line_no) + ": missing ','");
      std::string tok = cell.substr(0, comma);
      StreamSymbol sym;
      if (tok == "S")
        sym.pitch = kSustainClass;
      else if (tok == "R")
        sym.pitch = kRestClass;
      else
        sym.pitch = std::stoi(tok);
      sym.duration_index = std::stoi(cell.substr(comma + 1));
      if (sym.pitch < 0 || sym.pitch >= kPitchClasses)
        throw std::runtime_error("msq line " + std::to_string(line_no) + ": bad pitch token");
      if (sym.duration_index < 0 || sym.duration_index >= seq.config.n_d())
        throw std::runtime_error("msq line " + std::to_string(line_no) + ": bad duration index");
      set.symbols.push_back(sym);
    }
    if (static_cast<int>(set.symbols.size()) != n_s)
      throw std::runtime_error("msq line " + std::to_string(line_no) + ": wrong symbol count");
    seq.note_sets.push_back(std::move(set));
  }
  return seq;
}

// ---------------------------------------------------------------------------
// Composition-space counting
// ---------------------------------------------------------------------------

/// log10 of the piano-roll composition count 2^((T/S) * n_p).
inline double log10_count_piano_roll(double T, double S, int n_p) {
  if (T == 0) return 0.0;
  return T / S * n_p * std::log10(2.0);
}

/// log10 of the shortest-duration approximation n_p^(n_s * T / d0).
inline double log10_count_multistream_approx(double T, double d0, int n_s, int n_p) {
  return n_s * (T / d0) * std::log10(static_cast<double>(n_p));
}

/// Exact per-stream tiling count by dynamic programming over grid units:
/// f(0) = 1, f(t) = sum over vocab durations d <= t of n_p * f(t - d);
/// the total over n_s independent streams is f(T)^n_s.
inline BigInt count_multistream_exact(double T, const DurationVocab& vocab, int n_s, int n_p) {
  std::int64_t m = vocab.to_units(T);
  std::vector<std::int64_t> unit_durs;
  for (double d : vocab.values()) unit_durs.push_back(vocab.to_units(d));
  std::vector<BigInt> f(static_cast<std::size_t>(m) + 1);
  f[0] = 1;
  for (std::int64_t t = 1; t <= m; ++t) {
    BigInt acc = 0;
    for (std::int64_t d : unit_durs)
      if (d <= t) acc += f[static_cast<std::size_t>(t - d)];
    f[static_cast<std::size_t>(t)] = acc * n_p;
  }
  return boost::multiprecision::pow(f[static_cast<std::size_t>(m)], static_cast<unsigned>(n_s));
}

inline double log10_big(const BigInt& x) {
  if (x <= 0) return -std::numeric_limits<double>::infinity();
  std::string digits = x.str();
  double mantissa = 0;
  int take = std::min<std::size_t>(digits.size(), 17);
  mantissa = std::stod(digits.substr(0, take));
  return std::log10(mantissa) + static_cast<double>(digits.size() - take);
}

/// R = log10(N1) - log10(N2): how much faster the piano-roll space grows.
inline double sparsity_log_ratio(double T, double S, const DurationVocab& vocab, int n_s, int n_p) {
  return log10_count_piano_roll(T, S, n_p) -
         log10_count_multistream_approx(T, vocab.d0(), n_s, n_p);
}

}  // namespace amadeus

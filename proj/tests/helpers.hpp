// Shared test utilities: random track generation and sequence comparison.
#pragma once

#include <random>
#include <vector>

#include "amadeus/midi.hpp"
#include "amadeus/multistream.hpp"

namespace testutil {

// Random quantized track with instantaneous polyphony <= n_s, durations
// drawn from `durs`, and no overlapping notes of equal pitch.
inline amadeus::QuantizedTrack random_track(std::mt19937_64& gen, int n_s,
                                            const std::vector<double>& durs, int n_onsets,
                                            int pitch_lo = 40, int pitch_hi = 90) {
  using namespace amadeus;
  std::vector<std::pair<int, double>> sounding;  // (pitch, end)
  std::vector<TimedNote> notes;
  double t = 0;
  for (int e = 0; e < n_onsets; ++e) {
    if (e > 0) t += kDefaultGrid * static_cast<double>(1 + rng::uniform_below(gen, 12));
    std::erase_if(sounding, [&](const auto& p) { return p.second <= t; });
    int free = n_s - static_cast<int>(sounding.size());
    if (free <= 0) continue;
    int count = 1 + static_cast<int>(rng::uniform_below(gen, static_cast<std::uint64_t>(free)));
    for (int c = 0; c < count; ++c) {
      int pitch = 0;
      bool ok = false;
      for (int attempt = 0; attempt < 40 && !ok; ++attempt) {
        pitch = pitch_lo + static_cast<int>(rng::uniform_below(
                               gen, static_cast<std::uint64_t>(pitch_hi - pitch_lo)));
        ok = true;
        for (const auto& p : sounding)
          if (p.first == pitch) ok = false;
        for (const TimedNote& n : notes)
          if (n.pitch == pitch && n.onset == t) ok = false;
      }
      if (!ok) continue;
      double dur = durs[rng::uniform_below(gen, durs.size())];
      notes.push_back({pitch, t, dur});
      sounding.emplace_back(pitch, t + dur);
    }
  }
  QuantizedTrack track;
  track.source_id = "random";
  track.notes = std::move(notes);
  std::sort(track.notes.begin(), track.notes.end(), amadeus::note_order);
  return track;
}

inline bool same_notes(const amadeus::QuantizedTrack& a, const amadeus::QuantizedTrack& b) {
  if (a.notes.size() != b.notes.size()) return false;
  for (std::size_t i = 0; i < a.notes.size(); ++i) {
    if (a.notes[i].pitch != b.notes[i].pitch || a.notes[i].onset != b.notes[i].onset ||
        a.notes[i].duration != b.notes[i].duration)
      return false;
  }
  return true;
}

inline bool same_sequence(const amadeus::MultiStreamSequence& a,
                          const amadeus::MultiStreamSequence& b) {
  if (a.config.n_s != b.config.n_s) return false;
  if (a.config.vocab.values() != b.config.vocab.values()) return false;
  if (a.note_sets.size() != b.note_sets.size()) return false;
  for (std::size_t k = 0; k < a.note_sets.size(); ++k) {
    if (a.note_sets[k].onset != b.note_sets[k].onset) return false;
    for (int s = 0; s < a.config.n_s; ++s) {
      const auto& x = a.note_sets[k].symbols[s];
      const auto& y = b.note_sets[k].symbols[s];
      if (x.pitch != y.pitch || x.duration_index != y.duration_index) return false;
    }
  }
  return true;
}

}  // namespace testutil

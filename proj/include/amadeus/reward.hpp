/// @file
/// @brief Seven-attribute reward evaluator for compositions: chord incidence,
/// pitch entropy, extreme-duration/repetition/rest penalties and the
/// plagiarism-suppressing cross-correlation peak against the corpus.
#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "amadeus/common.hpp"
#include "amadeus/multistream.hpp"

namespace amadeus {

struct RewardConfig {
  double theta_extreme = 0.25;
  double theta_repetition = 0.30;
  double theta_rest_duration = 0.40;
  double theta_rest_count = 0.40;
  double crosscorr_baseline = 0.5;  // b
  int crosscorr_window = 16;        // w, in note-sets
  double good_threshold = 5.0;

  void validate() const {
    for (double t : {theta_extreme, theta_repetition, theta_rest_duration, theta_rest_count})
      if (t <= 0 || t > 1) throw std::invalid_argument("reward thresholds must lie in (0,1]");
    if (crosscorr_baseline < 0 || crosscorr_baseline >= 1)
      throw std::invalid_argument("cross-correlation baseline must lie in [0,1)");
    if (crosscorr_window < 4) throw std::invalid_argument("cross-correlation window must be >= 4");
  }
};

struct AttributeScore {
  double raw = 0;
  double score = 0;
};

struct RewardBreakdown {
  AttributeScore chords, entropy, extreme_durations, repetition, rest_duration, rest_count,
      crosscorr;
  double total = 0;
  bool is_good = false;
};

namespace detail {

inline double clamp01(double x) { return x < 0 ? 0 : (x > 1 ? 1 : x); }

inline double penalty_score(double raw, double threshold) {
  return 1.0 - clamp01(raw / threshold);
}

// Chord templates as pitch-class interval sets above an arbitrary root.
inline const std::vector<std::vector<int>>& chord_templates() {
  static const std::vector<std::vector<int>> kTemplates = {
      {0, 4, 7},      // major triad
      {0, 3, 7},      // minor triad
      {0, 3, 6},      // diminished triad
      {0, 4, 8},      // augmented triad
      {0, 4, 7, 10},  // dominant seventh
      {0, 4, 7, 11},  // major seventh
      {0, 3, 7, 10},  // minor seventh
      {0, 3, 6, 10},  // half-diminished seventh
      {0, 3, 6, 9},   // diminished seventh
  };
  return kTemplates;
}

// Consonant dyads: m3/M3/P4/P5/m6/M6, i.e. interval classes 3, 4 and 5.
inline bool has_consonant_dyad(std::uint16_t pcs) {
  for (int a = 0; a < 12; ++a) {
    if (!(pcs >> a & 1)) continue;
    for (int b = a + 1; b < 12; ++b) {
      if (!(pcs >> b & 1)) continue;
      int ic = std::min(b - a, 12 - (b - a));
      if (ic >= 3 && ic <= 5) return true;
    }
  }
  return false;
}

inline bool has_chord(std::uint16_t pcs) {
  if (has_consonant_dyad(pcs)) return true;
  for (const auto& tmpl : chord_templates()) {
    for (int root = 0; root < 12; ++root) {
      bool all = true;
      for (int iv : tmpl)
        if (!(pcs >> ((root + iv) % 12) & 1)) {
          all = false;
          break;
        }
      if (all) return true;
    }
  }
  return false;
}

// 88-bit struck-pitch indicator per note-set.
struct PitchMask {
  std::uint64_t lo = 0, hi = 0;
  void set(int pitch) {
    if (pitch < 64)
      lo |= std::uint64_t(1) << pitch;
    else
      hi |= std::uint64_t(1) << (pitch - 64);
  }
  int count() const { return std::popcount(lo) + std::popcount(hi); }
  int overlap(const PitchMask& o) const {
    return std::popcount(lo & o.lo) + std::popcount(hi & o.hi);
  }
};

inline std::vector<PitchMask> struck_masks(const MultiStreamSequence& seq) {
  std::vector<PitchMask> out(seq.note_sets.size());
  for (std::size_t k = 0; k < seq.note_sets.size(); ++k)
    for (const StreamSymbol& sym : seq.note_sets[k].symbols)
      if (sym.is_strike()) out[k].set(sym.pitch);
  return out;
}

}  // namespace detail

/// Fraction of note-sets whose sounding pitch-class set (sustained notes
/// included) contains a consonant dyad, triad or seventh chord.
inline AttributeScore chord_incidence(const MultiStreamSequence& seq) {
  if (seq.note_sets.empty()) throw std::invalid_argument("chord_incidence: empty sequence");
  auto resolved = resolve_timeline(seq);
  int hits = 0;
  for (const auto& row : resolved) {
    std::uint16_t pcs = 0;
    for (const ResolvedSymbol& sym : row)
      if (sym.kind != SymbolKind::Rest)
        pcs |= static_cast<std::uint16_t>(1u << ((sym.pitch + kMinMidiPitch) % 12));
    if (detail::has_chord(pcs)) ++hits;
  }
  double raw = static_cast<double>(hits) / static_cast<double>(resolved.size());
  return {raw, raw};
}

/// Shannon entropy of the struck-pitch distribution, normalized by log 88.
inline AttributeScore pitch_entropy(const MultiStreamSequence& seq) {
  std::array<std::int64_t, kNumPitches> counts{};
  std::int64_t total = 0;
  for (const NoteSet& set : seq.note_sets)
    for (const StreamSymbol& sym : set.symbols)
      if (sym.is_strike()) {
        ++counts[sym.pitch];
        ++total;
      }
  if (total == 0) return {0.0, 0.0};
  double h = 0;
  for (std::int64_t c : counts) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return {h, detail::clamp01(h / std::log(static_cast<double>(kNumPitches)))};
}

/// Fraction of struck notes whose duration is the vocabulary minimum or
/// maximum; penalized against theta_extreme.
inline AttributeScore extreme_duration_incidence(const MultiStreamSequence& seq,
                                                 const RewardConfig& config) {
  if (seq.note_sets.empty())
    throw std::invalid_argument("extreme_duration_incidence: empty sequence");
  const DurationVocab& vocab = seq.config.vocab;
  std::int64_t extreme = 0, total = 0;
  for (const NoteSet& set : seq.note_sets)
    for (const StreamSymbol& sym : set.symbols)
      if (sym.is_strike()) {
        double d = vocab.at(sym.duration_index);
        if (d == vocab.d0() || d == vocab.max()) ++extreme;
        ++total;
      }
  double raw = total > 0 ? static_cast<double>(extreme) / static_cast<double>(total) : 0.0;
  return {raw, detail::penalty_score(raw, config.theta_extreme)};
}

namespace detail {

// Sounding content of a note-set, used for the adjacent-identity comparison:
// sustains resolve to (pitch, remaining time), so a held note does not count
// as repetition of itself.
inline std::vector<std::array<double, 3>> repetition_key(const std::vector<ResolvedSymbol>& row) {
  std::vector<std::array<double, 3>> key;
  key.reserve(row.size());
  for (const ResolvedSymbol& sym : row)
    key.push_back({static_cast<double>(static_cast<int>(sym.kind)),
                   static_cast<double>(sym.pitch), sym.duration});
  return key;
}

}  // namespace detail

/// Fraction of note-sets identical (in sounding pitch and duration content)
/// to their immediate predecessor; penalized against theta_repetition.
inline AttributeScore repetition_penalty(const MultiStreamSequence& seq,
                                         const RewardConfig& config) {
  if (seq.note_sets.size() < 2) return {0.0, 1.0};
  auto resolved = resolve_timeline(seq);
  int repeats = 0;
  for (std::size_t k = 1; k < resolved.size(); ++k)
    if (detail::repetition_key(resolved[k]) == detail::repetition_key(resolved[k - 1])) ++repeats;
  double raw = static_cast<double>(repeats) / static_cast<double>(resolved.size());
  return {raw, detail::penalty_score(raw, config.theta_repetition)};
}

struct RestScores {
  AttributeScore duration;
  AttributeScore count;
};

/// Aggregated rest time over (span * n_s) and rest symbols over all symbols.
inline RestScores rest_fractions(const MultiStreamSequence& seq, const RewardConfig& config) {
  if (seq.note_sets.empty()) throw std::invalid_argument("rest_fractions: empty sequence");
  auto resolved = resolve_timeline(seq);
  double rest_time = 0;
  double span_end = seq.note_sets.front().onset;
  std::int64_t rest_symbols = 0, total_symbols = 0;
  for (std::size_t k = 0; k < resolved.size(); ++k) {
    double onset = seq.note_sets[k].onset;
    for (const ResolvedSymbol& sym : resolved[k]) {
      ++total_symbols;
      if (sym.kind == SymbolKind::Rest) {
        ++rest_symbols;
        rest_time += sym.duration;
        span_end = std::max(span_end, onset + sym.duration);
      } else if (sym.kind == SymbolKind::Strike || sym.kind == SymbolKind::Sustain) {
        span_end = std::max(span_end, onset + sym.duration);
      }
    }
  }
  double span = span_end - seq.note_sets.front().onset;
  RestScores out;
  double raw_duration = span > 0 ? rest_time / (span * seq.config.n_s) : 0.0;
  double raw_count = static_cast<double>(rest_symbols) / static_cast<double>(total_symbols);
  out.duration = {raw_duration, detail::penalty_score(raw_duration, config.theta_rest_duration)};
  out.count = {raw_count, detail::penalty_score(raw_count, config.theta_rest_count)};
  return out;
}

/// Peak of the overlap-masked normalized cross-correlation between every
/// w-long window of the composition and every alignment in every corpus
/// song, on 88-bit struck-pitch indicators. A sequence shorter than the
/// window scores 1 with a warning.
inline AttributeScore crosscorr_peak(const MultiStreamSequence& seq,
                                     const std::vector<MultiStreamSequence>& corpus,
                                     const RewardConfig& config, WarningSink* warnings = nullptr) {
  const int w = config.crosscorr_window;
  const auto L = static_cast<int>(seq.note_sets.size());
  if (L < w) {
    warn(warnings, "composition shorter than the cross-correlation window; score defaults to 1");
    return {0.0, 1.0};
  }
  auto comp = detail::struck_masks(seq);
  std::vector<double> comp_norm(L - w + 1, 0.0);
  for (int i = 0; i + w <= L; ++i) {
    int n = 0;
    for (int t = 0; t < w; ++t) n += comp[i + t].count();
    comp_norm[i] = n;
  }
  double peak = 0;
  for (const MultiStreamSequence& song : corpus) {
    auto ref = detail::struck_masks(song);
    const auto M = static_cast<int>(ref.size());
    if (M < w) continue;
    std::vector<int> ref_counts(M);
    for (int j = 0; j < M; ++j) ref_counts[j] = ref[j].count();
    for (int i = 0; i + w <= L; ++i) {
      if (comp_norm[i] == 0) continue;
      for (int j = 0; j + w <= M; ++j) {
        int num = 0, ref_n = 0;
        for (int t = 0; t < w; ++t) {
          num += comp[i + t].overlap(ref[j + t]);
          ref_n += ref_counts[j + t];
        }
        if (num == 0 || ref_n == 0) continue;
        double sim = num / std::sqrt(comp_norm[i] * ref_n);
        peak = std::max(peak, sim);
      }
    }
  }
  double score =
      1.0 - detail::clamp01((peak - config.crosscorr_baseline) / (1.0 - config.crosscorr_baseline));
  return {peak, score};
}

/// All seven attributes; the total is their sum and a composition is good
/// when the total strictly exceeds the threshold.
inline RewardBreakdown evaluate(const MultiStreamSequence& seq,
                                const std::vector<MultiStreamSequence>& corpus,
                                const RewardConfig& config, WarningSink* warnings = nullptr) {
  config.validate();
  if (seq.note_sets.empty()) throw std::invalid_argument("evaluate: empty sequence");
  RewardBreakdown b;
  b.chords = chord_incidence(seq);
  b.entropy = pitch_entropy(seq);
  b.extreme_durations = extreme_duration_incidence(seq, config);
  b.repetition = repetition_penalty(seq, config);
  RestScores rests = rest_fractions(seq, config);
  b.rest_duration = rests.duration;
  b.rest_count = rests.count;
  b.crosscorr = crosscorr_peak(seq, corpus, config, warnings);
  b.total = b.chords.score + b.entropy.score + b.extreme_durations.score + b.repetition.score +
            b.rest_duration.score + b.rest_count.score + b.crosscorr.score;
  b.is_good = b.total > config.good_threshold;
  return b;
}

/// Flat key-value text document.
inline std::string breakdown_to_text(const RewardBreakdown& b) {
  std::string out;
  auto put = [&](const char* name, const AttributeScore& a) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s.raw %.17g\n%s.score %.17g\n", name, a.raw, name, a.score);
    out += buf;
  };
  put("chords", b.chords);
  put("entropy", b.entropy);
  put("extreme_durations", b.extreme_durations);
  put("repetition", b.repetition);
  put("rest_duration", b.rest_duration);
  put("rest_count", b.rest_count);
  put("crosscorr", b.crosscorr);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "total %.17g\nis_good %d\n", b.total, b.is_good ? 1 : 0);
  out += buf;
  return out;
}

/// Grid-searches the penalty thresholds and the cross-correlation baseline to
/// maximize the aggregate reward over a set of reference compositions (the
/// window length stays fixed). Raw measurements are computed once; only the
/// scoring thresholds move.
inline RewardConfig calibrate_rewards(const std::vector<MultiStreamSequence>& pleasant,
                                      const std::vector<MultiStreamSequence>& corpus,
                                      RewardConfig base) {
  if (pleasant.empty()) throw std::invalid_argument("calibrate_rewards: empty reference set");
  struct Raws {
    double fixed;  // chords + entropy scores, threshold-independent
    double extreme, repetition, rest_duration, rest_count, cc_peak;
  };
  std::vector<Raws> raws;
  for (const MultiStreamSequence& seq : pleasant) {
    Raws r;
    r.fixed = chord_incidence(seq).score + pitch_entropy(seq).score;
    r.extreme = extreme_duration_incidence(seq, base).raw;
    r.repetition = repetition_penalty(seq, base).raw;
    RestScores rests = rest_fractions(seq, base);
    r.rest_duration = rests.duration.raw;
    r.rest_count = rests.count.raw;
    r.cc_peak = crosscorr_peak(seq, corpus, base).raw;
    raws.push_back(r);
  }
  std::vector<double> thresholds;
  for (double t = 0.05; t <= 0.601; t += 0.05) thresholds.push_back(t);
  std::vector<double> baselines = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};

  RewardConfig best = base;
  double best_total = -1;
  for (double t3 : thresholds)
    for (double t4 : thresholds)
      for (double t5 : thresholds)
        for (double t6 : thresholds)
          for (double bb : baselines) {
            double total = 0;
            for (const Raws& r : raws) {
              total += r.fixed;
              total += detail::penalty_score(r.extreme, t3);
              total += detail::penalty_score(r.repetition, t4);
              total += detail::penalty_score(r.rest_duration, t5);
              total += detail::penalty_score(r.rest_count, t6);
              total += 1.0 - detail::clamp01((r.cc_peak - bb) / (1.0 - bb));
            }
            if (total > best_total) {
              best_total = total;
              best.theta_extreme = t3;
              best.theta_repetition = t4;
              best.theta_rest_duration = t5;
              best.theta_rest_count = t6;
              best.crosscorr_baseline = bb;
            }
          }
  return best;
}

}  // namespace amadeus

/// @file
/// @brief Sequential composition: note-set-by-note-set sampling from the
/// sequence model with Boltzmann temperature reshaping, forced-sustain
/// masking, timeline-driven onset assignment and MIDI export.
#pragma once

#include <deque>
#include <string>
#include <vector>

#include <json.hpp>

#include "amadeus/common.hpp"
#include "amadeus/multistream.hpp"
#include "amadeus/seqmodel.hpp"

namespace amadeus {

// Temperatures at or below this behave as the T -> 0 limit: greedy argmax
// with ties to the lowest class index, consuming no randomness.
inline constexpr double kGreedyTemperature = 1e-9;

struct SamplerConfig {
  std::vector<std::uint8_t> plan;
  double t_pitch = 1.0;
  double t_dur = 1.0;
  int length = 64;
  int seed_song = -1;        // plan index; -1 = first on-bit of the plan
  int seed_offset = 0;
  bool seed_all_rest = false;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (t_pitch < 0 || t_dur < 0) throw std::invalid_argument("temperatures must be non-negative");
    if (length < 1) throw std::invalid_argument("composition length must be at least 1");
  }
};

struct Composition {
  MultiStreamSequence sequence;
  SamplerConfig config;
  std::string checkpoint;  // checkpoint_id of the generating model
};

/// Boltzmann reshaping p_i' ~ exp(log p_i / T), computed in log space.
/// Zero-probability entries keep probability zero; T = 1 is the identity.
inline Eigen::VectorXd boltzmann(const Eigen::VectorXd& dist, double temperature) {
  if (temperature <= 0) throw std::invalid_argument("boltzmann: temperature must be positive");
  double max_log = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < dist.size(); ++i) {
    if (dist(i) < 0) throw std::invalid_argument("boltzmann: negative probability");
    if (dist(i) > 0) max_log = std::max(max_log, std::log(dist(i)) / temperature);
  }
  if (max_log == -std::numeric_limits<double>::infinity())
    throw std::invalid_argument("boltzmann: distribution has no support");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dist.size());
  double sum = 0;
  for (Eigen::Index i = 0; i < dist.size(); ++i) {
    if (dist(i) > 0) {
      out(i) = std::exp(std::log(dist(i)) / temperature - max_log);
      sum += out(i);
    }
  }
  out /= sum;
  return out;
}

namespace detail {

inline int argmax_lowest(const Eigen::VectorXd& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = static_cast<int>(i);
  return best;
}

inline int sample_categorical(const Eigen::VectorXd& probs, std::mt19937_64& gen) {
  double u = rng::uniform01(gen) * probs.sum();
  double cum = 0;
  int last_support = 0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs(i) <= 0) continue;
    last_support = static_cast<int>(i);
    cum += probs(i);
    if (u < cum) return last_support;
  }
  return last_support;
}

// Reshape-and-draw for one head; T below the greedy threshold short-circuits
// to argmax without touching the generator.
inline int draw(const Eigen::VectorXd& dist, double temperature, std::mt19937_64& gen) {
  if (temperature <= kGreedyTemperature) return argmax_lowest(dist);
  return sample_categorical(boltzmann(dist, temperature), gen);
}

struct SoundingNote {
  int pitch = -1;
  double end = -1.0;
};

}  // namespace detail

/// Samples the next note-set. Streams still sounding a note are forced to
/// SUSTAIN (no randomness consumed); free streams sample a pitch from the
/// head with the SUSTAIN class zeroed out and a duration from the duration
/// head, each through their own temperature. Pitches already sounding or
/// struck by a lower stream at this onset are masked out as well, so a strike
/// never collides with a key that is still down.
inline NoteSet sample_noteset(const ModelParams& params,
                              const std::vector<std::vector<double>>& context,
                              const std::vector<std::uint8_t>& plan, double t_pitch, double t_dur,
                              const std::vector<detail::SoundingNote>& sounding, double onset,
                              const RepresentationConfig& rep, std::mt19937_64& gen) {
  NoteSet set;
  set.onset = onset;
  set.symbols.assign(rep.n_s, StreamSymbol{});
  std::vector<bool> key_down(kNumPitches, false);
  bool any_free = false;
  for (int s = 0; s < rep.n_s; ++s) {
    if (sounding[s].end > onset) {
      set.symbols[s] = {kSustainClass, rep.vocab.snap_index(sounding[s].end - onset)};
      key_down[sounding[s].pitch] = true;
    } else {
      any_free = true;
    }
  }
  if (!any_free) return set;

  ForwardOutput out = forward(params, context, plan);
  for (int s = 0; s < rep.n_s; ++s) {
    if (set.symbols[s].is_sustain()) continue;
    Eigen::VectorXd pitch_dist = out.pitch[s];
    pitch_dist(kSustainClass) = 0.0;
    for (int p = 0; p < kNumPitches; ++p)
      if (key_down[p]) pitch_dist(p) = 0.0;
    pitch_dist /= pitch_dist.sum();
    int pitch = detail::draw(pitch_dist, t_pitch, gen);
    set.symbols[s].pitch = pitch;
    set.symbols[s].duration_index = detail::draw(out.dur[s], t_dur, gen);
    if (pitch < kNumPitches) key_down[pitch] = true;
  }
  return set;
}

/// Composes `length` note-sets autoregressively. The context starts from the
/// seed (a song prefix, left-padded, or all rests), the timeline starts empty
/// at onset 0, and each sampled note-set is fed back into the context. The
/// next onset is the earliest symbol end beyond the current one.
inline Composition compose(const ModelParams& params, const RepresentationConfig& rep,
                           const SamplerConfig& config,
                           const std::vector<MultiStreamSequence>& corpus = {}) {
  config.validate();
  const ModelHyperparams& hp = params.hp;
  if (hp.n_s != rep.n_s || hp.n_d != rep.n_d())
    throw std::invalid_argument("model dimensions do not match the representation");
  if (static_cast<int>(config.plan.size()) != hp.n_songs)
    throw std::invalid_argument("plan width does not match the model");

  Composition result;
  result.config = config;
  result.checkpoint = checkpoint_id(params);
  result.sequence.config = rep;

  // Seed context.
  std::deque<std::vector<double>> context;
  int seed_song = config.seed_song;
  if (!config.seed_all_rest && seed_song < 0) {
    for (std::size_t i = 0; i < config.plan.size(); ++i)
      if (config.plan[i]) {
        seed_song = static_cast<int>(i);
        break;
      }
  }
  if (!config.seed_all_rest && seed_song >= 0 && seed_song < static_cast<int>(corpus.size())) {
    const MultiStreamSequence& song = corpus[seed_song];
    int last = std::min<int>(config.seed_offset + hp.context_len,
                             static_cast<int>(song.note_sets.size()));
    for (int i = std::max(0, config.seed_offset); i < last; ++i)
      context.push_back(encode_frame(song.note_sets[i], song.config));
  }
  while (static_cast<int>(context.size()) < hp.context_len)
    context.push_front(rest_frame(rep));

  std::mt19937_64 gen(config.rng_seed);
  std::vector<detail::SoundingNote> sounding(rep.n_s);
  double onset = 0.0;
  std::vector<std::vector<double>> window(context.begin(), context.end());
  for (int step = 0; step < config.length; ++step) {
    NoteSet set = sample_noteset(params, window, config.plan, config.t_pitch, config.t_dur,
                                 sounding, onset, rep, gen);
    double next_onset = std::numeric_limits<double>::infinity();
    for (int s = 0; s < rep.n_s; ++s) {
      const StreamSymbol& sym = set.symbols[s];
      if (sym.is_strike()) {
        sounding[s] = {sym.pitch, onset + rep.vocab.at(sym.duration_index)};
        next_onset = std::min(next_onset, sounding[s].end);
      } else if (sym.is_sustain()) {
        next_onset = std::min(next_onset, sounding[s].end);
      } else {
        next_onset = std::min(next_onset, onset + rep.vocab.at(sym.duration_index));
      }
    }
    context.pop_front();
    context.push_back(encode_frame(set, rep));
    window.assign(context.begin(), context.end());
    result.sequence.note_sets.push_back(std::move(set));
    onset = next_onset;
  }
  return result;
}

/// Decodes the composition and writes it as an SMF file.
inline void export_midi(const Composition& composition, const std::string& path) {
  write_midi_file(decode(composition.sequence), path);
}

/// Sidecar metadata tying an exported composition to how it was produced.
inline nlohmann::json provenance_json(const Composition& composition) {
  nlohmann::json j;
  j["plan"] = composition.config.plan;
  j["t_pitch"] = composition.config.t_pitch;
  j["t_dur"] = composition.config.t_dur;
  j["length"] = composition.config.length;
  j["seed_song"] = composition.config.seed_song;
  j["seed_offset"] = composition.config.seed_offset;
  j["seed_all_rest"] = composition.config.seed_all_rest;
  j["rng_seed"] = composition.config.rng_seed;
  j["checkpoint"] = composition.checkpoint;
  return j;
}

}  // namespace amadeus

#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>

#include "amadeus/multistream.hpp"
#include "helpers.hpp"

using namespace amadeus;
using testutil::random_track;
using testutil::same_notes;
using testutil::same_sequence;

namespace {

QuantizedTrack make_track(std::vector<TimedNote> notes) {
  QuantizedTrack t;
  t.source_id = "test";
  t.notes = std::move(notes);
  std::sort(t.notes.begin(), t.notes.end(), note_order);
  return t;
}

RepresentationConfig make_config(int n_s, std::vector<double> durs) {
  RepresentationConfig cfg;
  cfg.n_s = n_s;
  cfg.vocab = DurationVocab(std::move(durs));
  return cfg;
}

}  // namespace

TEST_CASE("derive_duration_vocab keeps a single observed class") {
  std::vector<QuantizedTrack> corpus = {
      make_track({{60, 0, 0.0625}, {62, 0.0625, 0.0625}, {64, 0.125, 0.0625}})};
  auto vocab = derive_duration_vocab(corpus);
  REQUIRE(vocab.size() == 1);
  CHECK(vocab.at(0) == 0.0625);
}

TEST_CASE("derive_duration_vocab stops at the coverage threshold") {
  // Frequencies: 1/16 x50, 1/8 x40, 1/2 x9, 2 x1.
  std::vector<TimedNote> notes;
  double t = 0;
  auto add = [&](double dur, int count) {
    for (int i = 0; i < count; ++i) {
      notes.push_back({60, t, dur});
      t += dur + 0.0625;
    }
  };
  add(0.0625, 50);
  add(0.125, 40);
  add(0.5, 9);
  add(2.0, 1);
  auto vocab = derive_duration_vocab({make_track(std::move(notes))}, 0.98);
  CHECK(vocab.values() == std::vector<double>{0.0625, 0.125, 0.5});
}

TEST_CASE("derive_duration_vocab rejects an empty corpus") {
  CHECK_THROWS_AS(derive_duration_vocab({}), std::invalid_argument);
  CHECK_THROWS_AS(derive_duration_vocab({QuantizedTrack{}}), std::invalid_argument);
}

TEST_CASE("derive_duration_vocab matches an independent frequency count") {
  std::mt19937_64 gen(7);
  std::vector<double> durs = {0.0625, 0.125, 0.1875, 0.25, 0.5, 1.0};
  std::vector<QuantizedTrack> corpus;
  for (int i = 0; i < 5; ++i) corpus.push_back(random_track(gen, 4, durs, 60));

  // Oracle: plain histogram, sort by (count desc, duration asc), take the
  // smallest covering prefix, union the grid unit.
  std::map<double, int> hist;
  int total = 0;
  for (const auto& t : corpus)
    for (const auto& n : t.notes) {
      ++hist[n.duration];
      ++total;
    }
  std::vector<std::pair<double, int>> order(hist.begin(), hist.end());
  std::sort(order.begin(), order.end(), [](auto& a, auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<double> expected = {0.0625};
  int cum = 0;
  for (auto& [d, c] : order) {
    cum += c;
    expected.push_back(d);
    if (cum >= 0.98 * total) break;
  }
  std::sort(expected.begin(), expected.end());
  expected.erase(std::unique(expected.begin(), expected.end()), expected.end());

  auto vocab = derive_duration_vocab(corpus, 0.98);
  CHECK(vocab.values() == expected);
}

TEST_CASE("transcribe puts a monophonic melody in stream 0") {
  auto cfg = make_config(5, {0.0625, 0.125, 0.25});
  std::vector<TimedNote> notes;
  for (int i = 0; i < 12; ++i) notes.push_back({60 + i, i * 0.0625, 0.0625});
  auto seq = transcribe(make_track(std::move(notes)), cfg);
  REQUIRE(seq.note_sets.size() == 12);
  for (std::size_t k = 0; k < seq.note_sets.size(); ++k) {
    CHECK(seq.note_sets[k].symbols[0].pitch == static_cast<int>(60 + k) - kMinMidiPitch);
    for (int s = 1; s < 5; ++s) CHECK(seq.note_sets[k].symbols[s].is_rest());
  }
  CHECK(!find_violation(seq, ValidationLevel::Canonical));
}

TEST_CASE("transcribe sorts simultaneous pitches in descending order") {
  auto cfg = make_config(5, {0.25});
  auto seq = transcribe(make_track({{60, 0, 0.25}, {64, 0, 0.25}, {67, 0, 0.25}}), cfg);
  REQUIRE(seq.note_sets.size() == 1);
  CHECK(seq.note_sets[0].symbols[0].pitch == 67 - kMinMidiPitch);
  CHECK(seq.note_sets[0].symbols[1].pitch == 64 - kMinMidiPitch);
  CHECK(seq.note_sets[0].symbols[2].pitch == 60 - kMinMidiPitch);
  CHECK(seq.note_sets[0].symbols[3].is_rest());
  CHECK(seq.note_sets[0].symbols[4].is_rest());
}

TEST_CASE("transcribe lays out the opening of Fur Elise like the figure") {
  // E5 D#5 E5 D#5 E5 B4 D5 C5 A4, straight semiquavers.
  int melody[] = {76, 75, 76, 75, 76, 71, 74, 72, 69};
  std::vector<TimedNote> notes;
  for (int i = 0; i < 9; ++i) notes.push_back({melody[i], i * 0.0625, 0.0625});
  auto cfg = make_config(5, {0.0625, 0.125, 0.25});
  auto seq = transcribe(make_track(std::move(notes)), cfg);
  REQUIRE(seq.note_sets.size() == 9);
  for (int k = 0; k < 9; ++k) {
    CHECK(seq.note_sets[k].symbols[0].pitch == melody[k] - kMinMidiPitch);
    CHECK(seq.note_sets[k].symbols[0].duration_index == 0);
    for (int s = 1; s < 5; ++s) CHECK(seq.note_sets[k].symbols[s].is_rest());
  }
}

TEST_CASE("a note ending mid-sustain opens a gap set per the timeline rule") {
  // Whole note (high) plus a simultaneous quarter (low): the next note-set
  // starts at +1/4 with the whole note sustained.
  auto cfg = make_config(2, {0.0625, 0.125, 0.25, 0.5, 1.0});
  auto seq = transcribe(make_track({{72, 0, 1.0}, {60, 0, 0.25}}), cfg);
  REQUIRE(seq.note_sets.size() >= 2);
  CHECK(seq.note_sets[0].symbols[0].pitch == 72 - kMinMidiPitch);
  CHECK(seq.note_sets[0].symbols[1].pitch == 60 - kMinMidiPitch);
  CHECK(seq.note_sets[1].onset == 0.25);
  CHECK(seq.note_sets[1].symbols[0].is_sustain());
  CHECK(seq.note_sets[1].symbols[1].is_rest());
  CHECK(!find_violation(seq, ValidationLevel::Canonical));
}

TEST_CASE("transcribe splits long rest gaps into chained gap sets") {
  auto cfg = make_config(3, {0.0625, 0.25});
  // Strikes at 0 and at 1.0; the 15/16 gap needs several rest sets.
  auto seq = transcribe(make_track({{60, 0, 0.0625}, {64, 1.0, 0.0625}}), cfg);
  CHECK(!find_violation(seq, ValidationLevel::Canonical));
  CHECK(seq.note_sets.front().onset == 0.0);
  CHECK(seq.note_sets.back().onset == 1.0);
  for (std::size_t k = 1; k + 1 < seq.note_sets.size(); ++k) {
    for (int s = 0; s < 3; ++s) CHECK(seq.note_sets[k].symbols[s].is_rest());
  }
  // Rests reach the next onset exactly.
  for (std::size_t k = 0; k + 1 < seq.note_sets.size(); ++k) {
    for (int s = 0; s < 3; ++s) {
      const auto& sym = seq.note_sets[k].symbols[s];
      if (sym.is_rest())
        CHECK(seq.note_sets[k].onset + cfg.vocab.at(sym.duration_index) ==
              seq.note_sets[k + 1].onset);
    }
  }
}

TEST_CASE("transcribe reports unrepresentable rest gaps") {
  auto cfg = make_config(2, {0.25});
  // Strikes 1/16 apart leave a rest gap smaller than every vocab duration.
  auto track = make_track({{60, 0, 0.25}, {64, 0.0625, 0.25}});
  CHECK_THROWS_WITH(transcribe(track, cfg), Catch::Matchers::ContainsSubstring("not representable"));
}

TEST_CASE("transcribe polyphony overflow follows the policy") {
  auto cfg = make_config(2, {0.25});
  auto track = make_track({{60, 0, 0.25}, {64, 0, 0.25}, {67, 0, 0.25}});
  CHECK_THROWS_WITH(transcribe(track, cfg, OverflowPolicy::Error),
                    Catch::Matchers::ContainsSubstring("onset 0"));
  WarningSink warnings;
  auto seq = transcribe(track, cfg, OverflowPolicy::DropLowest, &warnings);
  REQUIRE(seq.note_sets.size() == 1);
  CHECK(seq.note_sets[0].symbols[0].pitch == 67 - kMinMidiPitch);
  CHECK(seq.note_sets[0].symbols[1].pitch == 64 - kMinMidiPitch);  // 60 dropped
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("dropped 1") != std::string::npos);
}

TEST_CASE("decode inverts transcribe on random tracks") {
  std::mt19937_64 gen(11);
  std::vector<double> durs = {0.0625, 0.125, 0.1875, 0.25, 0.5};
  auto cfg = make_config(5, durs);
  for (int round = 0; round < 200; ++round) {
    auto track = random_track(gen, 5, durs, 40);
    auto seq = transcribe(track, cfg);
    CAPTURE(round);
    auto violation = find_violation(seq, ValidationLevel::Canonical);
    CHECK(!violation);
    if (violation) FAIL(*violation);
    CHECK(same_notes(decode(seq), track));
  }
}

TEST_CASE("re-transcribing a decoded sequence is a fixpoint") {
  std::mt19937_64 gen(13);
  std::vector<double> durs = {0.0625, 0.125, 0.25, 0.375};
  auto cfg = make_config(4, durs);
  for (int round = 0; round < 100; ++round) {
    auto seq = transcribe(random_track(gen, 4, durs, 30), cfg);
    auto again = transcribe(decode(seq), cfg);
    CAPTURE(round);
    CHECK(same_sequence(seq, again));
  }
}

TEST_CASE("decode rejects a sustain with no sounding note") {
  auto cfg = make_config(2, {0.0625});
  MultiStreamSequence seq;
  seq.config = cfg;
  NoteSet set;
  set.onset = 0;
  set.symbols = {{kSustainClass, 0}, {kRestClass, 0}};
  seq.note_sets.push_back(set);
  CHECK_THROWS_WITH(decode(seq), Catch::Matchers::ContainsSubstring("sustain"));
}

TEST_CASE("decode of all-rest note-sets is an empty track") {
  auto cfg = make_config(3, {0.0625});
  MultiStreamSequence seq;
  seq.config = cfg;
  for (int k = 0; k < 4; ++k) {
    NoteSet set;
    set.onset = k * 0.0625;
    set.symbols.assign(3, {kRestClass, 0});
    seq.note_sets.push_back(set);
  }
  CHECK(decode(seq).notes.empty());
}

TEST_CASE("encode_frame has the documented shape and exactly 2 n_s ones") {
  auto cfg = make_config(5, {0.0625, 0.125, 0.1875, 0.25, 0.3125, 0.375, 0.4375, 0.5, 0.75, 1.0});
  REQUIRE(cfg.n_d() == 10);
  CHECK(cfg.frame_size() == 500);

  NoteSet all_rest;
  all_rest.symbols.assign(5, {kRestClass, 0});
  auto frame = encode_frame(all_rest, cfg);
  REQUIRE(frame.size() == 500);
  for (int s = 0; s < 5; ++s) CHECK(frame[s * 100 + 89] == 1.0);

  std::mt19937_64 gen(3);
  for (int round = 0; round < 50; ++round) {
    NoteSet set;
    for (int s = 0; s < 5; ++s)
      set.symbols.push_back({static_cast<int>(rng::uniform_below(gen, 90)),
                             static_cast<int>(rng::uniform_below(gen, 10))});
    auto f = encode_frame(set, cfg);
    double total = 0;
    for (double v : f) total += v;
    CHECK(total == 10.0);
  }
}

TEST_CASE("encode_frame is injective on valid note-sets") {
  auto cfg = make_config(3, {0.0625, 0.125});
  std::mt19937_64 gen(5);
  std::map<std::vector<double>, std::vector<int>> seen;
  for (int round = 0; round < 300; ++round) {
    NoteSet set;
    std::vector<int> key;
    for (int s = 0; s < 3; ++s) {
      int p = static_cast<int>(rng::uniform_below(gen, 90));
      int d = static_cast<int>(rng::uniform_below(gen, 2));
      set.symbols.push_back({p, d});
      key.push_back(p);
      key.push_back(d);
    }
    auto [it, inserted] = seen.emplace(encode_frame(set, cfg), key);
    if (!inserted) CHECK(it->second == key);
  }
}

TEST_CASE("msq text format round-trips bit-exactly") {
  std::mt19937_64 gen(17);
  std::vector<double> durs = {0.0625, 0.125, 0.25, 1.0};
  auto cfg = make_config(3, durs);
  auto seq = transcribe(random_track(gen, 3, durs, 50), cfg);
  std::string text = serialize_msq(seq);
  auto parsed = parse_msq(text);
  CHECK(same_sequence(seq, parsed));
  CHECK(serialize_msq(parsed) == text);
}

TEST_CASE("parse_msq rejects malformed documents") {
  CHECK_THROWS(parse_msq(""));
  CHECK_THROWS(parse_msq("ns=2 vocab=0.0625\n0;R,0\n"));        // wrong symbol count
  CHECK_THROWS(parse_msq("ns=2 vocab=0.0625\n0;R,0|Q,0\n"));    // bad token
  CHECK_THROWS(parse_msq("ns=2 vocab=0.0625\n0;R,0|R,7\n"));    // bad duration index
}

TEST_CASE("log10 piano roll count matches the closed form") {
  CHECK_THAT(log10_count_piano_roll(1.0, 1.0 / 16, 88),
             Catch::Matchers::WithinAbs(423.85, 0.01));
  CHECK(log10_count_piano_roll(0.0, 1.0 / 16, 88) == 0.0);
  CHECK_THAT(log10_count_piano_roll(2.0, 1.0 / 16, 88),
             Catch::Matchers::WithinAbs(2 * log10_count_piano_roll(1.0, 1.0 / 16, 88), 1e-9));
}

TEST_CASE("log10 multi-stream approximation matches the closed form") {
  CHECK_THAT(log10_count_multistream_approx(1.0, 1.0 / 16, 5, 88),
             Catch::Matchers::WithinAbs(155.56, 0.01));
  CHECK(log10_count_multistream_approx(1.0, 1.0 / 16, 0, 88) == 0.0);
  CHECK_THAT(log10_count_multistream_approx(1.0, 1.0, 1, 10),
             Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("count_multistream_exact handles the basic cases") {
  CHECK(count_multistream_exact(0.0625, DurationVocab({0.0625}), 1, 88) == 88);
  CHECK(count_multistream_exact(0.125, DurationVocab({0.0625, 0.125}), 1, 2) == 6);
}

TEST_CASE("count_multistream_exact with a single duration is a pure power") {
  auto count = count_multistream_exact(0.3125, DurationVocab({0.0625}), 3, 7);
  CHECK(count == boost::multiprecision::pow(BigInt(7), 15));
}

TEST_CASE("count_multistream_exact matches brute-force enumeration") {
  // Oracle: enumerate every duration tiling of T recursively and add
  // n_p^(number of notes) for each tiling.
  struct Brute {
    const std::vector<int>& durs;
    int n_p;
    BigInt count(int remaining) const {
      if (remaining == 0) return 1;
      BigInt total = 0;
      for (int d : durs)
        if (d <= remaining) total += n_p * count(remaining - d);
      return total;
    }
  };
  std::vector<std::vector<double>> vocabs = {
      {0.0625}, {0.0625, 0.125}, {0.0625, 0.1875}, {0.0625, 0.125, 0.25}};
  for (const auto& vd : vocabs) {
    for (int n_p = 1; n_p <= 3; ++n_p) {
      for (int units = 1; units <= 8; ++units) {
        DurationVocab vocab(vd);
        std::vector<int> unit_durs;
        for (double d : vd) unit_durs.push_back(static_cast<int>(std::llround(d / 0.0625)));
        Brute brute{unit_durs, n_p};
        BigInt expected = brute.count(units);
        for (int n_s = 1; n_s <= 2; ++n_s) {
          CAPTURE(vd.size(), n_p, units, n_s);
          CHECK(count_multistream_exact(units * 0.0625, vocab, n_s, n_p) ==
                boost::multiprecision::pow(expected, static_cast<unsigned>(n_s)));
        }
      }
    }
  }
}

TEST_CASE("exact count dominates the shortest-duration bound") {
  DurationVocab vocab({0.0625, 0.125, 0.25});
  for (int units : {4, 8, 16}) {
    double T = units * 0.0625;
    double exact = log10_big(count_multistream_exact(T, vocab, 2, 20));
    double bound = log10_count_multistream_approx(T, vocab.d0(), 2, 20);
    CHECK(exact >= bound);
  }
}

TEST_CASE("sparsity log ratio reproduces the representative value") {
  DurationVocab vocab({0.0625, 0.125, 0.25, 0.5});
  double r1 = sparsity_log_ratio(1.0, 1.0 / 16, vocab, 5, 88);
  CHECK_THAT(r1, Catch::Matchers::WithinAbs(268.29, 0.01));
  CHECK_THAT(sparsity_log_ratio(2.0, 1.0 / 16, vocab, 5, 88),
             Catch::Matchers::WithinAbs(536.58, 0.02));
}

TEST_CASE("sparsity log ratio vanishes for balanced parameters") {
  // n_s * (1/d0) * log10(n_p) == (1/S) * n_p * log10(2) with
  // n_s=1, d0=1, n_p=2, S=2.
  DurationVocab vocab({1.0});
  CHECK_THAT(sparsity_log_ratio(1.0, 2.0, vocab, 1, 2), Catch::Matchers::WithinAbs(0.0, 1e-12));
}

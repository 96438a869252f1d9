/// @file
/// @brief Watkins Q-learning over the plan-bit/temperature space with a
/// three-layer neural approximator, epsilon-greedy exploration, a matched
/// uniform-random baseline arm and moving-window good-composition logging.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "amadeus/common.hpp"

namespace amadeus {

inline constexpr std::array<double, 6> kTemperatureGrid = {0.5, 0.75, 1.0, 1.25, 1.5, 2.0};
inline constexpr int kUnitTemperatureIndex = 2;  // 1.0

struct SearchHyperparams {
  double gamma = 0.8;
  double eta = 0.075;
  int hidden = 20;  // n_h; 0 selects a plain linear approximator
  double eps_start = 1.0;
  double eps_end = 0.1;
  int eps_decay_iters = 0;  // 0 = half the iteration budget
  int iterations = 3000;
  int window = 200;
  int composition_length = 64;
  int restart_period = 50;
  int top_k = 10;
  double good_threshold = 5.0;

  void validate() const {
    if (gamma < 0 || gamma > 1) throw std::invalid_argument("gamma must lie in [0,1]");
    if (eta <= 0) throw std::invalid_argument("eta must be positive");
    if (hidden < 0 || iterations < 0 || window < 1 || restart_period < 1)
      throw std::invalid_argument("bad search hyperparameters");
  }
};

struct SearchState {
  std::vector<std::uint8_t> plan;
  int t_pitch_idx = kUnitTemperatureIndex;
  int t_dur_idx = kUnitTemperatureIndex;

  double t_pitch() const { return kTemperatureGrid[t_pitch_idx]; }
  double t_dur() const { return kTemperatureGrid[t_dur_idx]; }

  bool operator==(const SearchState& o) const {
    return plan == o.plan && t_pitch_idx == o.t_pitch_idx && t_dur_idx == o.t_dur_idx;
  }
  bool operator<(const SearchState& o) const {
    if (plan != o.plan) return plan < o.plan;
    if (t_pitch_idx != o.t_pitch_idx) return t_pitch_idx < o.t_pitch_idx;
    return t_dur_idx < o.t_dur_idx;
  }
};

// Action indices: [0, n_songs) flip that plan bit, then pitch-temperature
// down/up, then duration-temperature down/up.
struct Action {
  enum class Kind { FlipBit, PitchTemp, DurTemp };
  Kind kind;
  int bit = -1;    // for FlipBit
  int delta = 0;   // -1 or +1 for temperature steps
};

inline int action_count(int n_songs) { return n_songs + 4; }

inline Action action_from_index(int index, int n_songs) {
  if (index < 0 || index >= action_count(n_songs)) throw std::invalid_argument("bad action index");
  if (index < n_songs) return {Action::Kind::FlipBit, index, 0};
  switch (index - n_songs) {
    case 0: return {Action::Kind::PitchTemp, -1, -1};
    case 1: return {Action::Kind::PitchTemp, -1, +1};
    case 2: return {Action::Kind::DurTemp, -1, -1};
    default: return {Action::Kind::DurTemp, -1, +1};
  }
}

inline bool action_valid(const SearchState& state, int index) {
  int n = static_cast<int>(state.plan.size());
  Action a = action_from_index(index, n);
  auto grid_size = static_cast<int>(kTemperatureGrid.size());
  switch (a.kind) {
    case Action::Kind::FlipBit: return true;
    case Action::Kind::PitchTemp: {
      int next = state.t_pitch_idx + a.delta;
      return next >= 0 && next < grid_size;
    }
    default: {
      int next = state.t_dur_idx + a.delta;
      return next >= 0 && next < grid_size;
    }
  }
}

/// Deterministic transition; flips are involutions, temperature steps invert
/// each other.
inline SearchState apply_action(const SearchState& state, int index) {
  if (!action_valid(state, index)) throw std::invalid_argument("invalid action in this state");
  SearchState next = state;
  Action a = action_from_index(index, static_cast<int>(state.plan.size()));
  switch (a.kind) {
    case Action::Kind::FlipBit: next.plan[a.bit] ^= 1; break;
    case Action::Kind::PitchTemp: next.t_pitch_idx += a.delta; break;
    default: next.t_dur_idx += a.delta; break;
  }
  return next;
}

/// Plan bits as 0/1 plus the two temperatures mapped linearly onto [0,1]
/// over the grid range.
inline Eigen::VectorXd encode_state(const SearchState& state) {
  auto n = static_cast<Eigen::Index>(state.plan.size());
  Eigen::VectorXd x(n + 2);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = static_cast<double>(state.plan[i]);
  double lo = kTemperatureGrid.front(), hi = kTemperatureGrid.back();
  x(n) = (state.t_pitch() - lo) / (hi - lo);
  x(n + 1) = (state.t_dur() - lo) / (hi - lo);
  return x;
}

/// Input -> n_h tanh units -> linear outputs; n_h = 0 degenerates to a
/// linear map, which with one-hot inputs is a lookup table.
class QNetwork {
 public:
  QNetwork(int inputs, int outputs, int hidden, std::uint64_t seed)
      : hidden_(hidden) {
    std::mt19937_64 gen(seed);
    auto uniform_matrix = [&](Eigen::Index rows, Eigen::Index cols, double scale) {
      Eigen::MatrixXd m(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = (rng::uniform01(gen) * 2 - 1) * scale;
      return m;
    };
    if (hidden_ > 0) {
      w1_ = uniform_matrix(hidden_, inputs, 1.0 / std::sqrt(inputs));
      b1_ = Eigen::VectorXd::Zero(hidden_);
      w2_ = uniform_matrix(outputs, hidden_, 1.0 / std::sqrt(hidden_));
    } else {
      w2_ = uniform_matrix(outputs, inputs, 1.0 / std::sqrt(inputs));
    }
    b2_ = Eigen::VectorXd::Zero(outputs);
  }

  Eigen::VectorXd values(const Eigen::VectorXd& x) const {
    if (hidden_ > 0) return w2_ * (w1_ * x + b1_).array().tanh().matrix() + b2_;
    return w2_ * x + b2_;
  }

  /// One SGD step on 1/2 (Q(x,a) - target)^2, gradient through output a only.
  void sgd_update(const Eigen::VectorXd& x, int action, double target, double eta) {
    if (hidden_ > 0) {
      Eigen::VectorXd h = (w1_ * x + b1_).array().tanh().matrix();
      double q = w2_.row(action).dot(h) + b2_(action);
      double delta = q - target;
      Eigen::VectorXd dh = delta * w2_.row(action).transpose();
      Eigen::VectorXd dz = dh.cwiseProduct((1.0 - h.array().square()).matrix());
      w2_.row(action) -= eta * delta * h.transpose();
      b2_(action) -= eta * delta;
      w1_ -= eta * dz * x.transpose();
      b1_ -= eta * dz;
    } else {
      double q = w2_.row(action).dot(x) + b2_(action);
      double delta = q - target;
      w2_.row(action) -= eta * delta * x.transpose();
      b2_(action) -= eta * delta;
    }
  }

 private:
  int hidden_;
  Eigen::MatrixXd w1_, w2_;
  Eigen::VectorXd b1_, b2_;
};

/// Forward pass with invalid actions (temperature steps off the grid)
/// reported as -infinity for selection purposes.
inline Eigen::VectorXd q_values(const QNetwork& qnet, const SearchState& state) {
  Eigen::VectorXd q = qnet.values(encode_state(state));
  for (Eigen::Index a = 0; a < q.size(); ++a)
    if (!action_valid(state, static_cast<int>(a))) q(a) = -std::numeric_limits<double>::infinity();
  return q;
}

/// Epsilon-greedy over the valid actions; greedy ties go to the lowest index.
inline int select_action(const Eigen::VectorXd& qvals, double epsilon, std::mt19937_64& gen) {
  std::vector<int> valid;
  for (Eigen::Index a = 0; a < qvals.size(); ++a)
    if (qvals(a) != -std::numeric_limits<double>::infinity()) valid.push_back(static_cast<int>(a));
  if (valid.empty()) throw std::runtime_error("no valid action");
  if (rng::uniform01(gen) < epsilon)
    return valid[rng::uniform_below(gen, valid.size())];
  int best = valid.front();
  for (int a : valid)
    if (qvals(a) > qvals(best)) best = a;
  return best;
}

/// Evaluates a state: composes one rollout and scores it. The per-iteration
/// seed keeps rollouts reproducible.
using RewardFn = std::function<double(const SearchState&, std::uint64_t)>;

struct StepResult {
  SearchState next;
  double reward = 0;
};

inline StepResult step(const SearchState& state, int action, const RewardFn& reward_fn,
                       std::uint64_t seed) {
  StepResult r;
  r.next = apply_action(state, action);
  r.reward = reward_fn(r.next, seed);
  return r;
}

inline double q_target(double reward, const Eigen::VectorXd& next_q, double gamma) {
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < next_q.size(); ++a) best = std::max(best, next_q(a));
  return reward + gamma * best;
}

/// Watkins update: one SGD step toward r + gamma * max_a' Q(s', a').
inline void q_update(QNetwork& qnet, const SearchState& s, int action, double reward,
                     const SearchState& next, const SearchHyperparams& hp) {
  double target = q_target(reward, q_values(qnet, next), hp.gamma);
  if (!std::isfinite(target))
    throw std::runtime_error("q_update: non-finite target (reward " + std::to_string(reward) + ")");
  qnet.sgd_update(encode_state(s), action, target, hp.eta);
}

struct IterationRecord {
  int iteration = 0;  // 1-based
  SearchState state;  // state after the action (the one evaluated)
  int action = -1;
  double reward = 0;
  bool good = false;
  double epsilon = 0;
  int window_count = 0;  // goods among the trailing `window` iterations
};

struct SearchResult {
  std::vector<IterationRecord> rl_log;
  std::vector<IterationRecord> random_log;
  std::vector<std::pair<SearchState, double>> best;  // RL arm, ranked by reward
};

namespace detail {

// Fresh start: exactly two random plan bits on (one if the plan is that
// short), temperatures back at 1.0.
inline SearchState random_restart(int n_songs, std::mt19937_64& gen) {
  SearchState s;
  s.plan.assign(n_songs, 0);
  if (n_songs >= 1) {
    int first = static_cast<int>(rng::uniform_below(gen, n_songs));
    s.plan[first] = 1;
    if (n_songs >= 2) {
      int second;
      do {
        second = static_cast<int>(rng::uniform_below(gen, n_songs));
      } while (second == first);
      s.plan[second] = 1;
    }
  }
  return s;
}

}  // namespace detail

/// Runs the learning loop plus a budget- and seed-matched uniform-random
/// baseline arm. Every iteration evaluates one composition; the epsilon
/// schedule anneals linearly over the first half of the budget and the state
/// restarts to two fresh plan bits every `restart_period` iterations.
inline SearchResult run_search(const RewardFn& reward_fn, int n_songs,
                               const SearchHyperparams& hp, std::uint64_t seed) {
  hp.validate();
  if (n_songs < 1) throw std::invalid_argument("run_search: need at least one song");
  SearchResult result;
  int decay = hp.eps_decay_iters > 0 ? hp.eps_decay_iters : std::max(1, hp.iterations / 2);
  auto epsilon_at = [&](int iter) {
    double frac = std::min(1.0, static_cast<double>(iter - 1) / decay);
    return hp.eps_start + (hp.eps_end - hp.eps_start) * frac;
  };

  std::map<SearchState, double> best_rewards;
  for (int arm = 0; arm < 2; ++arm) {
    bool learning = arm == 0;
    std::vector<IterationRecord>& log = learning ? result.rl_log : result.random_log;
    std::mt19937_64 gen(rng::derive_seed(seed, learning ? 1 : 2));
    QNetwork qnet(n_songs + 2, action_count(n_songs), hp.hidden, rng::derive_seed(seed, 3));
    SearchState state = detail::random_restart(n_songs, gen);
    std::vector<char> window_flags;
    int window_count = 0;

    for (int iter = 1; iter <= hp.iterations; ++iter) {
      if (iter > 1 && (iter - 1) % hp.restart_period == 0)
        state = detail::random_restart(n_songs, gen);
      double eps = learning ? epsilon_at(iter) : 1.0;
      Eigen::VectorXd q = q_values(qnet, state);
      int action = select_action(q, learning ? eps : 1.0, gen);
      // The composition seed is shared across arms so both score identical
      // rollouts for identical states.
      StepResult sr = step(state, action, reward_fn, rng::derive_seed(seed, 1000 + iter));
      if (learning) q_update(qnet, state, action, sr.reward, sr.next, hp);

      IterationRecord rec;
      rec.iteration = iter;
      rec.state = sr.next;
      rec.action = action;
      rec.reward = sr.reward;
      rec.good = sr.reward > hp.good_threshold;
      rec.epsilon = eps;
      window_flags.push_back(rec.good ? 1 : 0);
      window_count += rec.good ? 1 : 0;
      if (static_cast<int>(window_flags.size()) > hp.window) {
        window_count -= window_flags[window_flags.size() - hp.window - 1] ? 1 : 0;
      }
      rec.window_count = window_count;
      log.push_back(rec);

      if (learning) {
        auto [it, inserted] = best_rewards.try_emplace(sr.next, sr.reward);
        if (!inserted && sr.reward > it->second) it->second = sr.reward;
      }
      state = sr.next;
    }
  }

  result.best.assign(best_rewards.begin(), best_rewards.end());
  std::sort(result.best.begin(), result.best.end(),
            [](const auto& a, const auto& b) { return a.second > b.second; });
  if (static_cast<int>(result.best.size()) > hp.top_k) result.best.resize(hp.top_k);
  return result;
}

/// Good-composition count over a trailing window, defined for i >= window.
inline std::vector<int> moving_good_count(const std::vector<IterationRecord>& log, int window = 200) {
  std::vector<int> out;
  if (static_cast<int>(log.size()) < window) return out;
  int count = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    count += log[i].good ? 1 : 0;
    if (i >= static_cast<std::size_t>(window)) count -= log[i - window].good ? 1 : 0;
    if (i + 1 >= static_cast<std::size_t>(window)) out.push_back(count);
  }
  return out;
}

inline std::string plan_hex(const std::vector<std::uint8_t>& plan) {
  auto digits = static_cast<int>((plan.size() + 3) / 4);
  std::string out;
  for (int d = digits - 1; d >= 0; --d) {
    int nibble = 0;
    for (int b = 0; b < 4; ++b) {
      std::size_t bit = static_cast<std::size_t>(d) * 4 + b;
      if (bit < plan.size() && plan[bit]) nibble |= 1 << b;
    }
    out += "0123456789abcdef"[nibble];
  }
  return out;
}

inline std::string search_log_csv(const SearchResult& result) {
  std::string out = "iter,plan_hex,t_pitch,t_dur,reward,is_good,epsilon,window_count,arm\n";
  auto emit = [&](const std::vector<IterationRecord>& log, const char* arm) {
    for (const IterationRecord& r : log) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%d,%s,%g,%g,%.17g,%d,%g,%d,%s\n", r.iteration,
                    plan_hex(r.state.plan).c_str(), r.state.t_pitch(), r.state.t_dur(), r.reward,
                    r.good ? 1 : 0, r.epsilon, r.window_count, arm);
      out += buf;
    }
  };
  emit(result.rl_log, "rl");
  emit(result.random_log, "random");
  return out;
}

/// Ranked report of the best states with plan bits resolved to song ids.
inline std::string best_states_report(const SearchResult& result,
                                      const std::vector<std::string>& song_ids) {
  std::string out = "rank reward t_pitch t_dur songs\n";
  int rank = 1;
  for (const auto& [state, reward] : result.best) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%d %.4f %g %g ", rank++, reward, state.t_pitch(),
                  state.t_dur());
    out += buf;
    bool first = true;
    for (std::size_t i = 0; i < state.plan.size(); ++i) {
      if (!state.plan[i]) continue;
      if (!first) out += '+';
      out += i < song_ids.size() ? song_ids[i] : std::to_string(i);
      first = false;
    }
    if (first) out += "-";
    out += '\n';
  }
  return out;
}

}  // namespace amadeus

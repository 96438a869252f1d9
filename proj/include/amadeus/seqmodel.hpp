/// @file
/// @brief Plan-conditioned recurrent sequence model: stacked LSTM layers over
/// encoded note-set frames with the plan bits appended to every timestep's
/// input, 2*n_s softmax heads, cross-entropy loss with sustain masking,
/// backpropagation through time and Adam training.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "amadeus/common.hpp"
#include "amadeus/multistream.hpp"

namespace amadeus {

struct ModelHyperparams {
  int context_len = 20;  // l_c
  int num_layers = 2;    // n_l
  int units = 300;       // n_u
  int n_songs = 0;       // plan width
  int batch_size = 64;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Representation dimensions the model is bound to.
  int n_s = 5;
  int n_d = 0;

  int frame_size() const { return n_s * (kPitchClasses + n_d); }
  int input_size() const { return frame_size() + n_songs; }
  int layer_input(int layer) const { return layer == 0 ? input_size() : units; }

  void validate() const {
    if (context_len <= 0 || num_layers <= 0 || units <= 0 || batch_size <= 0 || n_s <= 0 ||
        n_d <= 0 || n_songs < 0)
      throw std::invalid_argument("model hyperparameters must be positive");
    if (learning_rate <= 0 || beta1 <= 0 || beta1 >= 1 || beta2 <= 0 || beta2 >= 1 || epsilon <= 0)
      throw std::invalid_argument("Adam hyperparameters out of range");
  }
};

// Gate rows/columns are packed [input, forget, cell, output], each `units` wide.
struct LstmLayer {
  Eigen::MatrixXd w_in;   // 4u x layer_input
  Eigen::MatrixXd w_rec;  // 4u x u
  Eigen::MatrixXd bias;   // 4u x 1
};

struct Head {
  Eigen::MatrixXd w;  // classes x u
  Eigen::MatrixXd b;  // classes x 1
};

struct ModelParams {
  ModelHyperparams hp;
  std::vector<LstmLayer> layers;
  std::vector<Head> pitch_heads;  // n_s heads, 90 classes
  std::vector<Head> dur_heads;    // n_s heads, n_d classes
};

template <typename Params, typename Fn>
void for_each_array(Params& params, Fn&& fn) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    std::string prefix = "layer" + std::to_string(l) + ".";
    fn(prefix + "w_in", params.layers[l].w_in);
    fn(prefix + "w_rec", params.layers[l].w_rec);
    fn(prefix + "bias", params.layers[l].bias);
  }
  for (std::size_t s = 0; s < params.pitch_heads.size(); ++s) {
    std::string prefix = "pitch_head" + std::to_string(s) + ".";
    fn(prefix + "w", params.pitch_heads[s].w);
    fn(prefix + "b", params.pitch_heads[s].b);
  }
  for (std::size_t s = 0; s < params.dur_heads.size(); ++s) {
    std::string prefix = "dur_head" + std::to_string(s) + ".";
    fn(prefix + "w", params.dur_heads[s].w);
    fn(prefix + "b", params.dur_heads[s].b);
  }
}

/// Fan-in scaled uniform init; forget-gate biases start at 1.0.
inline ModelParams init_params(const ModelHyperparams& hp, std::uint64_t seed) {
  hp.validate();
  std::mt19937_64 gen(seed);
  auto uniform_matrix = [&](int rows, int cols, double scale) {
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = (rng::uniform01(gen) * 2 - 1) * scale;
    return m;
  };
  ModelParams p;
  p.hp = hp;
  int u = hp.units;
  for (int l = 0; l < hp.num_layers; ++l) {
    int in = hp.layer_input(l);
    LstmLayer layer;
    layer.w_in = uniform_matrix(4 * u, in, 1.0 / std::sqrt(in));
    layer.w_rec = uniform_matrix(4 * u, u, 1.0 / std::sqrt(u));
    layer.bias = Eigen::MatrixXd::Zero(4 * u, 1);
    layer.bias.block(u, 0, u, 1).setOnes();
    p.layers.push_back(std::move(layer));
  }
  for (int s = 0; s < hp.n_s; ++s) {
    p.pitch_heads.push_back({uniform_matrix(kPitchClasses, u, 1.0 / std::sqrt(u)),
                             Eigen::MatrixXd::Zero(kPitchClasses, 1)});
    p.dur_heads.push_back(
        {uniform_matrix(hp.n_d, u, 1.0 / std::sqrt(u)), Eigen::MatrixXd::Zero(hp.n_d, 1)});
  }
  return p;
}

inline ModelParams zeros_like(const ModelParams& params) {
  ModelParams z = params;
  for_each_array(z, [](const std::string&, Eigen::MatrixXd& m) { m.setZero(); });
  return z;
}

// ---------------------------------------------------------------------------
// Training examples
// ---------------------------------------------------------------------------

struct TrainingExample {
  std::vector<std::vector<double>> context;  // l_c frames
  std::vector<std::uint8_t> plan;            // n_songs, one-hot during training
  std::vector<int> pitch_targets;            // n_s classes in 0..89
  std::vector<int> dur_targets;              // n_s indices in 0..n_d-1
  std::vector<std::uint8_t> sustain_mask;    // 1 = deterministic sustain slot
};

/// One example per note-set position of every song; contexts before the song
/// start are left-padded with all-rest frames. Songs shorter than two
/// note-sets are skipped with a warning.
inline std::vector<TrainingExample> make_training_set(
    const std::vector<MultiStreamSequence>& corpus, const ModelHyperparams& hp,
    WarningSink* warnings = nullptr) {
  if (static_cast<int>(corpus.size()) != hp.n_songs)
    throw std::invalid_argument("corpus size does not match the plan width");
  std::vector<TrainingExample> out;
  for (int song = 0; song < hp.n_songs; ++song) {
    const MultiStreamSequence& seq = corpus[song];
    auto m = static_cast<int>(seq.note_sets.size());
    if (m < 2) {
      warn(warnings, "song " + std::to_string(song) + " has fewer than 2 note-sets; skipped");
      continue;
    }
    std::vector<std::vector<double>> frames;
    frames.reserve(m);
    for (const NoteSet& set : seq.note_sets) frames.push_back(encode_frame(set, seq.config));
    std::vector<double> pad = rest_frame(seq.config);

    for (int i = 0; i < m; ++i) {
      TrainingExample ex;
      ex.context.reserve(hp.context_len);
      for (int t = i - hp.context_len; t < i; ++t)
        ex.context.push_back(t < 0 ? pad : frames[t]);
      ex.plan.assign(hp.n_songs, 0);
      ex.plan[song] = 1;
      const NoteSet& target = seq.note_sets[i];
      for (int s = 0; s < hp.n_s; ++s) {
        ex.pitch_targets.push_back(target.symbols[s].pitch);
        ex.dur_targets.push_back(target.symbols[s].duration_index);
        ex.sustain_mask.push_back(target.symbols[s].is_sustain() ? 1 : 0);
      }
      out.push_back(std::move(ex));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

namespace detail {

inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

inline Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    double mx = logits.row(r).maxCoeff();
    Eigen::ArrayXd e = (logits.row(r).array() - mx).exp();
    out.row(r) = (e / e.sum()).matrix();
  }
  return out;
}

struct LayerCache {
  std::vector<Eigen::MatrixXd> i, f, g, o, c, tc, h;  // one entry per timestep
};

struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // layer-0 inputs per timestep (B x input_size)
  std::vector<LayerCache> layers;
  Eigen::MatrixXd h_final;  // B x u
};

inline void lstm_forward(const ModelParams& p, ForwardCache& cache) {
  const int T = static_cast<int>(cache.inputs.size());
  const auto B = cache.inputs.front().rows();
  const int u = p.hp.units;
  cache.layers.assign(p.hp.num_layers, LayerCache{});
  const std::vector<Eigen::MatrixXd>* below = &cache.inputs;
  for (int l = 0; l < p.hp.num_layers; ++l) {
    LayerCache& lc = cache.layers[l];
    lc.i.resize(T);
    lc.f.resize(T);
    lc.g.resize(T);
    lc.o.resize(T);
    lc.c.resize(T);
    lc.tc.resize(T);
    lc.h.resize(T);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(B, u);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(B, u);
    for (int t = 0; t < T; ++t) {
      Eigen::MatrixXd z = (*below)[t] * p.layers[l].w_in.transpose() +
                          h * p.layers[l].w_rec.transpose();
      z.rowwise() += p.layers[l].bias.col(0).transpose();
      lc.i[t] = sigmoid(z.leftCols(u));
      lc.f[t] = sigmoid(z.middleCols(u, u));
      lc.g[t] = z.middleCols(2 * u, u).array().tanh();
      lc.o[t] = sigmoid(z.rightCols(u));
      c = lc.f[t].cwiseProduct(c) + lc.i[t].cwiseProduct(lc.g[t]);
      lc.c[t] = c;
      lc.tc[t] = c.array().tanh();
      h = lc.o[t].cwiseProduct(lc.tc[t]);
      lc.h[t] = h;
    }
    below = &lc.h;
  }
  cache.h_final = cache.layers.back().h.back();
}

inline std::vector<Eigen::MatrixXd> batch_inputs(const ModelHyperparams& hp,
                                                 std::span<const TrainingExample> batch) {
  const auto B = static_cast<Eigen::Index>(batch.size());
  std::vector<Eigen::MatrixXd> inputs(hp.context_len, Eigen::MatrixXd(B, hp.input_size()));
  for (Eigen::Index e = 0; e < B; ++e) {
    const TrainingExample& ex = batch[e];
    if (static_cast<int>(ex.context.size()) != hp.context_len)
      throw std::invalid_argument("context length mismatch");
    if (static_cast<int>(ex.plan.size()) != hp.n_songs)
      throw std::invalid_argument("plan width mismatch");
    for (int t = 0; t < hp.context_len; ++t) {
      if (static_cast<int>(ex.context[t].size()) != hp.frame_size())
        throw std::invalid_argument("frame size mismatch");
      for (int k = 0; k < hp.frame_size(); ++k) inputs[t](e, k) = ex.context[t][k];
      for (int k = 0; k < hp.n_songs; ++k)
        inputs[t](e, hp.frame_size() + k) = static_cast<double>(ex.plan[k]);
    }
  }
  return inputs;
}

}  // namespace detail

struct ForwardOutput {
  std::vector<Eigen::VectorXd> pitch;  // n_s distributions over 90 classes
  std::vector<Eigen::VectorXd> dur;    // n_s distributions over n_d classes
};

/// Runs the stacked LSTM over l_c frames with the plan appended to every
/// timestep's input; the final hidden state feeds all 2*n_s softmax heads.
inline ForwardOutput forward(const ModelParams& params,
                             const std::vector<std::vector<double>>& frames,
                             const std::vector<std::uint8_t>& plan) {
  const ModelHyperparams& hp = params.hp;
  TrainingExample probe;
  probe.context = frames;
  probe.plan = plan;
  detail::ForwardCache cache;
  cache.inputs = detail::batch_inputs(hp, std::span(&probe, 1));
  detail::lstm_forward(params, cache);
  ForwardOutput out;
  for (int s = 0; s < hp.n_s; ++s) {
    Eigen::MatrixXd logits = cache.h_final * params.pitch_heads[s].w.transpose();
    logits.rowwise() += params.pitch_heads[s].b.col(0).transpose();
    out.pitch.push_back(detail::softmax_rows(logits).row(0).transpose());
    logits = cache.h_final * params.dur_heads[s].w.transpose();
    logits.rowwise() += params.dur_heads[s].b.col(0).transpose();
    out.dur.push_back(detail::softmax_rows(logits).row(0).transpose());
  }
  return out;
}

/// Per-example loss: cross-entropy summed over the pitch and duration heads,
/// each averaged over the unmasked streams. Probabilities are clamped at
/// 1e-12 before the log.
inline double example_loss(const ForwardOutput& out, const TrainingExample& ex) {
  int unmasked = 0;
  for (std::uint8_t m : ex.sustain_mask)
    if (!m) ++unmasked;
  if (unmasked == 0) return 0.0;
  double loss = 0;
  for (std::size_t s = 0; s < ex.sustain_mask.size(); ++s) {
    if (ex.sustain_mask[s]) continue;
    loss -= std::log(std::max(out.pitch[s](ex.pitch_targets[s]), 1e-12));
    loss -= std::log(std::max(out.dur[s](ex.dur_targets[s]), 1e-12));
  }
  return loss / unmasked;
}

struct BatchResult {
  double loss_sum = 0;      // sum of per-example losses
  ModelParams gradients;    // gradients of loss_sum
};

/// Exact gradients of the summed batch loss via backpropagation through time.
inline BatchResult backward(const ModelParams& params, std::span<const TrainingExample> batch) {
  const ModelHyperparams& hp = params.hp;
  const auto B = static_cast<Eigen::Index>(batch.size());
  const int T = hp.context_len;
  const int u = hp.units;

  detail::ForwardCache cache;
  cache.inputs = detail::batch_inputs(hp, batch);
  detail::lstm_forward(params, cache);

  BatchResult result;
  result.gradients = zeros_like(params);
  Eigen::MatrixXd dh_final = Eigen::MatrixXd::Zero(B, u);

  std::vector<double> inv_unmasked(B, 0.0);
  for (Eigen::Index e = 0; e < B; ++e) {
    int unmasked = 0;
    for (std::uint8_t m : batch[e].sustain_mask)
      if (!m) ++unmasked;
    inv_unmasked[e] = unmasked > 0 ? 1.0 / unmasked : 0.0;
  }

  auto head_pass = [&](const Head& head, Head& grad, auto target_of, int stream) {
    Eigen::MatrixXd logits = cache.h_final * head.w.transpose();
    logits.rowwise() += head.b.col(0).transpose();
    Eigen::MatrixXd probs = detail::softmax_rows(logits);
    Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(B, head.w.rows());
    for (Eigen::Index e = 0; e < B; ++e) {
      if (batch[e].sustain_mask[stream] || inv_unmasked[e] == 0.0) continue;
      int target = target_of(batch[e], stream);
      result.loss_sum -= std::log(std::max(probs(e, target), 1e-12)) * inv_unmasked[e];
      dlogits.row(e) = probs.row(e) * inv_unmasked[e];
      dlogits(e, target) -= inv_unmasked[e];
    }
    grad.w += dlogits.transpose() * cache.h_final;
    grad.b += dlogits.colwise().sum().transpose();
    dh_final += dlogits * head.w;
  };
  for (int s = 0; s < hp.n_s; ++s) {
    head_pass(params.pitch_heads[s], result.gradients.pitch_heads[s],
              [](const TrainingExample& ex, int stream) { return ex.pitch_targets[stream]; }, s);
    head_pass(params.dur_heads[s], result.gradients.dur_heads[s],
              [](const TrainingExample& ex, int stream) { return ex.dur_targets[stream]; }, s);
  }

  // BPTT, top layer down.
  std::vector<Eigen::MatrixXd> dx_above;  // gradient w.r.t. the layer-above inputs per timestep
  for (int l = hp.num_layers - 1; l >= 0; --l) {
    const detail::LayerCache& lc = cache.layers[l];
    const LstmLayer& lp = params.layers[l];
    LstmLayer& lg = result.gradients.layers[l];
    const std::vector<Eigen::MatrixXd>& below =
        (l == 0) ? cache.inputs : cache.layers[l - 1].h;

    Eigen::MatrixXd dh_rec = Eigen::MatrixXd::Zero(B, u);
    Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(B, u);
    std::vector<Eigen::MatrixXd> dx_here(T);
    for (int t = T - 1; t >= 0; --t) {
      Eigen::MatrixXd dh = dh_rec;
      if (l == hp.num_layers - 1) {
        if (t == T - 1) dh += dh_final;
      } else {
        dh += dx_above[t];
      }
      Eigen::MatrixXd dout = dh.cwiseProduct(lc.tc[t]);
      dc += dh.cwiseProduct(lc.o[t])
                .cwiseProduct((1.0 - lc.tc[t].array().square()).matrix());
      Eigen::MatrixXd di = dc.cwiseProduct(lc.g[t]);
      Eigen::MatrixXd dg = dc.cwiseProduct(lc.i[t]);
      Eigen::MatrixXd df = Eigen::MatrixXd::Zero(B, u);
      if (t > 0) df = dc.cwiseProduct(lc.c[t - 1]);
      Eigen::MatrixXd dc_prev = dc.cwiseProduct(lc.f[t]);

      Eigen::MatrixXd dz(B, 4 * u);
      dz.leftCols(u) = di.cwiseProduct(lc.i[t]).cwiseProduct((1.0 - lc.i[t].array()).matrix());
      dz.middleCols(u, u) =
          df.cwiseProduct(lc.f[t]).cwiseProduct((1.0 - lc.f[t].array()).matrix());
      dz.middleCols(2 * u, u) = dg.cwiseProduct((1.0 - lc.g[t].array().square()).matrix());
      dz.rightCols(u) = dout.cwiseProduct(lc.o[t]).cwiseProduct((1.0 - lc.o[t].array()).matrix());

      lg.w_in += dz.transpose() * below[t];
      if (t > 0) lg.w_rec += dz.transpose() * lc.h[t - 1];
      lg.bias += dz.colwise().sum().transpose();
      if (l > 0) dx_here[t] = dz * lp.w_in;
      dh_rec = dz * lp.w_rec;
      dc = dc_prev;
    }
    dx_above = std::move(dx_here);
  }
  return result;
}

/// Loss only (no gradients), summed over the batch.
inline double batch_loss(const ModelParams& params, std::span<const TrainingExample> batch) {
  double total = 0;
  for (const TrainingExample& ex : batch) total += example_loss(forward(params, ex.context, ex.plan), ex);
  return total;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
  ModelParams m, v;
  long timestep = 0;

  explicit AdamState(const ModelParams& params) : m(zeros_like(params)), v(zeros_like(params)) {}
};

/// Standard bias-corrected Adam update; `scale` multiplies the gradients
/// first (pass 1/batch_size to step on the batch mean).
inline void adam_step(ModelParams& params, AdamState& state, const ModelParams& gradients,
                      double scale = 1.0) {
  const ModelHyperparams& hp = params.hp;
  ++state.timestep;
  double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.timestep));
  double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.timestep));

  struct Slot {
    Eigen::MatrixXd* p;
    Eigen::MatrixXd* m;
    Eigen::MatrixXd* v;
    const Eigen::MatrixXd* g;
  };
  std::vector<Slot> slots;
  for_each_array(params, [&](const std::string&, Eigen::MatrixXd& m) { slots.push_back({&m, nullptr, nullptr, nullptr}); });
  std::size_t k = 0;
  for_each_array(state.m, [&](const std::string&, Eigen::MatrixXd& m) { slots[k++].m = &m; });
  k = 0;
  for_each_array(state.v, [&](const std::string&, Eigen::MatrixXd& m) { slots[k++].v = &m; });
  k = 0;
  for_each_array(const_cast<ModelParams&>(gradients),
                 [&](const std::string&, Eigen::MatrixXd& m) { slots[k++].g = &m; });

  for (Slot& s : slots) {
    Eigen::ArrayXXd g = s.g->array() * scale;
    s.m->array() = hp.beta1 * s.m->array() + (1 - hp.beta1) * g;
    s.v->array() = hp.beta2 * s.v->array() + (1 - hp.beta2) * g.square();
    Eigen::ArrayXXd m_hat = s.m->array() / bc1;
    Eigen::ArrayXXd v_hat = s.v->array() / bc2;
    s.p->array() -= hp.learning_rate * m_hat / (v_hat.sqrt() + hp.epsilon);
  }
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline nlohmann::json checkpoint_json(const ModelParams& params) {
  nlohmann::json j;
  j["format"] = "amadeus-checkpoint";
  j["version"] = 1;
  const ModelHyperparams& hp = params.hp;
  j["hyperparams"] = {{"context_len", hp.context_len}, {"num_layers", hp.num_layers},
                      {"units", hp.units},             {"n_songs", hp.n_songs},
                      {"batch_size", hp.batch_size},   {"learning_rate", hp.learning_rate},
                      {"beta1", hp.beta1},             {"beta2", hp.beta2},
                      {"epsilon", hp.epsilon},         {"n_s", hp.n_s},
                      {"n_d", hp.n_d}};
  nlohmann::json arrays = nlohmann::json::object();
  for_each_array(const_cast<ModelParams&>(params), [&](const std::string& name, Eigen::MatrixXd& m) {
    nlohmann::json entry;
    entry["shape"] = {m.rows(), m.cols()};
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    entry["data"] = std::move(data);
    arrays[name] = std::move(entry);
  });
  j["arrays"] = std::move(arrays);
  return j;
}

inline void save_checkpoint(const ModelParams& params, const std::string& path) {
  write_file_bytes(path, checkpoint_json(params).dump(1));
}

inline ModelParams load_checkpoint(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file_bytes(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint " + path + ": " + e.what());
  }
  if (!j.contains("format") || j["format"] != "amadeus-checkpoint")
    throw std::runtime_error("checkpoint " + path + ": bad magic header");
  if (j.value("version", 0) != 1)
    throw std::runtime_error("checkpoint " + path + ": unsupported version");
  const auto& h = j.at("hyperparams");
  ModelHyperparams hp;
  hp.context_len = h.at("context_len");
  hp.num_layers = h.at("num_layers");
  hp.units = h.at("units");
  hp.n_songs = h.at("n_songs");
  hp.batch_size = h.at("batch_size");
  hp.learning_rate = h.at("learning_rate");
  hp.beta1 = h.at("beta1");
  hp.beta2 = h.at("beta2");
  hp.epsilon = h.at("epsilon");
  hp.n_s = h.at("n_s");
  hp.n_d = h.at("n_d");

  ModelParams params = init_params(hp, 0);
  const auto& arrays = j.at("arrays");
  for_each_array(params, [&](const std::string& name, Eigen::MatrixXd& m) {
    if (!arrays.contains(name)) throw std::runtime_error("checkpoint missing array " + name);
    const auto& entry = arrays.at(name);
    auto rows = entry.at("shape").at(0).get<Eigen::Index>();
    auto cols = entry.at("shape").at(1).get<Eigen::Index>();
    if (rows != m.rows() || cols != m.cols())
      throw std::runtime_error("checkpoint array " + name + ": expected " +
                               std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                               ", found " + std::to_string(rows) + "x" + std::to_string(cols));
    const auto& data = entry.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw std::runtime_error("checkpoint array " + name + ": data size mismatch");
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data.at(k++).get<double>();
  });
  return params;
}

/// Content fingerprint used to tie compositions to the checkpoint they used.
inline std::string checkpoint_id(const ModelParams& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for_each_array(const_cast<ModelParams&>(params), [&](const std::string& name, Eigen::MatrixXd& m) {
    h = fnv1a64(name.data(), name.size(), h);
    h = fnv1a64(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()), h);
  });
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0;
  double holdout_loss = 0;
};

struct TrainOptions {
  std::uint64_t seed = 1;
  double holdout_fraction = 0.1;  // reporting only
  std::string checkpoint_dir;    // per-epoch checkpoints when non-empty
};

/// Seeded-shuffle minibatch Adam training; returns the per-epoch loss trace.
inline std::vector<EpochStats> train(ModelParams& params,
                                     const std::vector<TrainingExample>& examples, int epochs,
                                     const TrainOptions& options = {}) {
  if (examples.empty()) throw std::invalid_argument("train: no examples");
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 split_gen(rng::derive_seed(options.seed, 0));
  rng::shuffle(order, split_gen);
  auto holdout_count = static_cast<std::size_t>(options.holdout_fraction * examples.size());
  std::vector<std::size_t> holdout(order.end() - holdout_count, order.end());
  order.resize(order.size() - holdout_count);
  if (order.empty()) {
    order = std::move(holdout);
    holdout.clear();
  }

  AdamState adam(params);
  std::vector<EpochStats> trace;
  std::vector<TrainingExample> batch;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::mt19937_64 gen(rng::derive_seed(options.seed, 1 + epoch));
    rng::shuffle(order, gen);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += params.hp.batch_size) {
      std::size_t stop = std::min(order.size(), start + params.hp.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(examples[order[i]]);
      BatchResult r = backward(params, batch);
      if (!std::isfinite(r.loss_sum))
        throw std::runtime_error("training aborted: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch offset " + std::to_string(start));
      epoch_loss += r.loss_sum;
      adam_step(params, adam, r.gradients, 1.0 / static_cast<double>(batch.size()));
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = epoch_loss / static_cast<double>(order.size());
    if (!holdout.empty()) {
      std::vector<TrainingExample> hb;
      for (std::size_t i : holdout) hb.push_back(examples[i]);
      stats.holdout_loss = batch_loss(params, hb) / static_cast<double>(hb.size());
    }
    trace.push_back(stats);
    if (!options.checkpoint_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%03d.json", epoch);
      save_checkpoint(params, (std::filesystem::path(options.checkpoint_dir) / name).string());
    }
  }
  return trace;
}

inline std::string loss_trace_csv(const std::vector<EpochStats>& trace) {
  std::string out = "epoch,mean_loss,holdout_loss\n";
  for (const EpochStats& row : trace) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", row.epoch, row.mean_loss,
                  row.holdout_loss);
    out += buf;
  }
  return out;
}

}  // namespace amadeus

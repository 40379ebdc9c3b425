#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "g4attn/common.hpp"
#include "g4attn/metrics.hpp"
#include "g4attn/model.hpp"
#include "g4attn/onehot.hpp"
#include "g4attn/rng.hpp"
#include "g4attn/signal.hpp"

namespace g4attn {

struct TrainConfig {
  double learning_rate = 0.001;
  int epochs = 10;
  int batch_size = 1024;
  uint64_t seed = 123;
  int input_length = 124;
  bool class_weighting = false;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Variant variant = Variant::Full;
  int kernel_size = 11;
  int num_kernels = 64;
  int lstm_units = 128;
  int hidden_units = 64;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ContractError("learning_rate must be positive");
    if (epochs < 1) throw ContractError("epochs must be >= 1");
    if (batch_size < 1) throw ContractError("batch_size must be >= 1");
    hyper().validate();
  }

  ModelHyper hyper() const {
    return ModelHyper{variant, input_length, kernel_size, num_kernels, lstm_units, hidden_units};
  }
};

// Plain-text key=value config; '#' starts a comment, unknown keys are
// rejected so typos do not silently fall back to defaults.
inline TrainConfig parse_train_config(std::istream& in) {
  TrainConfig cfg;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    const auto hash = t.find('#');
    if (hash != std::string_view::npos) t = trim(t.substr(0, hash));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key(trim(t.substr(0, eq)));
    const std::string value(trim(t.substr(eq + 1)));
    try {
      if (key == "learning_rate") cfg.learning_rate = std::stod(value);
      else if (key == "epochs") cfg.epochs = std::stoi(value);
      else if (key == "batch_size") cfg.batch_size = std::stoi(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "input_length") cfg.input_length = std::stoi(value);
      else if (key == "class_weighting") cfg.class_weighting = (value == "true" || value == "1");
      else if (key == "beta1") cfg.beta1 = std::stod(value);
      else if (key == "beta2") cfg.beta2 = std::stod(value);
      else if (key == "epsilon") cfg.epsilon = std::stod(value);
      else if (key == "variant") cfg.variant = variant_from_name(value);
      else if (key == "kernel_size") cfg.kernel_size = std::stoi(value);
      else if (key == "num_kernels") cfg.num_kernels = std::stoi(value);
      else if (key == "lstm_units") cfg.lstm_units = std::stoi(value);
      else if (key == "hidden_units") cfg.hidden_units = std::stoi(value);
      else throw ParseError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ParseError("config line " + std::to_string(line_no) + ": bad value for '" + key + "'");
    }
  }
  return cfg;
}

inline std::string serialize_train_config(const TrainConfig& cfg) {
  std::ostringstream out;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "learning_rate=" << num(cfg.learning_rate) << '\n'
      << "epochs=" << cfg.epochs << '\n'
      << "batch_size=" << cfg.batch_size << '\n'
      << "seed=" << cfg.seed << '\n'
      << "input_length=" << cfg.input_length << '\n'
      << "class_weighting=" << (cfg.class_weighting ? "true" : "false") << '\n'
      << "beta1=" << num(cfg.beta1) << '\n'
      << "beta2=" << num(cfg.beta2) << '\n'
      << "epsilon=" << num(cfg.epsilon) << '\n'
      << "variant=" << variant_name(cfg.variant) << '\n'
      << "kernel_size=" << cfg.kernel_size << '\n'
      << "num_kernels=" << cfg.num_kernels << '\n'
      << "lstm_units=" << cfg.lstm_units << '\n'
      << "hidden_units=" << cfg.hidden_units << '\n';
  return out.str();
}

// Inverse-frequency weights: w_class = |D| / (|C| * freq_class), |C| = 2.
struct ClassWeights {
  double w_pos = 1.0;
  double w_neg = 1.0;
};

inline ClassWeights compute_class_weights(size_t n_pos, size_t n_neg) {
  if (n_pos == 0 || n_neg == 0)
    throw DataError("compute_class_weights: both classes must be non-empty");
  const double total = static_cast<double>(n_pos + n_neg);
  return {total / (2.0 * static_cast<double>(n_pos)),
          total / (2.0 * static_cast<double>(n_neg))};
}

constexpr double kPredictionClamp = 1e-12;

// Mean (optionally class-weighted) binary cross-entropy over a batch, plus
// the per-example dL/dY. Predictions are clamped away from 0 and 1 before
// the logs.
inline std::pair<double, std::vector<double>> bce_loss(const std::vector<double>& predictions,
                                                       const std::vector<int>& targets,
                                                       const ClassWeights& weights = {}) {
  if (predictions.empty()) throw ContractError("bce_loss: empty batch");
  if (predictions.size() != targets.size())
    throw ContractError("bce_loss: predictions and targets differ in length");
  const double inv_b = 1.0 / static_cast<double>(predictions.size());
  double loss = 0.0;
  std::vector<double> grad(predictions.size(), 0.0);
  for (size_t i = 0; i < predictions.size(); ++i) {
    const int t = targets[i];
    if (t != 0 && t != 1) throw DataError("bce_loss: label must be 0 or 1");
    const double y =
        std::min(std::max(predictions[i], kPredictionClamp), 1.0 - kPredictionClamp);
    if (t == 1) {
      loss -= weights.w_pos * std::log(y);
      grad[i] = -inv_b * weights.w_pos / y;
    } else {
      loss -= weights.w_neg * std::log(1.0 - y);
      grad[i] = inv_b * weights.w_neg / (1.0 - y);
    }
  }
  return {loss * inv_b, std::move(grad)};
}

// Adam with bias correction. State lives in two gradient-shaped parameter
// sets plus the step counter.
struct AdamState {
  ModelParams m;
  ModelParams v;
  long step = 0;
};

inline AdamState make_adam_state(const ModelParams& params) {
  return AdamState{zeros_like(params), zeros_like(params), 0};
}

inline void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
                      const TrainConfig& cfg) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  std::vector<Tensor*> pt, mt, vt;
  std::vector<const Tensor*> gt;
  for_each_tensor(params, [&](std::string_view, Tensor& t) { pt.push_back(&t); });
  for_each_tensor(const_cast<ModelParams&>(grads),
                  [&](std::string_view, Tensor& t) { gt.push_back(&t); });
  for_each_tensor(state.m, [&](std::string_view, Tensor& t) { mt.push_back(&t); });
  for_each_tensor(state.v, [&](std::string_view, Tensor& t) { vt.push_back(&t); });

  for (size_t s = 0; s < pt.size(); ++s) {
    Tensor& theta = *pt[s];
    const Tensor& g = *gt[s];
    Tensor& m = *mt[s];
    Tensor& v = *vt[s];
    for (size_t i = 0; i < theta.numel(); ++i) {
      const double gi = g.at(i);
      if (!std::isfinite(gi)) throw DataError("adam_step: non-finite gradient encountered");
      m.at(i) = cfg.beta1 * m.at(i) + (1.0 - cfg.beta1) * gi;
      v.at(i) = cfg.beta2 * v.at(i) + (1.0 - cfg.beta2) * gi * gi;
      const double m_hat = m.at(i) / bc1;
      const double v_hat = v.at(i) / bc2;
      theta.at(i) -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

struct TrainLog {
  std::vector<double> epoch_mean_loss;
  ClassWeights weights;
  size_t n_pos = 0;
  size_t n_neg = 0;
};

namespace detail {

// Per-example gradients are accumulated into a fixed number of chunk
// buffers that are merged in chunk order, so the result is identical for
// any worker count.
constexpr size_t kGradChunks = 8;

struct EncodedExample {
  OneHotMatrix input;
  int label = 0;
};

inline std::vector<EncodedExample> encode_dataset(const std::vector<LabeledExample>& dataset,
                                                  int input_length) {
  std::vector<EncodedExample> out(dataset.size());
  parallel_for(dataset.size(), [&](size_t i) {
    out[i].input = encode_one_hot(dataset[i].record.bases, static_cast<size_t>(input_length));
    out[i].label = dataset[i].label;
  });
  return out;
}

}  // namespace detail

// Mini-batch Adam on (optionally class-weighted) BCE. Seeded init, seeded
// epoch shuffling, final short batch kept. Deterministic: the checkpoint is
// a pure function of (dataset, config).
inline std::pair<ModelParams, TrainLog> train(const std::vector<LabeledExample>& dataset,
                                              const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw DataError("train: empty dataset");

  const auto encoded = detail::encode_dataset(dataset, cfg.input_length);

  TrainLog log;
  for (const auto& e : encoded) (e.label == 1 ? log.n_pos : log.n_neg)++;
  ClassWeights weights;
  if (cfg.class_weighting) weights = compute_class_weights(log.n_pos, log.n_neg);
  log.weights = weights;

  ModelParams params = init_params(cfg.hyper(), cfg.seed);
  AdamState adam = make_adam_state(params);
  Rng shuffle_rng = split_rng(cfg.seed, 0x50f71eull);
  std::vector<size_t> order(encoded.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  const size_t batch = static_cast<size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_in_place(order, shuffle_rng);
    double epoch_loss = 0.0;
    size_t epoch_examples = 0;
    for (size_t begin = 0; begin < order.size(); begin += batch) {
      const size_t end = std::min(order.size(), begin + batch);
      const size_t b = end - begin;

      std::vector<double> predictions(b);
      std::vector<int> targets(b);
      std::vector<ForwardTrace> traces(b);
      parallel_for(b, [&](size_t k) {
        const auto& ex = encoded[order[begin + k]];
        predictions[k] = forward(ex.input, params, traces[k]);
        targets[k] = ex.label;
      });

      auto [loss, dY] = bce_loss(predictions, targets, weights);
      epoch_loss += loss * static_cast<double>(b);
      epoch_examples += b;

      const size_t chunk_count = std::min(detail::kGradChunks, b);
      std::vector<ModelParams> chunk_grads;
      chunk_grads.reserve(chunk_count);
      for (size_t c = 0; c < chunk_count; ++c) chunk_grads.push_back(zeros_like(params));
      parallel_for(chunk_count, [&](size_t c) {
        const size_t lo = b * c / chunk_count;
        const size_t hi = b * (c + 1) / chunk_count;
        for (size_t k = lo; k < hi; ++k)
          backward_accumulate(traces[k], dY[k], params, chunk_grads[c]);
      });
      ModelParams grads = std::move(chunk_grads[0]);
      for (size_t c = 1; c < chunk_count; ++c) {
        std::vector<Tensor*> dst;
        std::vector<const Tensor*> src;
        for_each_tensor(grads, [&](std::string_view, Tensor& t) { dst.push_back(&t); });
        for_each_tensor(chunk_grads[c], [&](std::string_view, Tensor& t) { src.push_back(&t); });
        for (size_t s = 0; s < dst.size(); ++s)
          for (size_t i = 0; i < dst[s]->numel(); ++i) dst[s]->at(i) += src[s]->at(i);
      }
      adam_step(params, grads, adam, cfg);
    }
    log.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(epoch_examples));
  }
  return {std::move(params), std::move(log)};
}

// Forward pass over a dataset; examples are encoded with the model's own
// input length.
inline std::vector<double> predict_scores(const ModelParams& params,
                                          const std::vector<LabeledExample>& dataset) {
  const auto encoded = detail::encode_dataset(dataset, params.hyper.input_length);
  std::vector<double> scores(encoded.size());
  parallel_for(encoded.size(), [&](size_t i) {
    ForwardTrace trace;
    scores[i] = forward(encoded[i].input, params, trace);
  });
  return scores;
}

struct EvaluateResult {
  EvalReport report;
  std::vector<double> scores;
};

inline EvaluateResult evaluate(const ModelParams& params,
                               const std::vector<LabeledExample>& dataset) {
  EvaluateResult result;
  result.scores = predict_scores(params, dataset);
  std::vector<int> labels;
  labels.reserve(dataset.size());
  for (const auto& e : dataset) labels.push_back(e.label);
  result.report = make_report(result.scores, labels);
  return result;
}

}  // namespace g4attn

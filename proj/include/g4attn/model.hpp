#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "g4attn/common.hpp"
#include "g4attn/onehot.hpp"
#include "g4attn/rng.hpp"
#include "g4attn/tensor.hpp"

// The classifier network: Conv1D feature extractor, bidirectional LSTM,
// additive-linear attention with softmax pooling, and a two-layer sigmoid
// head. Forward and backward passes are hand-derived and framework-free;
// ablation variants drop stages from the back.

namespace g4attn {

enum class Variant { Cnn, CnnLstm, CnnLstmAttn, Full };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Cnn: return "cnn";
    case Variant::CnnLstm: return "cnn_lstm";
    case Variant::CnnLstmAttn: return "cnn_lstm_attn";
    case Variant::Full: return "full";
  }
  return "?";
}

inline Variant variant_from_name(std::string_view name) {
  if (name == "cnn") return Variant::Cnn;
  if (name == "cnn_lstm") return Variant::CnnLstm;
  if (name == "cnn_lstm_attn") return Variant::CnnLstmAttn;
  if (name == "full") return Variant::Full;
  throw ParseError("unknown model variant: " + std::string(name));
}

struct ModelHyper {
  Variant variant = Variant::Full;
  int input_length = 124;
  int kernel_size = 11;  // K, odd so same-padding is symmetric
  int num_kernels = 64;  // F
  int lstm_units = 128;  // d_l per direction
  int hidden_units = 64; // h

  void validate() const {
    if (input_length < 1) throw ContractError("input_length must be positive");
    if (kernel_size < 1 || kernel_size % 2 == 0)
      throw ContractError("kernel_size must be odd and positive");
    if (num_kernels < 1 || lstm_units < 1 || hidden_units < 1)
      throw ContractError("num_kernels, lstm_units, hidden_units must be positive");
  }

  bool has_lstm() const { return variant != Variant::Cnn; }
  bool has_backward_lstm() const { return variant == Variant::Full; }
  bool has_attention() const {
    return variant == Variant::CnnLstmAttn || variant == Variant::Full;
  }

  // Width of the vector entering the prediction head.
  int feature_dim() const {
    switch (variant) {
      case Variant::Cnn: return num_kernels;
      case Variant::CnnLstm:
      case Variant::CnnLstmAttn: return lstm_units;
      case Variant::Full: return 2 * lstm_units;
    }
    return 0;
  }

  bool operator==(const ModelHyper&) const = default;
};

// Gate order: input, forget, output, candidate.
enum LstmGate { kGateI = 0, kGateF = 1, kGateO = 2, kGateG = 3 };

struct LstmWeights {
  std::array<Tensor, 4> w;  // F x d, input to gate
  std::array<Tensor, 4> u;  // d x d, recurrent
  std::array<Tensor, 4> b;  // d
};

struct ModelParams {
  ModelHyper hyper;
  Tensor conv_w;  // K x 4 x F
  Tensor conv_b;  // F
  LstmWeights lstm_fwd;
  LstmWeights lstm_bwd;  // Full variant only
  Tensor attn_w;  // feature_dim
  Tensor attn_b;  // scalar, shape {1}
  Tensor fc1_w;   // feature_dim x h
  Tensor fc1_b;   // h
  Tensor fc2_w;   // h
  Tensor fc2_b;   // scalar, shape {1}
};

namespace detail {

inline const char* gate_suffix(int g) {
  static const char* s[4] = {"i", "f", "o", "g"};
  return s[g];
}

}  // namespace detail

// Visits every parameter tensor in a fixed order (the order also pins the
// initialization draw sequence and the checkpoint layout).
template <typename Params, typename Fn>
void for_each_tensor(Params& p, Fn&& fn) {
  fn("conv_w", p.conv_w);
  fn("conv_b", p.conv_b);
  const bool has_lstm = p.hyper.has_lstm();
  const bool has_bwd = p.hyper.has_backward_lstm();
  for (int dir = 0; dir < 2; ++dir) {
    if (dir == 0 && !has_lstm) continue;
    if (dir == 1 && !has_bwd) continue;
    auto& lw = dir == 0 ? p.lstm_fwd : p.lstm_bwd;
    const std::string prefix = dir == 0 ? "lstm_fwd_" : "lstm_bwd_";
    for (int g = 0; g < 4; ++g) fn((prefix + "w_" + detail::gate_suffix(g)).c_str(), lw.w[g]);
    for (int g = 0; g < 4; ++g) fn((prefix + "u_" + detail::gate_suffix(g)).c_str(), lw.u[g]);
    for (int g = 0; g < 4; ++g) fn((prefix + "b_" + detail::gate_suffix(g)).c_str(), lw.b[g]);
  }
  if (p.hyper.has_attention()) {
    fn("attn_w", p.attn_w);
    fn("attn_b", p.attn_b);
  }
  fn("fc1_w", p.fc1_w);
  fn("fc1_b", p.fc1_b);
  fn("fc2_w", p.fc2_w);
  fn("fc2_b", p.fc2_b);
}

inline ModelParams make_zero_params(const ModelHyper& hyper) {
  hyper.validate();
  const auto K = static_cast<size_t>(hyper.kernel_size);
  const auto F = static_cast<size_t>(hyper.num_kernels);
  const auto d = static_cast<size_t>(hyper.lstm_units);
  const auto h = static_cast<size_t>(hyper.hidden_units);
  const auto feat = static_cast<size_t>(hyper.feature_dim());

  ModelParams p;
  p.hyper = hyper;
  p.conv_w = Tensor({K, 4, F});
  p.conv_b = Tensor({F});
  auto make_lstm = [&] {
    LstmWeights lw;
    for (int g = 0; g < 4; ++g) {
      lw.w[g] = Tensor({F, d});
      lw.u[g] = Tensor({d, d});
      lw.b[g] = Tensor({d});
    }
    return lw;
  };
  if (hyper.has_lstm()) p.lstm_fwd = make_lstm();
  if (hyper.has_backward_lstm()) p.lstm_bwd = make_lstm();
  if (hyper.has_attention()) {
    p.attn_w = Tensor({feat});
    p.attn_b = Tensor({1});
  }
  p.fc1_w = Tensor({feat, h});
  p.fc1_b = Tensor({h});
  p.fc2_w = Tensor({h});
  p.fc2_b = Tensor({1});
  return p;
}

inline ModelParams zeros_like(const ModelParams& p) { return make_zero_params(p.hyper); }

namespace detail {

// fan-in per tensor name; biases use their layer's input width
inline size_t tensor_fan_in(const ModelHyper& hyper, std::string_view name) {
  const auto F = static_cast<size_t>(hyper.num_kernels);
  const auto d = static_cast<size_t>(hyper.lstm_units);
  const auto h = static_cast<size_t>(hyper.hidden_units);
  const auto feat = static_cast<size_t>(hyper.feature_dim());
  if (name.starts_with("conv")) return 4 * static_cast<size_t>(hyper.kernel_size);
  if (name.starts_with("lstm")) {
    if (name.find("_w_") != std::string_view::npos) return F;
    return d;
  }
  if (name.starts_with("attn")) return feat;
  if (name.starts_with("fc1")) return feat;
  return h;  // fc2
}

}  // namespace detail

// Seeded uniform init in +-1/sqrt(fan_in) per tensor.
inline ModelParams init_params(const ModelHyper& hyper, uint64_t seed) {
  ModelParams p = make_zero_params(hyper);
  Rng rng(splitmix64(seed));
  for_each_tensor(p, [&](std::string_view name, Tensor& t) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(detail::tensor_fan_in(hyper, name)));
    for (auto& v : t.data) v = uniform_symmetric(rng, bound);
  });
  return p;
}

inline size_t param_count(const ModelHyper& hyper) {
  ModelParams p = make_zero_params(hyper);
  size_t n = 0;
  for_each_tensor(p, [&](std::string_view, Tensor& t) { n += t.numel(); });
  return n;
}

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Per-direction state history; rows are in iteration order (the reverse
// direction stores step s for sequence position n-1-s).
struct LstmTrace {
  std::array<Tensor, 4> gates;  // n x d each, post-nonlinearity
  Tensor cell;                  // n x d
  Tensor hidden;                // n x d
};

// Everything the backward pass needs from one forward evaluation.
struct ForwardTrace {
  OneHotMatrix input;
  Tensor conv_pre;   // n x F
  Tensor conv_act;   // n x F
  LstmTrace fwd;
  LstmTrace bwd;
  Tensor states;     // H: n x feature_dim (attention variants)
  std::vector<size_t> pool_argmax;   // Cnn variant
  std::vector<double> attn_scores;   // alpha
  std::vector<double> attn_weights;  // alpha'
  Tensor fused;      // X: feature_dim
  Tensor fc1_pre;    // h
  Tensor fc1_act;    // h
  double fc2_pre = 0.0;
  double output = 0.0;  // Y
};

namespace detail {

inline void conv_forward_impl(const OneHotMatrix& S, const ModelParams& p, Tensor& pre,
                              Tensor& act) {
  const int n = static_cast<int>(S.length);
  const int K = p.hyper.kernel_size;
  const int F = p.hyper.num_kernels;
  if (n < K)
    throw DataError("conv1d_forward: input length " + std::to_string(n) +
                    " shorter than kernel size " + std::to_string(K));
  const int pad = (K - 1) / 2;
  pre = Tensor({static_cast<size_t>(n), static_cast<size_t>(F)});
  act = Tensor({static_cast<size_t>(n), static_cast<size_t>(F)});
  for (int t = 0; t < n; ++t) {
    double* out = &pre.at(static_cast<size_t>(t), 0);
    for (int f = 0; f < F; ++f) out[f] = p.conv_b.at(static_cast<size_t>(f));
    for (int k = 0; k < K; ++k) {
      const int row = t + k - pad;
      if (row < 0 || row >= n) continue;  // zero padding
      for (int c = 0; c < 4; ++c) {
        const double s = S.at(static_cast<size_t>(row), static_cast<size_t>(c));
        if (s == 0.0) continue;
        const double* w = &p.conv_w.at(static_cast<size_t>(k), static_cast<size_t>(c), 0);
        for (int f = 0; f < F; ++f) out[f] += s * w[f];
      }
    }
    for (int f = 0; f < F; ++f)
      act.at(static_cast<size_t>(t), static_cast<size_t>(f)) = out[f] > 0.0 ? out[f] : 0.0;
  }
}

inline LstmTrace lstm_run(const Tensor& x, const LstmWeights& lw, int d, bool reverse) {
  const int n = static_cast<int>(x.shape[0]);
  const int F = static_cast<int>(x.shape[1]);
  LstmTrace tr;
  for (auto& g : tr.gates) g = Tensor({static_cast<size_t>(n), static_cast<size_t>(d)});
  tr.cell = Tensor({static_cast<size_t>(n), static_cast<size_t>(d)});
  tr.hidden = Tensor({static_cast<size_t>(n), static_cast<size_t>(d)});

  std::vector<double> z(static_cast<size_t>(4 * d));
  std::vector<double> h_prev(static_cast<size_t>(d), 0.0);
  std::vector<double> c_prev(static_cast<size_t>(d), 0.0);

  for (int step = 0; step < n; ++step) {
    const int t = reverse ? n - 1 - step : step;
    for (int g = 0; g < 4; ++g)
      for (int j = 0; j < d; ++j)
        z[static_cast<size_t>(g * d + j)] = lw.b[g].at(static_cast<size_t>(j));
    const double* xt = &x.at(static_cast<size_t>(t), 0);
    for (int m = 0; m < F; ++m) {
      const double xv = xt[m];
      if (xv == 0.0) continue;
      for (int g = 0; g < 4; ++g) {
        const double* wrow = &lw.w[g].at(static_cast<size_t>(m), 0);
        double* zg = &z[static_cast<size_t>(g * d)];
        for (int j = 0; j < d; ++j) zg[j] += xv * wrow[j];
      }
    }
    for (int m = 0; m < d; ++m) {
      const double hv = h_prev[static_cast<size_t>(m)];
      if (hv == 0.0) continue;
      for (int g = 0; g < 4; ++g) {
        const double* urow = &lw.u[g].at(static_cast<size_t>(m), 0);
        double* zg = &z[static_cast<size_t>(g * d)];
        for (int j = 0; j < d; ++j) zg[j] += hv * urow[j];
      }
    }
    for (int j = 0; j < d; ++j) {
      const double gi = logistic(z[static_cast<size_t>(kGateI * d + j)]);
      const double gf = logistic(z[static_cast<size_t>(kGateF * d + j)]);
      const double go = logistic(z[static_cast<size_t>(kGateO * d + j)]);
      const double gg = std::tanh(z[static_cast<size_t>(kGateG * d + j)]);
      const double c = gf * c_prev[static_cast<size_t>(j)] + gi * gg;
      const double h = go * std::tanh(c);
      tr.gates[kGateI].at(static_cast<size_t>(step), static_cast<size_t>(j)) = gi;
      tr.gates[kGateF].at(static_cast<size_t>(step), static_cast<size_t>(j)) = gf;
      tr.gates[kGateO].at(static_cast<size_t>(step), static_cast<size_t>(j)) = go;
      tr.gates[kGateG].at(static_cast<size_t>(step), static_cast<size_t>(j)) = gg;
      tr.cell.at(static_cast<size_t>(step), static_cast<size_t>(j)) = c;
      tr.hidden.at(static_cast<size_t>(step), static_cast<size_t>(j)) = h;
      c_prev[static_cast<size_t>(j)] = c;
      h_prev[static_cast<size_t>(j)] = h;
    }
  }
  return tr;
}

// BPTT for one direction. dH is indexed by step (iteration order), dx is
// accumulated at true sequence positions.
inline void lstm_backward(const Tensor& x, const LstmWeights& lw, const LstmTrace& tr,
                          const Tensor& dH, bool reverse, LstmWeights& grad, Tensor& dx) {
  const int n = static_cast<int>(x.shape[0]);
  const int F = static_cast<int>(x.shape[1]);
  const int d = static_cast<int>(tr.hidden.shape[1]);

  std::vector<double> dh_carry(static_cast<size_t>(d), 0.0);
  std::vector<double> dc_carry(static_cast<size_t>(d), 0.0);
  std::vector<double> dz(static_cast<size_t>(4 * d));

  for (int step = n - 1; step >= 0; --step) {
    const int t = reverse ? n - 1 - step : step;
    for (int j = 0; j < d; ++j) {
      const double dh = dH.at(static_cast<size_t>(step), static_cast<size_t>(j)) +
                        dh_carry[static_cast<size_t>(j)];
      const double gi = tr.gates[kGateI].at(static_cast<size_t>(step), static_cast<size_t>(j));
      const double gf = tr.gates[kGateF].at(static_cast<size_t>(step), static_cast<size_t>(j));
      const double go = tr.gates[kGateO].at(static_cast<size_t>(step), static_cast<size_t>(j));
      const double gg = tr.gates[kGateG].at(static_cast<size_t>(step), static_cast<size_t>(j));
      const double c = tr.cell.at(static_cast<size_t>(step), static_cast<size_t>(j));
      const double c_prev =
          step > 0 ? tr.cell.at(static_cast<size_t>(step - 1), static_cast<size_t>(j)) : 0.0;
      const double tc = std::tanh(c);
      const double d_o = dh * tc;
      const double dc = dc_carry[static_cast<size_t>(j)] + dh * go * (1.0 - tc * tc);
      const double d_i = dc * gg;
      const double d_g = dc * gi;
      const double d_f = dc * c_prev;
      dc_carry[static_cast<size_t>(j)] = dc * gf;
      dz[static_cast<size_t>(kGateI * d + j)] = d_i * gi * (1.0 - gi);
      dz[static_cast<size_t>(kGateF * d + j)] = d_f * gf * (1.0 - gf);
      dz[static_cast<size_t>(kGateO * d + j)] = d_o * go * (1.0 - go);
      dz[static_cast<size_t>(kGateG * d + j)] = d_g * (1.0 - gg * gg);
    }

    for (int g = 0; g < 4; ++g) {
      const double* dzg = &dz[static_cast<size_t>(g * d)];
      for (int j = 0; j < d; ++j) grad.b[g].at(static_cast<size_t>(j)) += dzg[j];
    }
    const double* xt = &x.at(static_cast<size_t>(t), 0);
    for (int m = 0; m < F; ++m) {
      const double xv = xt[m];
      if (xv != 0.0) {
        for (int g = 0; g < 4; ++g) {
          double* grow = &grad.w[g].at(static_cast<size_t>(m), 0);
          const double* dzg = &dz[static_cast<size_t>(g * d)];
          for (int j = 0; j < d; ++j) grow[j] += xv * dzg[j];
        }
      }
      double acc = 0.0;
      for (int g = 0; g < 4; ++g) {
        const double* wrow = &lw.w[g].at(static_cast<size_t>(m), 0);
        const double* dzg = &dz[static_cast<size_t>(g * d)];
        for (int j = 0; j < d; ++j) acc += wrow[j] * dzg[j];
      }
      dx.at(static_cast<size_t>(t), static_cast<size_t>(m)) += acc;
    }
    if (step > 0) {
      for (int m = 0; m < d; ++m) {
        const double hv = tr.hidden.at(static_cast<size_t>(step - 1), static_cast<size_t>(m));
        if (hv != 0.0) {
          for (int g = 0; g < 4; ++g) {
            double* grow = &grad.u[g].at(static_cast<size_t>(m), 0);
            const double* dzg = &dz[static_cast<size_t>(g * d)];
            for (int j = 0; j < d; ++j) grow[j] += hv * dzg[j];
          }
        }
        double acc = 0.0;
        for (int g = 0; g < 4; ++g) {
          const double* urow = &lw.u[g].at(static_cast<size_t>(m), 0);
          const double* dzg = &dz[static_cast<size_t>(g * d)];
          for (int j = 0; j < d; ++j) acc += urow[j] * dzg[j];
        }
        dh_carry[static_cast<size_t>(m)] = acc;
      }
    }
  }
}

}  // namespace detail

// Same-length Conv1D (zero padding, cross-correlation) followed by ReLU.
inline Tensor conv1d_forward(const OneHotMatrix& S, const ModelParams& p) {
  Tensor pre, act;
  detail::conv_forward_impl(S, p, pre, act);
  return act;
}

// Bidirectional recurrence from zero initial states; row t of the result is
// the forward state at t concatenated with the backward state at t.
inline Tensor bilstm_forward(const Tensor& x, const ModelParams& p) {
  const int n = static_cast<int>(x.shape[0]);
  const int d = p.hyper.lstm_units;
  const auto fwd = detail::lstm_run(x, p.lstm_fwd, d, false);
  const auto bwd = detail::lstm_run(x, p.lstm_bwd, d, true);
  Tensor H({static_cast<size_t>(n), static_cast<size_t>(2 * d)});
  for (int t = 0; t < n; ++t)
    for (int j = 0; j < d; ++j) {
      H.at(static_cast<size_t>(t), static_cast<size_t>(j)) =
          fwd.hidden.at(static_cast<size_t>(t), static_cast<size_t>(j));
      H.at(static_cast<size_t>(t), static_cast<size_t>(d + j)) =
          bwd.hidden.at(static_cast<size_t>(n - 1 - t), static_cast<size_t>(j));
    }
  return H;
}

// Per-position importance scores, linear in the states.
inline std::vector<double> attention_scores(const Tensor& H, const ModelParams& p) {
  const size_t n = H.shape[0];
  const size_t feat = H.shape[1];
  if (feat != p.attn_w.numel())
    throw DataError("attention_scores: state width " + std::to_string(feat) +
                    " does not match attention weight size " + std::to_string(p.attn_w.numel()));
  std::vector<double> alpha(n, 0.0);
  for (size_t t = 0; t < n; ++t) {
    double a = p.attn_b.at(0);
    const double* row = &H.at(t, 0);
    for (size_t j = 0; j < feat; ++j) a += row[j] * p.attn_w.at(j);
    alpha[t] = a;
  }
  return alpha;
}

// Max-shifted softmax.
inline std::vector<double> attention_normalize(const std::vector<double>& alpha) {
  std::vector<double> out(alpha.size(), 0.0);
  if (alpha.empty()) return out;
  const double m = *std::max_element(alpha.begin(), alpha.end());
  double total = 0.0;
  for (size_t t = 0; t < alpha.size(); ++t) {
    out[t] = std::exp(alpha[t] - m);
    total += out[t];
  }
  for (auto& v : out) v /= total;
  return out;
}

// Attention-weighted sum of state rows.
inline Tensor fuse(const std::vector<double>& weights, const Tensor& H) {
  if (weights.size() != H.shape[0])
    throw DataError("fuse: weight count does not match state rows");
  double total = 0.0;
  for (const double w : weights) total += w;
  if (std::abs(total - 1.0) > 1e-9)
    throw ContractError("fuse: attention weights must sum to 1");
  const size_t feat = H.shape[1];
  Tensor X({feat});
  for (size_t t = 0; t < weights.size(); ++t) {
    const double w = weights[t];
    const double* row = &H.at(t, 0);
    for (size_t j = 0; j < feat; ++j) X.at(j) += w * row[j];
  }
  return X;
}

// ReLU hidden layer then a logistic output unit.
inline double predict_head(const Tensor& X, const ModelParams& p) {
  const size_t feat = X.numel();
  const size_t h = p.fc1_b.numel();
  if (p.fc1_w.shape[0] != feat)
    throw DataError("predict_head: feature width " + std::to_string(feat) +
                    " does not match fc1 input " + std::to_string(p.fc1_w.shape[0]));
  std::vector<double> z1(h);
  for (size_t j = 0; j < h; ++j) z1[j] = p.fc1_b.at(j);
  for (size_t m = 0; m < feat; ++m) {
    const double xv = X.at(m);
    if (xv == 0.0) continue;
    const double* row = &p.fc1_w.at(m, 0);
    for (size_t j = 0; j < h; ++j) z1[j] += xv * row[j];
  }
  double z2 = p.fc2_b.at(0);
  for (size_t j = 0; j < h; ++j) z2 += (z1[j] > 0.0 ? z1[j] : 0.0) * p.fc2_w.at(j);
  return logistic(z2);
}

// Full forward pass; the trace carries every intermediate the backward pass
// consumes.
inline double forward(const OneHotMatrix& S, const ModelParams& p, ForwardTrace& trace) {
  const ModelHyper& hy = p.hyper;
  const int n = static_cast<int>(S.length);
  const int d = hy.lstm_units;
  const size_t feat = static_cast<size_t>(hy.feature_dim());

  trace = ForwardTrace{};
  trace.input = S;
  detail::conv_forward_impl(S, p, trace.conv_pre, trace.conv_act);

  switch (hy.variant) {
    case Variant::Cnn: {
      // global max pool over positions, one value per kernel
      const int F = hy.num_kernels;
      trace.fused = Tensor({static_cast<size_t>(F)});
      trace.pool_argmax.assign(static_cast<size_t>(F), 0);
      for (int f = 0; f < F; ++f) {
        double best = trace.conv_act.at(0, static_cast<size_t>(f));
        size_t arg = 0;
        for (int t = 1; t < n; ++t) {
          const double v = trace.conv_act.at(static_cast<size_t>(t), static_cast<size_t>(f));
          if (v > best) {
            best = v;
            arg = static_cast<size_t>(t);
          }
        }
        trace.fused.at(static_cast<size_t>(f)) = best;
        trace.pool_argmax[static_cast<size_t>(f)] = arg;
      }
      break;
    }
    case Variant::CnnLstm: {
      trace.fwd = detail::lstm_run(trace.conv_act, p.lstm_fwd, d, false);
      trace.fused = Tensor({static_cast<size_t>(d)});
      for (int j = 0; j < d; ++j)
        trace.fused.at(static_cast<size_t>(j)) =
            trace.fwd.hidden.at(static_cast<size_t>(n - 1), static_cast<size_t>(j));
      break;
    }
    case Variant::CnnLstmAttn: {
      trace.fwd = detail::lstm_run(trace.conv_act, p.lstm_fwd, d, false);
      trace.states = trace.fwd.hidden;
      trace.attn_scores = attention_scores(trace.states, p);
      trace.attn_weights = attention_normalize(trace.attn_scores);
      trace.fused = fuse(trace.attn_weights, trace.states);
      break;
    }
    case Variant::Full: {
      trace.fwd = detail::lstm_run(trace.conv_act, p.lstm_fwd, d, false);
      trace.bwd = detail::lstm_run(trace.conv_act, p.lstm_bwd, d, true);
      trace.states = Tensor({static_cast<size_t>(n), feat});
      for (int t = 0; t < n; ++t)
        for (int j = 0; j < d; ++j) {
          trace.states.at(static_cast<size_t>(t), static_cast<size_t>(j)) =
              trace.fwd.hidden.at(static_cast<size_t>(t), static_cast<size_t>(j));
          trace.states.at(static_cast<size_t>(t), static_cast<size_t>(d + j)) =
              trace.bwd.hidden.at(static_cast<size_t>(n - 1 - t), static_cast<size_t>(j));
        }
      trace.attn_scores = attention_scores(trace.states, p);
      trace.attn_weights = attention_normalize(trace.attn_scores);
      trace.fused = fuse(trace.attn_weights, trace.states);
      break;
    }
  }

  // prediction head, with intermediates kept
  const size_t hdim = p.fc1_b.numel();
  if (p.fc1_w.shape[0] != trace.fused.numel())
    throw DataError("forward: head input width mismatch at fc1");
  trace.fc1_pre = Tensor({hdim});
  trace.fc1_act = Tensor({hdim});
  for (size_t j = 0; j < hdim; ++j) trace.fc1_pre.at(j) = p.fc1_b.at(j);
  for (size_t m = 0; m < trace.fused.numel(); ++m) {
    const double xv = trace.fused.at(m);
    if (xv == 0.0) continue;
    const double* row = &p.fc1_w.at(m, 0);
    for (size_t j = 0; j < hdim; ++j) trace.fc1_pre.at(j) += xv * row[j];
  }
  double z2 = p.fc2_b.at(0);
  for (size_t j = 0; j < hdim; ++j) {
    const double a = trace.fc1_pre.at(j) > 0.0 ? trace.fc1_pre.at(j) : 0.0;
    trace.fc1_act.at(j) = a;
    z2 += a * p.fc2_w.at(j);
  }
  trace.fc2_pre = z2;
  trace.output = logistic(z2);
  return trace.output;
}

inline double forward(const OneHotMatrix& S, const ModelParams& p) {
  ForwardTrace trace;
  return forward(S, p, trace);
}

// Exact reverse-mode gradients for every parameter, given dL/dY. Gradients
// are accumulated into `grads` so batch sums stay in caller-chosen order.
inline void backward_accumulate(const ForwardTrace& trace, double upstream,
                                const ModelParams& p, ModelParams& grads) {
  const ModelHyper& hy = p.hyper;
  const int n = static_cast<int>(trace.input.length);
  const int d = hy.lstm_units;
  const size_t hdim = p.fc1_b.numel();
  const size_t feat = trace.fused.numel();

  // head
  const double y = trace.output;
  const double dz2 = upstream * y * (1.0 - y);
  grads.fc2_b.at(0) += dz2;
  std::vector<double> dz1(hdim);
  for (size_t j = 0; j < hdim; ++j) {
    grads.fc2_w.at(j) += dz2 * trace.fc1_act.at(j);
    const double da1 = dz2 * p.fc2_w.at(j);
    dz1[j] = trace.fc1_pre.at(j) > 0.0 ? da1 : 0.0;
    grads.fc1_b.at(j) += dz1[j];
  }
  std::vector<double> dX(feat, 0.0);
  for (size_t m = 0; m < feat; ++m) {
    const double xv = trace.fused.at(m);
    double* grow = &grads.fc1_w.at(m, 0);
    const double* wrow = &p.fc1_w.at(m, 0);
    double acc = 0.0;
    for (size_t j = 0; j < hdim; ++j) {
      grow[j] += xv * dz1[j];
      acc += wrow[j] * dz1[j];
    }
    dX[m] = acc;
  }

  Tensor d_act({static_cast<size_t>(n), static_cast<size_t>(hy.num_kernels)});

  switch (hy.variant) {
    case Variant::Cnn: {
      for (size_t f = 0; f < feat; ++f)
        d_act.at(trace.pool_argmax[f], f) += dX[f];
      break;
    }
    case Variant::CnnLstm: {
      Tensor dH({static_cast<size_t>(n), static_cast<size_t>(d)});
      for (int j = 0; j < d; ++j)
        dH.at(static_cast<size_t>(n - 1), static_cast<size_t>(j)) = dX[static_cast<size_t>(j)];
      detail::lstm_backward(trace.conv_act, p.lstm_fwd, trace.fwd, dH, false, grads.lstm_fwd,
                            d_act);
      break;
    }
    case Variant::CnnLstmAttn:
    case Variant::Full: {
      const Tensor& H = trace.states;
      const auto& aw = trace.attn_weights;
      // fusion: X = sum_t a'_t H_t
      std::vector<double> d_aw(aw.size(), 0.0);
      Tensor dH({H.shape[0], H.shape[1]});
      for (size_t t = 0; t < aw.size(); ++t) {
        const double* row = &H.at(t, 0);
        double* drow = &dH.at(t, 0);
        double acc = 0.0;
        for (size_t j = 0; j < feat; ++j) {
          acc += dX[j] * row[j];
          drow[j] += aw[t] * dX[j];
        }
        d_aw[t] = acc;
      }
      // softmax
      double dot = 0.0;
      for (size_t t = 0; t < aw.size(); ++t) dot += aw[t] * d_aw[t];
      std::vector<double> d_alpha(aw.size());
      for (size_t t = 0; t < aw.size(); ++t) d_alpha[t] = aw[t] * (d_aw[t] - dot);
      // linear scores: alpha_t = H_t . w + b
      for (size_t t = 0; t < aw.size(); ++t) {
        grads.attn_b.at(0) += d_alpha[t];
        const double* row = &H.at(t, 0);
        double* drow = &dH.at(t, 0);
        for (size_t j = 0; j < feat; ++j) {
          grads.attn_w.at(j) += d_alpha[t] * row[j];
          drow[j] += d_alpha[t] * p.attn_w.at(j);
        }
      }
      if (hy.variant == Variant::CnnLstmAttn) {
        detail::lstm_backward(trace.conv_act, p.lstm_fwd, trace.fwd, dH, false, grads.lstm_fwd,
                              d_act);
      } else {
        Tensor dH_fwd({static_cast<size_t>(n), static_cast<size_t>(d)});
        Tensor dH_bwd({static_cast<size_t>(n), static_cast<size_t>(d)});
        for (int t = 0; t < n; ++t)
          for (int j = 0; j < d; ++j) {
            dH_fwd.at(static_cast<size_t>(t), static_cast<size_t>(j)) =
                dH.at(static_cast<size_t>(t), static_cast<size_t>(j));
            dH_bwd.at(static_cast<size_t>(n - 1 - t), static_cast<size_t>(j)) =
                dH.at(static_cast<size_t>(t), static_cast<size_t>(d + j));
          }
        detail::lstm_backward(trace.conv_act, p.lstm_fwd, trace.fwd, dH_fwd, false,
                              grads.lstm_fwd, d_act);
        detail::lstm_backward(trace.conv_act, p.lstm_bwd, trace.bwd, dH_bwd, true,
                              grads.lstm_bwd, d_act);
      }
      break;
    }
  }

  // conv
  const int K = hy.kernel_size;
  const int F = hy.num_kernels;
  const int pad = (K - 1) / 2;
  for (int t = 0; t < n; ++t) {
    const double* pre_row = &trace.conv_pre.at(static_cast<size_t>(t), 0);
    double* dact_row = &d_act.at(static_cast<size_t>(t), 0);
    for (int f = 0; f < F; ++f)
      if (pre_row[f] <= 0.0) dact_row[f] = 0.0;  // ReLU gate (now holds d_pre)
    for (int f = 0; f < F; ++f) grads.conv_b.at(static_cast<size_t>(f)) += dact_row[f];
    for (int k = 0; k < K; ++k) {
      const int row = t + k - pad;
      if (row < 0 || row >= n) continue;
      for (int c = 0; c < 4; ++c) {
        const double s = trace.input.at(static_cast<size_t>(row), static_cast<size_t>(c));
        if (s == 0.0) continue;
        double* gw = &grads.conv_w.at(static_cast<size_t>(k), static_cast<size_t>(c), 0);
        for (int f = 0; f < F; ++f) gw[f] += s * dact_row[f];
      }
    }
  }
}

inline ModelParams backward(const ForwardTrace& trace, double upstream, const ModelParams& p) {
  ModelParams grads = zeros_like(p);
  backward_accumulate(trace, upstream, p, grads);
  return grads;
}

struct GradientCheckEntry {
  std::string tensor;
  double max_rel_error;
};

struct GradientCheckReport {
  std::vector<GradientCheckEntry> entries;
  double tolerance = 1e-4;
  bool passed = true;
};

namespace detail {

// Loss used for gradient verification: negative log-likelihood of the
// positive class, L = -log(Y).
inline double nll_positive(double y) {
  const double clamped = std::min(std::max(y, 1e-12), 1.0 - 1e-12);
  return -std::log(clamped);
}

}  // namespace detail

// Central finite differences against the analytic gradients, per tensor.
// Errors are relative to the larger gradient magnitude, floored at 1 so
// near-zero gradients are compared on an absolute scale.
inline GradientCheckReport gradient_check(ModelParams params, const OneHotMatrix& input,
                                          double tolerance = 1e-4, double epsilon = 1e-5) {
  GradientCheckReport report;
  report.tolerance = tolerance;

  ForwardTrace trace;
  const double y = forward(input, params, trace);
  const double upstream = -1.0 / std::min(std::max(y, 1e-12), 1.0 - 1e-12);
  ModelParams analytic = backward(trace, upstream, params);

  std::vector<std::pair<std::string, Tensor*>> slots;
  for_each_tensor(params, [&](std::string_view name, Tensor& t) {
    slots.emplace_back(std::string(name), &t);
  });
  std::vector<const Tensor*> analytic_slots;
  for_each_tensor(analytic, [&](std::string_view, Tensor& t) { analytic_slots.push_back(&t); });

  for (size_t s = 0; s < slots.size(); ++s) {
    Tensor& t = *slots[s].second;
    const Tensor& g = *analytic_slots[s];
    double worst = 0.0;
    for (size_t i = 0; i < t.numel(); ++i) {
      const double saved = t.at(i);
      t.at(i) = saved + epsilon;
      const double lp = detail::nll_positive(forward(input, params));
      t.at(i) = saved - epsilon;
      const double lm = detail::nll_positive(forward(input, params));
      t.at(i) = saved;
      const double numeric = (lp - lm) / (2.0 * epsilon);
      const double denom = std::max({1.0, std::abs(numeric), std::abs(g.at(i))});
      worst = std::max(worst, std::abs(numeric - g.at(i)) / denom);
    }
    report.entries.push_back({slots[s].first, worst});
    if (worst > tolerance) report.passed = false;
  }
  return report;
}

}  // namespace g4attn

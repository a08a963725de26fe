// The learners: a small CNN backbone, the CNN+LSTM sequence classifier that
// averages per-frame softmax outputs over time, and the per-frame
// success/failure classifier with majority voting.
#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "image.hpp"
#include "labels.hpp"
#include "nn.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace ongcmp::models {

template <typename T>
struct NamedParam {
  std::string name;
  Tensor<T>* tensor;
};

struct BackboneConfig {
  int input_size = 32;  // square input side, divisible by 8
  int in_channels = 3;
  std::array<int, 3> widths{8, 16, 16};
  int feature_dim = 128;

  void validate() const {
    require(input_size >= 8 && input_size % 8 == 0, "backbone input size must be a positive multiple of 8");
    require(in_channels > 0 && feature_dim > 0, "backbone dimensions must be positive");
    for (int w : widths) require(w > 0, "backbone widths must be positive");
  }
  std::size_t flat_dim() const {
    const std::size_t s = static_cast<std::size_t>(input_size / 8);
    return static_cast<std::size_t>(widths[2]) * s * s;
  }
  friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

// Three conv(3x3, pad 1) -> ReLU -> 2x2 max-pool blocks, then a fully
// connected layer with ReLU to feature_dim.
template <typename T>
class CnnBackbone {
 public:
  struct Cache {
    std::array<Tensor<T>, 3> block_in;
    std::array<Tensor<T>, 3> act;
    std::array<nn::PoolResult<T>, 3> pool;
    Tensor<T> flat;
    Tensor<T> feature;
  };

  CnnBackbone() = default;
  explicit CnnBackbone(BackboneConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    std::size_t cin = static_cast<std::size_t>(cfg_.in_channels);
    for (std::size_t b = 0; b < 3; ++b) {
      const std::size_t cout = static_cast<std::size_t>(cfg_.widths[b]);
      kernels_[b] = Tensor<T>({cout, cin, 3, 3});
      biases_[b] = Tensor<T>({cout});
      cin = cout;
    }
    fc_w_ = Tensor<T>({cfg_.flat_dim(), static_cast<std::size_t>(cfg_.feature_dim)});
    fc_b_ = Tensor<T>({static_cast<std::size_t>(cfg_.feature_dim)});
  }

  const BackboneConfig& config() const { return cfg_; }
  std::size_t feature_dim() const { return static_cast<std::size_t>(cfg_.feature_dim); }

  // Weights feeding a ReLU use the wider bound sqrt(6/fan_in) so activations
  // keep their scale through the stack; biases use 1/sqrt(fan_in).
  void init(Rng& rng) {
    const double relu_gain = std::sqrt(6.0);
    for (std::size_t b = 0; b < 3; ++b) {
      const std::size_t fan_in = kernels_[b].dim(1) * 9;
      uniform_init(kernels_[b], fan_in, rng, relu_gain);
      uniform_init(biases_[b], fan_in, rng);
    }
    uniform_init(fc_w_, fc_w_.dim(0), rng, relu_gain);
    uniform_init(fc_b_, fc_w_.dim(0), rng);
  }

  Tensor<T> forward(const Tensor<T>& x, Cache* cache = nullptr) const {
    const std::size_t s = static_cast<std::size_t>(cfg_.input_size);
    if (x.shape() != Shape{static_cast<std::size_t>(cfg_.in_channels), s, s})
      throw ValidationError("backbone expects input " + std::to_string(cfg_.in_channels) + "x" +
                            std::to_string(s) + "x" + std::to_string(s) + ", got " + shape_str(x.shape()));
    Tensor<T> cur = x;
    for (std::size_t b = 0; b < 3; ++b) {
      Tensor<T> z = nn::conv2d(cur, kernels_[b], 1, 1);
      nn::add_channel_bias(z, biases_[b]);
      Tensor<T> a = nn::relu(std::move(z));
      auto pooled = nn::maxpool2(a);
      Tensor<T> next = pooled.out;
      if (cache) {
        cache->block_in[b] = std::move(cur);
        cache->act[b] = std::move(a);
        cache->pool[b] = std::move(pooled);
      }
      cur = std::move(next);
    }
    Tensor<T> flat({cur.size()}, std::vector<T>(cur.values().begin(), cur.values().end()));
    Tensor<T> feat = nn::relu(nn::linear(flat, fc_w_, fc_b_));
    if (cache) {
      cache->flat = std::move(flat);
      cache->feature = feat;
    }
    return feat;
  }

  // Accumulates parameter gradients for dL/dfeature.
  void backward(const Cache& cache, const Tensor<T>& dfeat) {
    Tensor<T> dz = nn::relu_backward(cache.feature, dfeat);
    Tensor<T> dflat = nn::linear_backward(cache.flat, fc_w_, fc_b_, dz);
    Tensor<T> dcur(cache.pool[2].out.shape(), std::vector<T>(dflat.values().begin(), dflat.values().end()));
    for (std::size_t bb = 3; bb-- > 0;) {
      Tensor<T> da = nn::maxpool2_backward(cache.pool[bb], cache.act[bb].shape(), dcur);
      Tensor<T> dzb = nn::relu_backward(cache.act[bb], std::move(da));
      if (biases_[bb].has_grad()) {
        const auto db = nn::channel_bias_backward(dzb);
        auto g = biases_[bb].grad();
        for (std::size_t i = 0; i < db.size(); ++i) g[i] += db[i];
      }
      auto cg = nn::conv2d_backward(cache.block_in[bb], kernels_[bb], 1, 1, dzb, bb > 0);
      if (kernels_[bb].has_grad()) {
        auto g = kernels_[bb].grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += cg.dkernels[i];
      }
      if (bb > 0) dcur = std::move(cg.dinput);
    }
  }

  std::vector<NamedParam<T>> params(const std::string& prefix) {
    std::vector<NamedParam<T>> out;
    for (std::size_t b = 0; b < 3; ++b) {
      out.push_back({prefix + "conv" + std::to_string(b + 1) + ".weight", &kernels_[b]});
      out.push_back({prefix + "conv" + std::to_string(b + 1) + ".bias", &biases_[b]});
    }
    out.push_back({prefix + "fc.weight", &fc_w_});
    out.push_back({prefix + "fc.bias", &fc_b_});
    return out;
  }

 private:
  BackboneConfig cfg_;
  std::array<Tensor<T>, 3> kernels_, biases_;
  Tensor<T> fc_w_, fc_b_;
};

// What a model looks at: colourised flow images or raw frames.
enum class InputKind { Gcmp, Rgb };

inline std::string_view input_kind_name(InputKind k) { return k == InputKind::Gcmp ? "gcmp" : "rgb"; }
inline InputKind parse_input_kind(std::string_view s) {
  if (s == "gcmp") return InputKind::Gcmp;
  if (s == "rgb") return InputKind::Rgb;
  throw ValidationError("unknown input kind: " + std::string(s));
}

struct ModelConfig {
  BackboneConfig backbone;
  int hidden_dim = 256;
  int classes = 5;
  InputKind input = InputKind::Gcmp;

  static ModelConfig from(const Config& c, int classes, InputKind input) {
    ModelConfig m;
    m.backbone.input_size = c.get("backbone.input_size", m.backbone.input_size);
    const auto w = c.get_list("backbone.widths", {m.backbone.widths[0], m.backbone.widths[1], m.backbone.widths[2]});
    require(w.size() == 3, "backbone.widths needs three values");
    m.backbone.widths = {w[0], w[1], w[2]};
    m.backbone.feature_dim = c.get("backbone.feature_dim", m.backbone.feature_dim);
    m.hidden_dim = c.get("lstm.hidden_dim", m.hidden_dim);
    m.classes = classes;
    m.input = input;
    m.backbone.validate();
    require(m.hidden_dim > 0, "lstm.hidden_dim must be positive");
    return m;
  }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Per-frame probabilities p_t (T x N) and their temporal mean G.
struct SequencePrediction {
  std::vector<std::vector<double>> per_frame;
  std::vector<double> mean;

  std::size_t argmax() const { return nn::argmax(mean); }
};

// Arithmetic mean over t, accumulated in order.
inline std::vector<double> temporal_mean(const std::vector<std::vector<double>>& p) {
  require(!p.empty(), "temporal_mean: empty sequence");
  std::vector<double> g(p.front().size(), 0.0);
  for (const auto& row : p)
    for (std::size_t n = 0; n < g.size(); ++n) g[n] += row[n];
  for (auto& v : g) v /= static_cast<double>(p.size());
  return g;
}

// Resizes an image to the backbone input and scales it to [-1, 1].
template <typename T>
Tensor<T> prepare_image(const RgbImage& img, const BackboneConfig& cfg) {
  return to_tensor<T>(resize_bilinear(img, cfg.input_size, cfg.input_size));
}

template <typename T>
std::vector<Tensor<T>> prepare_images(const std::vector<RgbImage>& imgs, const BackboneConfig& cfg) {
  std::vector<Tensor<T>> out;
  out.reserve(imgs.size());
  for (const auto& im : imgs) out.push_back(prepare_image<T>(im, cfg));
  return out;
}

// CNN features per frame -> single-layer LSTM from a zero state -> linear
// scores -> softmax per frame.
template <typename T>
class SequenceClassifier {
 public:
  struct StepCache {
    typename CnnBackbone<T>::Cache backbone;
    nn::LstmCache<T> lstm;
    Tensor<T> h;
    Tensor<T> p;
  };

  SequenceClassifier() = default;
  explicit SequenceClassifier(const ModelConfig& cfg)
      : cfg_(cfg),
        backbone_(cfg.backbone),
        lstm_(static_cast<std::size_t>(cfg.backbone.feature_dim), static_cast<std::size_t>(cfg.hidden_dim)),
        head_(static_cast<std::size_t>(cfg.hidden_dim), static_cast<std::size_t>(cfg.classes)) {}

  const ModelConfig& config() const { return cfg_; }
  std::size_t classes() const { return head_.classes(); }
  CnnBackbone<T>& backbone() { return backbone_; }
  const CnnBackbone<T>& backbone() const { return backbone_; }
  nn::LstmParams<T>& lstm() { return lstm_; }
  nn::LinearHead<T>& head() { return head_; }

  void init(Rng& rng) {
    backbone_.init(rng);
    const std::size_t fan_in = lstm_.input_dim + lstm_.hidden_dim;
    for (std::size_t g = 0; g < 4; ++g) {
      uniform_init(lstm_.wx[g], fan_in, rng);
      uniform_init(lstm_.wh[g], fan_in, rng);
      uniform_init(lstm_.b[g], fan_in, rng);
    }
    uniform_init(head_.w, head_.input_dim(), rng);
    uniform_init(head_.b, head_.input_dim(), rng);
  }

  // Per-frame probabilities for one window, LSTM started from zero.
  std::vector<Tensor<T>> forward_window(const std::vector<Tensor<T>>& frames,
                                        std::vector<StepCache>* caches = nullptr) const {
    require(!frames.empty(), "sequence classifier: empty window");
    const std::size_t H = lstm_.hidden_dim;
    Tensor<T> h({H}), c({H});
    std::vector<Tensor<T>> probs;
    probs.reserve(frames.size());
    if (caches) caches->assign(frames.size(), StepCache{});
    for (std::size_t t = 0; t < frames.size(); ++t) {
      StepCache* sc = caches ? &(*caches)[t] : nullptr;
      const Tensor<T> x = backbone_.forward(frames[t], sc ? &sc->backbone : nullptr);
      auto s = nn::lstm_step(x, h, c, lstm_, sc ? &sc->lstm : nullptr);
      h = std::move(s.h);
      c = std::move(s.c);
      Tensor<T> p = nn::softmax(nn::classify_scores(h, head_));
      if (sc) {
        sc->h = h;
        sc->p = p;
      }
      probs.push_back(std::move(p));
    }
    return probs;
  }

  // Mean per-frame cross-entropy over the window; gradients are accumulated
  // into every parameter that has a gradient buffer.
  T loss_and_backward(const std::vector<Tensor<T>>& frames, std::size_t label) {
    require(label < classes(), "sequence classifier: label out of range");
    std::vector<StepCache> caches;
    forward_window(frames, &caches);
    const std::size_t Tn = frames.size();
    const T inv_t = T{1} / static_cast<T>(Tn);
    T loss{0};
    const std::size_t H = lstm_.hidden_dim;
    Tensor<T> dh_next({H}), dc_next({H});
    for (std::size_t t = Tn; t-- > 0;) {
      auto& sc = caches[t];
      // d(-log p_y)/ds = p - onehot(y)
      Tensor<T> ds = sc.p;
      ds[label] -= T{1};
      for (auto& v : ds.values()) v *= inv_t;
      loss -= std::log(std::max(sc.p[label], std::numeric_limits<T>::min())) * inv_t;
      Tensor<T> dh = nn::linear_backward(sc.h, head_.w, head_.b, ds);
      for (std::size_t j = 0; j < H; ++j) dh[j] += dh_next[j];
      auto g = nn::lstm_step_backward(sc.lstm, dh, dc_next, lstm_);
      backbone_.backward(sc.backbone, g.dx);
      dh_next = std::move(g.dh_prev);
      dc_next = std::move(g.dc_prev);
    }
    if (!std::isfinite(loss)) throw NumericError("non-finite sequence loss");
    return loss;
  }

  T loss(const std::vector<Tensor<T>>& frames, std::size_t label) const {
    const auto probs = forward_window(frames);
    T l{0};
    for (const auto& p : probs) l -= std::log(std::max(p[label], std::numeric_limits<T>::min()));
    return l / static_cast<T>(probs.size());
  }

  // Backbone features (x_t) for each frame.
  std::vector<Tensor<T>> features(const std::vector<Tensor<T>>& frames) const {
    std::vector<Tensor<T>> out;
    for (const auto& f : frames) out.push_back(backbone_.forward(f));
    return out;
  }

  std::vector<NamedParam<T>> params() {
    auto out = backbone_.params("backbone.");
    static constexpr const char* gate_names[4] = {"input", "forget", "output", "candidate"};
    for (std::size_t g = 0; g < 4; ++g) {
      out.push_back({std::string("lstm.") + gate_names[g] + ".wx", &lstm_.wx[g]});
      out.push_back({std::string("lstm.") + gate_names[g] + ".wh", &lstm_.wh[g]});
      out.push_back({std::string("lstm.") + gate_names[g] + ".bias", &lstm_.b[g]});
    }
    out.push_back({"head.weight", &head_.w});
    out.push_back({"head.bias", &head_.b});
    return out;
  }

 private:
  ModelConfig cfg_;
  CnnBackbone<T> backbone_;
  nn::LstmParams<T> lstm_;
  nn::LinearHead<T> head_;
};

// CNN features of a single frame -> linear head -> softmax over
// (Success, Failure).
template <typename T>
class FrameClassifier {
 public:
  FrameClassifier() = default;
  explicit FrameClassifier(const ModelConfig& cfg)
      : cfg_(cfg), backbone_(cfg.backbone), head_(static_cast<std::size_t>(cfg.backbone.feature_dim), 2) {
    require(cfg.input == InputKind::Rgb, "frame classifier consumes raw frames");
    cfg_.classes = 2;
  }

  const ModelConfig& config() const { return cfg_; }
  CnnBackbone<T>& backbone() { return backbone_; }
  const CnnBackbone<T>& backbone() const { return backbone_; }
  nn::LinearHead<T>& head() { return head_; }

  void init(Rng& rng) {
    backbone_.init(rng);
    uniform_init(head_.w, head_.input_dim(), rng);
    uniform_init(head_.b, head_.input_dim(), rng);
  }

  Tensor<T> forward(const Tensor<T>& frame) const {
    return nn::softmax(nn::classify_scores(backbone_.forward(frame), head_));
  }

  T loss_and_backward(const Tensor<T>& frame, std::size_t label) {
    typename CnnBackbone<T>::Cache cache;
    const auto feat = backbone_.forward(frame, &cache);
    const auto scores = nn::classify_scores(feat, head_);
    auto lg = nn::cross_entropy(scores, label);
    const auto dfeat = nn::linear_backward(feat, head_.w, head_.b, lg.dscores);
    backbone_.backward(cache, dfeat);
    return lg.loss;
  }

  T loss(const Tensor<T>& frame, std::size_t label) const {
    return nn::cross_entropy(nn::classify_scores(backbone_.forward(frame), head_), label).loss;
  }

  std::vector<NamedParam<T>> params() {
    auto out = backbone_.params("backbone.");
    out.push_back({"head.weight", &head_.w});
    out.push_back({"head.bias", &head_.b});
    return out;
  }

 private:
  ModelConfig cfg_;
  CnnBackbone<T> backbone_;
  nn::LinearHead<T> head_;
};

// ---------------------------------------------------------------- inference

// Splits the sequence into 16-frame windows (one window when shorter), runs
// each window from a zero LSTM state and averages every stored p_t. All
// windows have equal length, so this equals the mean of per-window means.
template <typename T>
SequencePrediction classify_prepared(const std::vector<Tensor<T>>& frames, const SequenceClassifier<T>& model,
                                     std::size_t window = 16) {
  require(!frames.empty(), "classify_sequence: empty sequence");
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  if (frames.size() < window) {
    spans.emplace_back(0, frames.size());
  } else {
    std::size_t b = 0;
    for (; b + window <= frames.size(); b += window) spans.emplace_back(b, b + window);
    if (b < frames.size()) spans.emplace_back(frames.size() - window, frames.size());
  }
  SequencePrediction pred;
  for (const auto& [b, e] : spans) {
    const std::vector<Tensor<T>> win(frames.begin() + static_cast<std::ptrdiff_t>(b),
                                     frames.begin() + static_cast<std::ptrdiff_t>(e));
    for (const auto& p : model.forward_window(win)) pred.per_frame.emplace_back(p.values().begin(), p.values().end());
  }
  pred.mean = temporal_mean(pred.per_frame);
  return pred;
}

template <typename T>
SequencePrediction classify_sequence(const std::vector<RgbImage>& images, const SequenceClassifier<T>& model) {
  require(!images.empty(), "classify_sequence: empty sequence");
  return classify_prepared(prepare_images<T>(images, model.config().backbone), model);
}

template <typename T>
std::vector<double> classify_frame_sf(const RgbImage& frame, const FrameClassifier<T>& model) {
  const auto p = model.forward(prepare_image<T>(frame, model.config().backbone));
  return {p[0], p[1]};
}

struct VoteResult {
  Outcome outcome = Outcome::Success;
  std::size_t success_votes = 0;
  std::size_t failure_votes = 0;
  double mean_success = 0.0;
};

// Majority over per-frame argmax (a 0.5/0.5 frame counts as Success). A tied
// count goes to Success when the mean success probability is >= 0.5.
inline VoteResult vote_sf(const std::vector<std::vector<double>>& per_frame) {
  require(!per_frame.empty(), "vote_sf: no frames");
  VoteResult r;
  double sum = 0.0;
  for (const auto& p : per_frame) {
    require(p.size() == 2, "vote_sf: expected two-class probabilities");
    (nn::argmax(p) == 0 ? r.success_votes : r.failure_votes) += 1;
    sum += p[0];
  }
  r.mean_success = sum / static_cast<double>(per_frame.size());
  if (r.success_votes != r.failure_votes)
    r.outcome = r.success_votes > r.failure_votes ? Outcome::Success : Outcome::Failure;
  else
    r.outcome = r.mean_success >= 0.5 ? Outcome::Success : Outcome::Failure;
  return r;
}

}  // namespace ongcmp::models

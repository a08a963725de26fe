// Training for the three pipeline stages (plus a flat six-class variant used
// by the ontology ablation). Mini-batch SGD on mean per-frame cross-entropy
// with class-balanced resampling each epoch.
#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "config.hpp"
#include "error.hpp"
#include "labels.hpp"
#include "models.hpp"
#include "nn.hpp"
#include "rng.hpp"

namespace ongcmp::train {

enum class Stage { Occ5, Pre2, PostSf, Flat6 };

inline std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Occ5: return "occ5";
    case Stage::Pre2: return "pre2";
    case Stage::PostSf: return "postsf";
    case Stage::Flat6: return "flat6";
  }
  return "?";
}

inline Stage parse_stage(std::string_view s) {
  for (Stage st : {Stage::Occ5, Stage::Pre2, Stage::PostSf, Stage::Flat6})
    if (stage_name(st) == s) return st;
  throw ValidationError("unknown stage: " + std::string(s) + " (expected occ5, pre2, postsf or flat6)");
}

inline std::vector<std::string> stage_label_names(Stage s) {
  switch (s) {
    case Stage::Occ5: return {kOccNames.begin(), kOccNames.end()};
    case Stage::Pre2: return {kPreNames.begin(), kPreNames.end()};
    case Stage::PostSf: return {kSfNames.begin(), kSfNames.end()};
    case Stage::Flat6: return {kBaseNames.begin(), kBaseNames.end()};
  }
  return {};
}

inline int stage_classes(Stage s) { return static_cast<int>(stage_label_names(s).size()); }

// Label of an event under a stage's label space, or -1 when the event does
// not take part in that stage (pre2 only sees Layup / OtherTwoPoint, postsf
// skips Steal).
inline int stage_label(Stage s, const EventLabel& l) {
  switch (s) {
    case Stage::Occ5: return static_cast<int>(l.occ_index());
    case Stage::Pre2:
      if (l.base == BaseEvent::Layup) return 0;
      if (l.base == BaseEvent::OtherTwoPoint) return 1;
      return -1;
    case Stage::PostSf:
      if (l.base == BaseEvent::Steal) return -1;
      return l.outcome == Outcome::Success ? 0 : 1;
    case Stage::Flat6: return static_cast<int>(l.base);
  }
  return -1;
}

struct Hyper {
  int epochs = 10;
  int batch = 128;
  double lr = 0.001;
  double decay_factor = 0.95;
  long long decay_every = 5000;
  double momentum = 0.0;
  double clip_norm = 0.0;
  bool track_loss = true;  // full-set loss before training and after each epoch

  static Hyper from(const Config& c) {
    Hyper h;
    h.epochs = c.get("train.epochs", h.epochs);
    h.batch = c.get("train.batch", h.batch);
    h.lr = c.get("train.lr", h.lr);
    h.decay_factor = c.get("train.decay_factor", h.decay_factor);
    h.decay_every = c.get("train.decay_every", h.decay_every);
    h.momentum = c.get("train.momentum", h.momentum);
    h.clip_norm = c.get("train.clip_norm", h.clip_norm);
    h.track_loss = c.get("train.track_loss", std::string(h.track_loss ? "true" : "false")) == "true";
    h.validate();
    return h;
  }
  void validate() const {
    require(epochs >= 0, "train.epochs must be >= 0");
    require(batch >= 1, "train.batch must be >= 1");
    require(lr > 0, "train.lr must be positive");
    require(decay_factor > 0 && decay_factor <= 1, "train.decay_factor must be in (0, 1]");
    require(momentum >= 0 && momentum < 1, "train.momentum must be in [0, 1)");
    require(clip_norm >= 0, "train.clip_norm must be >= 0");
  }
  std::string describe() const {
    return "epochs=" + std::to_string(epochs) + " batch=" + std::to_string(batch) + " lr=" + std::to_string(lr) +
           " decay_factor=" + std::to_string(decay_factor) + " decay_every=" + std::to_string(decay_every) +
           " momentum=" + std::to_string(momentum) + " clip_norm=" + std::to_string(clip_norm);
  }
};

// Prepared backbone-sized inputs. Sequence examples hold all frames of a
// segment; a random 16-frame window is drawn whenever the example is used.
struct SequenceExample {
  std::vector<Tensor<float>> frames;
  std::size_t label = 0;
};

struct FrameExample {
  Tensor<float> frame;
  std::size_t label = 0;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch
  std::vector<double> full_loss;   // full-set loss at start and after each epoch (when tracked)
  long long iterations = 0;
};

// One epoch's visiting order: every class is resampled to the largest class
// count (all of its examples once, the shortfall drawn with replacement),
// then the whole list is shuffled.
inline std::vector<std::size_t> balanced_order(const std::vector<std::size_t>& labels, std::size_t classes, Rng& rng) {
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] < classes, "balanced_order: label out of range");
    by_class[labels[i]].push_back(i);
  }
  std::size_t most = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (by_class[c].empty()) throw ValidationError("training split has no examples of class " + std::to_string(c));
    most = std::max(most, by_class[c].size());
  }
  std::vector<std::size_t> order;
  order.reserve(most * classes);
  for (const auto& members : by_class) {
    order.insert(order.end(), members.begin(), members.end());
    for (std::size_t k = members.size(); k < most; ++k) order.push_back(members[rng.index(members.size())]);
  }
  rng.shuffle(order);
  return order;
}

namespace detail {

inline std::vector<Tensor<float>> random_window(const std::vector<Tensor<float>>& frames, std::size_t len, Rng& rng) {
  if (frames.size() <= len) return frames;
  const std::size_t off = rng.index(frames.size() - len + 1);
  return {frames.begin() + static_cast<std::ptrdiff_t>(off), frames.begin() + static_cast<std::ptrdiff_t>(off + len)};
}

// Mean loss over all evaluation windows of one example.
inline double sequence_example_loss(const models::SequenceClassifier<float>& m, const SequenceExample& ex,
                                    std::size_t len) {
  if (ex.frames.size() <= len) return m.loss(ex.frames, ex.label);
  double sum = 0;
  std::size_t n = 0;
  std::size_t b = 0;
  auto run = [&](std::size_t from) {
    const std::vector<Tensor<float>> w(ex.frames.begin() + static_cast<std::ptrdiff_t>(from),
                                       ex.frames.begin() + static_cast<std::ptrdiff_t>(from + len));
    sum += m.loss(w, ex.label);
    ++n;
  };
  for (; b + len <= ex.frames.size(); b += len) run(b);
  if (b < ex.frames.size()) run(ex.frames.size() - len);
  return sum / static_cast<double>(n);
}

template <typename Model>
std::vector<Tensor<float>*> enable_grads(Model& m) {
  std::vector<Tensor<float>*> ps;
  for (const auto& p : m.params()) {
    p.tensor->enable_grad();
    p.tensor->zero_grad();
    ps.push_back(p.tensor);
  }
  return ps;
}

// Generic loop: `step(i, rng)` accumulates gradients for example i and
// returns its loss; `full_loss()` evaluates the whole set.
template <typename StepFn, typename FullFn>
TrainReport run_loop(const std::vector<Tensor<float>*>& params, const std::vector<std::size_t>& labels,
                     std::size_t classes, const Hyper& h, Rng& rng, StepFn step, FullFn full_loss) {
  h.validate();
  TrainReport rep;
  nn::Sgd<float> opt(nn::LrSchedule{h.lr, h.decay_factor, h.decay_every}, h.momentum, h.clip_norm);
  if (h.track_loss) rep.full_loss.push_back(full_loss());
  for (int e = 0; e < h.epochs; ++e) {
    const auto order = balanced_order(labels, classes, rng);
    double epoch_sum = 0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(h.batch)) {
      const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(h.batch));
      for (auto* p : params) p->zero_grad();
      double batch_loss = 0;
      for (std::size_t k = b; k < end; ++k) batch_loss += step(order[k], rng);
      const float inv = 1.0f / static_cast<float>(end - b);
      for (auto* p : params)
        for (auto& g : p->grad()) g *= inv;
      opt.step(params);
      epoch_sum += batch_loss / static_cast<double>(end - b);
      ++batches;
    }
    rep.epoch_loss.push_back(batches ? epoch_sum / static_cast<double>(batches) : 0.0);
    if (h.track_loss) rep.full_loss.push_back(full_loss());
  }
  rep.iterations = opt.iteration();
  return rep;
}

}  // namespace detail

// Trains a sequence classifier in place; `seed` drives the sampling stream.
inline TrainReport train_sequence(models::SequenceClassifier<float>& model, const std::vector<SequenceExample>& data,
                                  const Hyper& h, std::uint64_t seed, std::size_t window = 16) {
  require(!data.empty(), "train: no training examples");
  std::vector<std::size_t> labels;
  for (const auto& ex : data) {
    require(!ex.frames.empty(), "train: empty example sequence");
    labels.push_back(ex.label);
  }
  Rng rng = Rng::stream(seed, "sampling");
  const auto params = detail::enable_grads(model);
  auto step = [&](std::size_t i, Rng& r) {
    return static_cast<double>(model.loss_and_backward(detail::random_window(data[i].frames, window, r), data[i].label));
  };
  auto full = [&] {
    double s = 0;
    for (const auto& ex : data) s += detail::sequence_example_loss(model, ex, window);
    return s / static_cast<double>(data.size());
  };
  return detail::run_loop(params, labels, model.classes(), h, rng, step, full);
}

inline TrainReport train_frames(models::FrameClassifier<float>& model, const std::vector<FrameExample>& data,
                                const Hyper& h, std::uint64_t seed) {
  require(!data.empty(), "train: no training examples");
  std::vector<std::size_t> labels;
  for (const auto& ex : data) labels.push_back(ex.label);
  Rng rng = Rng::stream(seed, "sampling");
  const auto params = detail::enable_grads(model);
  auto step = [&](std::size_t i, Rng&) {
    return static_cast<double>(model.loss_and_backward(data[i].frame, data[i].label));
  };
  auto full = [&] {
    double s = 0;
    for (const auto& ex : data) s += model.loss(ex.frame, ex.label);
    return s / static_cast<double>(data.size());
  };
  return detail::run_loop(params, labels, 2, h, rng, step, full);
}

// Fresh model initialised from the seed's "init" stream.
inline models::SequenceClassifier<float> make_sequence_model(const models::ModelConfig& cfg, std::uint64_t seed) {
  models::SequenceClassifier<float> m(cfg);
  Rng rng = Rng::stream(seed, "init");
  m.init(rng);
  return m;
}

inline models::FrameClassifier<float> make_frame_model(const models::ModelConfig& cfg, std::uint64_t seed) {
  models::FrameClassifier<float> m(cfg);
  Rng rng = Rng::stream(seed, "init");
  m.init(rng);
  return m;
}

inline std::string loss_curve_csv(const TrainReport& r) {
  std::string out = "epoch,train_loss,full_loss\n";
  const std::size_t rows = std::max(r.full_loss.size(), r.epoch_loss.size() + 1);
  for (std::size_t e = 0; e < rows; ++e) {
    out += std::to_string(e) + ",";
    out += (e >= 1 && e - 1 < r.epoch_loss.size()) ? std::to_string(r.epoch_loss[e - 1]) : std::string("");
    out += ",";
    out += e < r.full_loss.size() ? std::to_string(r.full_loss[e]) : std::string("");
    out += "\n";
  }
  return out;
}

}  // namespace ongcmp::train

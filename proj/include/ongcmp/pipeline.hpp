// Glue between the dataset, flow, training and evaluation layers: turns
// manifest records into backbone-ready inputs, builds per-stage training
// sets, and runs the full train-then-evaluate cycle.
#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "eval.hpp"
#include "flow.hpp"
#include "models.hpp"
#include "ontology.hpp"
#include "train.hpp"

namespace ongcmp::pipeline {

// Everything the learners consume for one event, already resized to the
// backbone input. GCMP runs are computed per segment (n frames -> n-1 images).
struct PreparedEvent {
  std::string id;
  EventLabel label;
  data::Split split = data::Split::Train;
  std::vector<Tensor<float>> pre_gcmp, occ_gcmp, post_rgb, occ_rgb;
};

struct PrepareOptions {
  bool gcmp = true;
  bool post = true;
  bool raw_occ = false;
};

inline PreparedEvent prepare_event(const data::ManifestRecord& r, const VideoClip& source,
                                   const flow::SolverConfig& solver, const models::BackboneConfig& bb,
                                   const PrepareOptions& opt = {}) {
  const auto seg = data::segment_record(r, source);
  PreparedEvent e{r.source_id, r.label, r.split, {}, {}, {}, {}};
  if (opt.gcmp) {
    e.pre_gcmp = models::prepare_images<float>(ontology::gcmp_images(seg.pre, solver), bb);
    e.occ_gcmp = models::prepare_images<float>(ontology::gcmp_images(seg.occ, solver), bb);
  }
  if (opt.post) e.post_rgb = models::prepare_images<float>(seg.post.frames, bb);
  if (opt.raw_occ) e.occ_rgb = models::prepare_images<float>(seg.occ.frames, bb);
  return e;
}

inline std::vector<PreparedEvent> prepare_events(const data::Dataset& ds, const flow::SolverConfig& solver,
                                                 const models::BackboneConfig& bb, const PrepareOptions& opt = {}) {
  std::vector<PreparedEvent> out;
  out.reserve(ds.sources.size());
  for (std::size_t i = 0; i < ds.sources.size(); ++i)
    out.push_back(prepare_event(ds.manifest.records[i], ds.sources[i], solver, bb, opt));
  return out;
}

// Sequence examples for occ5 / pre2 / flat6 from the given split. `raw`
// swaps occ GCMP images for raw occ frames.
inline std::vector<train::SequenceExample> sequence_examples(const std::vector<PreparedEvent>& events,
                                                             train::Stage stage, data::Split split,
                                                             bool raw = false) {
  require(stage != train::Stage::PostSf, "postsf is trained on single frames");
  std::vector<train::SequenceExample> out;
  for (const auto& e : events) {
    if (e.split != split) continue;
    const int y = train::stage_label(stage, e.label);
    if (y < 0) continue;
    const auto& src = stage == train::Stage::Pre2 ? e.pre_gcmp : (raw ? e.occ_rgb : e.occ_gcmp);
    require(!src.empty(), "event '" + e.id + "' has no prepared input for stage " +
                              std::string(train::stage_name(stage)));
    out.push_back({src, static_cast<std::size_t>(y)});
  }
  return out;
}

inline std::vector<train::FrameExample> frame_examples(const std::vector<PreparedEvent>& events, data::Split split) {
  std::vector<train::FrameExample> out;
  for (const auto& e : events) {
    if (e.split != split) continue;
    const int y = train::stage_label(train::Stage::PostSf, e.label);
    if (y < 0) continue;
    require(!e.post_rgb.empty(), "event '" + e.id + "' has no post-event frames");
    for (const auto& f : e.post_rgb) out.push_back({f, static_cast<std::size_t>(y)});
  }
  return out;
}

// train.<key> with train.<stage>.<key> taking precedence.
inline train::Hyper stage_hyper(const Config& cfg, train::Stage stage) {
  Config merged;
  const std::string prefix = "train." + std::string(train::stage_name(stage)) + ".";
  for (const auto& [k, v] : cfg.values())
    if (k.rfind("train.", 0) == 0 && k.rfind(prefix, 0) != 0) merged.set(k, v);
  for (const auto& [k, v] : cfg.values())
    if (k.rfind(prefix, 0) == 0) merged.set("train." + k.substr(prefix.size()), v);
  return train::Hyper::from(merged);
}

inline models::ModelConfig stage_model_config(const Config& cfg, train::Stage stage, bool raw = false) {
  const auto input = stage == train::Stage::PostSf || raw ? models::InputKind::Rgb : models::InputKind::Gcmp;
  return models::ModelConfig::from(cfg, train::stage_classes(stage), input);
}

// Trained stage models plus their loss curves.
struct TrainedPipeline {
  models::SequenceClassifier<float> occ, pre;
  models::FrameClassifier<float> post;
  train::TrainReport occ_report, pre_report, post_report;
};

inline TrainedPipeline train_pipeline(const std::vector<PreparedEvent>& events, const Config& cfg,
                                      std::uint64_t seed) {
  TrainedPipeline p;
  p.occ = train::make_sequence_model(stage_model_config(cfg, train::Stage::Occ5), seed);
  p.occ_report = train::train_sequence(p.occ, sequence_examples(events, train::Stage::Occ5, data::Split::Train),
                                       stage_hyper(cfg, train::Stage::Occ5), seed);
  p.pre = train::make_sequence_model(stage_model_config(cfg, train::Stage::Pre2), seed);
  p.pre_report = train::train_sequence(p.pre, sequence_examples(events, train::Stage::Pre2, data::Split::Train),
                                       stage_hyper(cfg, train::Stage::Pre2), seed);
  p.post = train::make_frame_model(stage_model_config(cfg, train::Stage::PostSf), seed);
  p.post_report = train::train_frames(p.post, frame_examples(events, data::Split::Train),
                                      stage_hyper(cfg, train::Stage::PostSf), seed);
  return p;
}

// ---------------------------------------------------------------- evaluation

struct EvaluationResult {
  std::vector<ontology::PredictionRecord> records;
  eval::ConfusionMatrix confusion{std::vector<std::string>{}};
  eval::ApReport ap;
  eval::TimingReport timing;
};

inline std::vector<std::string> final_class_names() {
  std::vector<std::string> n;
  for (std::size_t i = 0; i < kNumFinal; ++i) n.push_back(final_class_name(i));
  return n;
}

// Scores prediction records against the truth labels (parallel vectors).
inline EvaluationResult score_records(const std::vector<ontology::PredictionRecord>& records,
                                      const std::vector<EventLabel>& truth) {
  require(records.size() == truth.size(), "evaluation: prediction and truth counts differ");
  EvaluationResult r;
  r.records = records;
  std::vector<eval::LabelPair> pairs;
  std::vector<eval::ScoredClip> scored;
  for (std::size_t i = 0; i < records.size(); ++i) {
    pairs.push_back({truth[i].final_index(), records[i].vf_index});
    scored.push_back({records[i].id, records[i].confidences(), truth[i].final_index()});
  }
  r.confusion = eval::accuracy_report(pairs, final_class_names());
  r.ap = eval::mean_average_precision(scored, kNumFinal);
  return r;
}

// Runs predict_event on every record of `split` (flow computed inside, as at
// deployment) and scores the result.
inline EvaluationResult evaluate(const data::Dataset& ds, data::Split split, const ontology::StageModels& models,
                                 const flow::SolverConfig& solver) {
  std::vector<ontology::PredictionRecord> records;
  std::vector<EventLabel> truth;
  std::vector<eval::PhaseSample> samples;
  for (std::size_t i = 0; i < ds.sources.size(); ++i) {
    const auto& rec = ds.manifest.records[i];
    if (rec.split != split) continue;
    const auto seg = data::segment_record(rec, ds.sources[i]);
    const auto p = ontology::predict_event(seg, models, solver);
    records.push_back(ontology::make_record(rec.source_id, p));
    truth.push_back(rec.label);
    samples.push_back({p.times.occ, p.times.pre, p.times.post, p.times.flow, p.times.total});
  }
  require(!records.empty(), "evaluation: split has no records");
  auto r = score_records(records, truth);
  r.timing = eval::timing_report(samples, true);
  return r;
}

// Accuracy of a sequence model on its own label space.
inline eval::ConfusionMatrix sequence_confusion(const models::SequenceClassifier<float>& m,
                                                const std::vector<train::SequenceExample>& data,
                                                const std::vector<std::string>& names) {
  std::vector<eval::LabelPair> pairs;
  for (const auto& ex : data) pairs.push_back({ex.label, models::classify_prepared(ex.frames, m).argmax()});
  return eval::accuracy_report(pairs, names);
}

// Dataset fingerprint: manifest text plus every frame byte.
inline std::uint64_t fingerprint(const data::Dataset& ds) {
  std::uint64_t h = fnv1a64(data::format_manifest(ds.manifest));
  for (const auto& c : ds.sources)
    for (const auto& f : c.frames) {
      const auto& b = f.bytes();
      h = fnv1a64(std::string_view(reinterpret_cast<const char*>(b.data()), b.size()), h);
    }
  return h;
}

}  // namespace ongcmp::pipeline

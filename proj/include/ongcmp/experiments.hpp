// Comparison studies: motion-image input vs raw frames, cascade vs a flat
// six-way classifier, and class-to-class feature correlation.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "eval.hpp"
#include "pipeline.hpp"

namespace ongcmp::experiments {

using pipeline::PreparedEvent;

// ---------------------------------------------------------------- input ablation

struct InputAblation {
  std::vector<std::uint64_t> seeds;
  std::vector<double> gcmp_accuracy;  // occ5 test accuracy per seed
  std::vector<double> raw_accuracy;
  double mean_gcmp = 0, mean_raw = 0;
};

// Twin occ5 models that differ only in their input: colourised flow images
// or the raw occ frames. Events must be prepared with raw_occ enabled.
inline InputAblation ablate_input(const std::vector<PreparedEvent>& events, const Config& cfg,
                                  const std::vector<std::uint64_t>& seeds) {
  require(!seeds.empty(), "ablation needs at least one seed");
  InputAblation r;
  r.seeds = seeds;
  const auto names = train::stage_label_names(train::Stage::Occ5);
  const auto hyper = pipeline::stage_hyper(cfg, train::Stage::Occ5);
  for (const auto seed : seeds) {
    for (const bool raw : {false, true}) {
      auto m = train::make_sequence_model(pipeline::stage_model_config(cfg, train::Stage::Occ5, raw), seed);
      train::train_sequence(m, pipeline::sequence_examples(events, train::Stage::Occ5, data::Split::Train, raw),
                            hyper, seed);
      const auto cm = pipeline::sequence_confusion(
          m, pipeline::sequence_examples(events, train::Stage::Occ5, data::Split::Test, raw), names);
      (raw ? r.raw_accuracy : r.gcmp_accuracy).push_back(cm.overall_accuracy());
    }
  }
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    r.mean_gcmp += r.gcmp_accuracy[i] / static_cast<double>(seeds.size());
    r.mean_raw += r.raw_accuracy[i] / static_cast<double>(seeds.size());
  }
  return r;
}

inline std::string format_input_ablation(const InputAblation& r) {
  std::string out = "Occ-stage accuracy with and without motion-image input (test split)\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-10s %12s %12s\n", "seed", "raw frames", "GCMP");
  out += buf;
  for (std::size_t i = 0; i < r.seeds.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-10llu %11.2f%% %11.2f%%\n", static_cast<unsigned long long>(r.seeds[i]),
                  100 * r.raw_accuracy[i], 100 * r.gcmp_accuracy[i]);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-10s %11.2f%% %11.2f%%\n", "mean", 100 * r.mean_raw, 100 * r.mean_gcmp);
  out += buf;
  return out;
}

// ---------------------------------------------------------------- ontology ablation

struct OntologyAblation {
  eval::ConfusionMatrix flat{std::vector<std::string>{}};
  eval::ConfusionMatrix cascade{std::vector<std::string>{}};
  double flat_two_point = 0;     // mean accuracy of Layup and OtherTwoPoint
  double cascade_two_point = 0;
};

// Base-event label from the cascade on prepared inputs.
inline std::size_t cascade_base(const PreparedEvent& e, const models::SequenceClassifier<float>& occ,
                                 const models::SequenceClassifier<float>& pre) {
  const auto g5 = models::classify_prepared(e.occ_gcmp, occ);
  const auto v6 = ontology::cascade(g5, [&] { return models::classify_prepared(e.pre_gcmp, pre); });
  return static_cast<std::size_t>(v6.index());
}

inline double two_point_accuracy(const eval::ConfusionMatrix& m) {
  const auto a = m.class_accuracy(static_cast<std::size_t>(BaseEvent::Layup));
  const auto b = m.class_accuracy(static_cast<std::size_t>(BaseEvent::OtherTwoPoint));
  require(a && b, "ontology ablation: test split lacks Layup or OtherTwoPoint clips");
  return (*a + *b) / 2;
}

// Compares trained cascade stages against a flat six-way occ classifier
// trained with the same settings.
inline OntologyAblation ablate_ontology(const std::vector<PreparedEvent>& events, const Config& cfg,
                                        const models::SequenceClassifier<float>& occ,
                                        const models::SequenceClassifier<float>& pre, std::uint64_t seed) {
  auto flat = train::make_sequence_model(pipeline::stage_model_config(cfg, train::Stage::Flat6), seed);
  train::train_sequence(flat, pipeline::sequence_examples(events, train::Stage::Flat6, data::Split::Train),
                        pipeline::stage_hyper(cfg, train::Stage::Flat6), seed);
  const std::vector<std::string> names(kBaseNames.begin(), kBaseNames.end());
  std::vector<eval::LabelPair> fp, cp;
  for (const auto& e : events) {
    if (e.split != data::Split::Test) continue;
    const auto truth = static_cast<std::size_t>(e.label.base);
    fp.push_back({truth, models::classify_prepared(e.occ_gcmp, flat).argmax()});
    cp.push_back({truth, cascade_base(e, occ, pre)});
  }
  OntologyAblation r;
  r.flat = eval::accuracy_report(fp, names);
  r.cascade = eval::accuracy_report(cp, names);
  r.flat_two_point = two_point_accuracy(r.flat);
  r.cascade_two_point = two_point_accuracy(r.cascade);
  return r;
}

inline std::string format_ontology_ablation(const OntologyAblation& r) {
  std::string out = "Six-event accuracy with and without the two-stage ontology (test split)\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-16s %12s %12s\n", "event", "flat", "two-stage");
  out += buf;
  for (std::size_t c = 0; c < kNumBase; ++c) {
    std::snprintf(buf, sizeof buf, "%-16s %11.2f%% %11.2f%%\n", std::string(kBaseNames[c]).c_str(),
                  100 * r.flat.class_accuracy(c).value_or(0), 100 * r.cascade.class_accuracy(c).value_or(0));
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-16s %11.2f%% %11.2f%%\n%-16s %11.2f%% %11.2f%%\n", "Average",
                100 * r.flat.average_accuracy(), 100 * r.cascade.average_accuracy(), "Layup+O2P mean",
                100 * r.flat_two_point, 100 * r.cascade_two_point);
  out += buf;
  return out;
}

// ---------------------------------------------------------------- correlation

inline std::vector<double> mean_feature(const models::CnnBackbone<float>& bb, const std::vector<Tensor<float>>& frames) {
  require(!frames.empty(), "mean_feature: empty sequence");
  std::vector<double> m(bb.feature_dim(), 0.0);
  for (const auto& f : frames) {
    const auto x = bb.forward(f);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += x[i];
  }
  for (auto& v : m) v /= static_cast<double>(frames.size());
  return m;
}

inline std::vector<double> unit(std::vector<double> v) {
  double n = 0;
  for (double x : v) n += x * x;
  if (n > 0)
    for (auto& x : v) x /= std::sqrt(n);
  return v;
}

inline std::vector<double> to_double(const Tensor<float>& t) { return {t.values().begin(), t.values().end()}; }

struct CorrelationStudy {
  eval::CorrelationMatrix gcmp_svf;     // six base events
  eval::CorrelationMatrix rgb_vf_sf;    // success vs failure, post frames
  eval::CorrelationMatrix gcmp_svf_sf;  // success vs failure, post motion
};

// Every row's diagonal strictly above each of its off-diagonal entries.
inline bool intra_dominates(const eval::CorrelationMatrix& m) {
  for (std::size_t c = 0; c < m.names.size(); ++c)
    if (!(m.intra(c) > m.max_inter(c))) return false;
  return true;
}

// Sequence features: the two motion-stream backbones side by side, each
// half scaled to unit length. The occ half is the temporal mean of occ5
// features over the pre and occ motion images; the pre half is the mean of
// pre2 features over the pre images (the only stage that sees Layup and
// OtherTwoPoint apart). Per-frame features: post-backbone features of
// single post frames. Uses events of `split`.
inline CorrelationStudy correlation_study(const std::vector<PreparedEvent>& events,
                                          const models::SequenceClassifier<float>& occ,
                                          const models::SequenceClassifier<float>& pre,
                                          const models::FrameClassifier<float>& post, data::Split split,
                                          const flow::SolverConfig& solver, const data::Dataset* ds = nullptr) {
  std::vector<eval::LabeledFeature> svf, vf, svf_sf;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.split != split) continue;
    std::vector<Tensor<float>> seq = e.pre_gcmp;
    seq.insert(seq.end(), e.occ_gcmp.begin(), e.occ_gcmp.end());
    auto f = unit(mean_feature(occ.backbone(), seq));
    const auto g = unit(mean_feature(pre.backbone(), e.pre_gcmp));
    f.insert(f.end(), g.begin(), g.end());
    svf.push_back({std::move(f), static_cast<std::size_t>(e.label.base)});
    if (e.label.base == BaseEvent::Steal) continue;
    const auto sf = static_cast<std::size_t>(e.label.outcome);
    for (const auto& f : e.post_rgb) vf.push_back({to_double(post.backbone().forward(f)), sf});
    if (ds) {
      const auto seg = data::segment_record(ds->manifest.records[i], ds->sources[i]);
      const auto post_gcmp =
          models::prepare_images<float>(ontology::gcmp_images(seg.post, solver), occ.config().backbone);
      svf_sf.push_back({mean_feature(occ.backbone(), post_gcmp), sf});
    }
  }
  CorrelationStudy s;
  s.gcmp_svf = eval::correlate_features(svf, {kBaseNames.begin(), kBaseNames.end()});
  s.rgb_vf_sf = eval::correlate_features(vf, {kSfNames.begin(), kSfNames.end()});
  if (!svf_sf.empty()) s.gcmp_svf_sf = eval::correlate_features(svf_sf, {kSfNames.begin(), kSfNames.end()});
  return s;
}

}  // namespace ongcmp::experiments

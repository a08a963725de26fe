// Decision layer: the two-stage cascade, Kronecker fusion of base event and
// outcome, final 11-way vector assembly, and end-to-end event prediction.
#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "flow.hpp"
#include "labels.hpp"
#include "models.hpp"

namespace ongcmp::ontology {

enum class VectorKind { V5, V2, VSF, V6, V5elem, Vensem, VF };

inline std::size_t kind_length(VectorKind k) {
  switch (k) {
    case VectorKind::V5: return 5;
    case VectorKind::V2: return 2;
    case VectorKind::VSF: return 2;
    case VectorKind::V6: return 6;
    case VectorKind::V5elem: return 5;
    case VectorKind::Vensem: return 10;
    case VectorKind::VF: return 11;
  }
  return 0;
}

inline std::string_view kind_name(VectorKind k) {
  static constexpr std::string_view names[] = {"V5", "V2", "VSF", "V6", "V5elem", "Vensem", "VF"};
  return names[static_cast<std::size_t>(k)];
}

// V5elem and Vensem may be all zero (steal); every other kind is one-hot.
inline bool kind_requires_one(VectorKind k) { return k != VectorKind::V5elem && k != VectorKind::Vensem; }

struct LabelVector {
  VectorKind kind = VectorKind::VF;
  std::vector<int> v;

  LabelVector() = default;
  explicit LabelVector(VectorKind k) : kind(k), v(kind_length(k), 0) {}
  LabelVector(VectorKind k, std::vector<int> entries) : kind(k), v(std::move(entries)) { validate(); }

  static LabelVector one_hot(VectorKind k, std::size_t i) {
    require(i < kind_length(k), "one_hot: index out of range for " + std::string(kind_name(k)));
    LabelVector r(k);
    r.v[i] = 1;
    return r;
  }

  std::size_t ones() const {
    std::size_t n = 0;
    for (int e : v) n += e == 1;
    return n;
  }

  void validate() const {
    const std::string k(kind_name(kind));
    require(v.size() == kind_length(kind), k + ": expected length " + std::to_string(kind_length(kind)));
    for (int e : v) require(e == 0 || e == 1, k + ": entries must be 0 or 1");
    const std::size_t n = ones();
    require(n <= 1, k + ": more than one active entry");
    if (kind_requires_one(kind)) require(n == 1, k + ": expected exactly one active entry");
  }

  // Index of the active entry; -1 for the all-zero vector.
  int index() const {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] == 1) return static_cast<int>(i);
    return -1;
  }

  friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

inline void require_kind(const LabelVector& x, VectorKind k, const char* what) {
  if (x.kind != k)
    throw ValidationError(std::string(what) + ": expected " + std::string(kind_name(k)) + ", got " +
                          std::string(kind_name(x.kind)));
  x.validate();
}

// ---------------------------------------------------------------- cascade

// Stage one picks among the five occ classes. A non-merged winner is the
// event label directly; the merged class defers to the two-way pre-event
// classifier, which is called only in that case.
inline LabelVector cascade(const models::SequencePrediction& g5,
                           const std::function<models::SequencePrediction()>& two_class,
                           std::optional<models::SequencePrediction>* g2_out = nullptr) {
  require(g5.mean.size() == kNumOcc, "cascade: stage-one prediction must have 5 entries");
  const std::size_t k = nn::argmax(g5.mean);
  if (k != kMergedOccIndex) return LabelVector::one_hot(VectorKind::V6, static_cast<std::size_t>(occ_index_to_base(k)));
  auto g2 = two_class();
  require(g2.mean.size() == 2, "cascade: stage-two prediction must have 2 entries");
  const BaseEvent b = nn::argmax(g2.mean) == 0 ? BaseEvent::Layup : BaseEvent::OtherTwoPoint;
  if (g2_out) *g2_out = std::move(g2);
  return LabelVector::one_hot(VectorKind::V6, static_cast<std::size_t>(b));
}

// First five entries of V6 (everything but Steal).
inline LabelVector v5elem_from_v6(const LabelVector& v6) {
  require_kind(v6, VectorKind::V6, "v5elem_from_v6");
  LabelVector r(VectorKind::V5elem);
  std::copy(v6.v.begin(), v6.v.begin() + 5, r.v.begin());
  return r;
}

// Entry 2i + j (0-indexed) = v5elem[i] * vsf[j].
inline LabelVector kron_fuse(const LabelVector& v5elem, const LabelVector& vsf) {
  require_kind(v5elem, VectorKind::V5elem, "kron_fuse");
  require_kind(vsf, VectorKind::VSF, "kron_fuse");
  LabelVector r(VectorKind::Vensem);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 2; ++j) r.v[2 * i + j] = v5elem.v[i] * vsf.v[j];
  return r;
}

// VF = (vensem, v6[Steal]).
inline LabelVector final_vector(const LabelVector& vensem, const LabelVector& v6) {
  require_kind(vensem, VectorKind::Vensem, "final_vector");
  require_kind(v6, VectorKind::V6, "final_vector");
  const bool steal = v6.v[static_cast<std::size_t>(BaseEvent::Steal)] == 1;
  if (steal) {
    require(vensem.ones() == 0, "final_vector: steal prediction with a non-zero outcome vector");
  } else {
    require(vensem.ones() == 1, "final_vector: non-steal prediction needs a one-hot outcome vector");
    require(vensem.index() / 2 == v6.index(), "final_vector: base event of the outcome vector disagrees with V6");
  }
  LabelVector r(VectorKind::VF);
  std::copy(vensem.v.begin(), vensem.v.end(), r.v.begin());
  r.v[10] = v6.v[static_cast<std::size_t>(BaseEvent::Steal)];
  r.validate();
  return r;
}

inline EventLabel label_of(const LabelVector& vf) {
  require_kind(vf, VectorKind::VF, "label_of");
  return EventLabel::from_final_index(static_cast<std::size_t>(vf.index()));
}

// ---------------------------------------------------------------- end to end

using SequenceModelFn = std::function<models::SequencePrediction(const std::vector<RgbImage>&)>;
using FrameModelFn = std::function<std::vector<double>(const RgbImage&)>;

// The three learned stages as plain callables, so real models and test
// stubs are interchangeable.
struct StageModels {
  SequenceModelFn occ;   // 5-way on occ GCMP images
  SequenceModelFn pre;   // 2-way on pre-event GCMP images
  FrameModelFn post;     // success/failure on one raw post-event frame
};

inline StageModels bind_models(const models::SequenceClassifier<float>& occ,
                               const models::SequenceClassifier<float>& pre,
                               const models::FrameClassifier<float>& post) {
  return {[&occ](const std::vector<RgbImage>& s) { return models::classify_sequence(s, occ); },
          [&pre](const std::vector<RgbImage>& s) { return models::classify_sequence(s, pre); },
          [&post](const RgbImage& f) { return models::classify_frame_sf(f, post); }};
}

// Seconds spent per phase of one prediction.
struct PhaseTimes {
  double flow = 0;
  double occ = 0;
  double pre = 0;
  double post = 0;
  double total = 0;
};

struct EventPrediction {
  LabelVector vf;
  EventLabel label;
  models::SequencePrediction g5;
  std::optional<models::SequencePrediction> g2;
  std::optional<models::VoteResult> vote;
  PhaseTimes times;
};

inline std::vector<RgbImage> gcmp_images(const VideoClip& segment, const flow::SolverConfig& cfg) {
  require(segment.size() >= 2, "segment '" + segment.id + "' needs at least two frames for motion");
  return flow::flow_sequence(segment, cfg);
}

inline EventPrediction predict_event(const data::SegmentedEvent& ev, const StageModels& m,
                                     const flow::SolverConfig& cfg) {
  require(!ev.pre.frames.empty() && !ev.occ.frames.empty() && !ev.post.frames.empty(),
          "predict_event: every segment must be non-empty");
  using clock = std::chrono::steady_clock;
  auto secs = [](clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); };
  EventPrediction out;
  const auto t0 = clock::now();

  auto t = clock::now();
  const auto occ_gcmp = gcmp_images(ev.occ, cfg);
  out.times.flow += secs(t, clock::now());
  t = clock::now();
  out.g5 = m.occ(occ_gcmp);
  out.times.occ = secs(t, clock::now());

  const LabelVector v6 = cascade(
      out.g5,
      [&] {
        auto tf = clock::now();
        const auto pre_gcmp = gcmp_images(ev.pre, cfg);
        out.times.flow += secs(tf, clock::now());
        tf = clock::now();
        auto r = m.pre(pre_gcmp);
        out.times.pre = secs(tf, clock::now());
        return r;
      },
      &out.g2);

  LabelVector vensem(VectorKind::Vensem);
  if (v6.index() != static_cast<int>(BaseEvent::Steal)) {
    t = clock::now();
    std::vector<std::vector<double>> per_frame;
    for (const auto& f : ev.post.frames) per_frame.push_back(m.post(f));
    out.vote = models::vote_sf(per_frame);
    out.times.post = secs(t, clock::now());
    const auto vsf = LabelVector::one_hot(VectorKind::VSF, out.vote->outcome == Outcome::Success ? 0 : 1);
    vensem = kron_fuse(v5elem_from_v6(v6), vsf);
  }
  out.vf = final_vector(vensem, v6);
  out.label = label_of(out.vf);
  out.times.total = secs(t0, clock::now());
  return out;
}

// ---------------------------------------------------------------- confidences

// Per-class confidences used for ranking. A base event's stage-one
// probability (split by the stage-two probabilities for the merged class)
// times the probability of the outcome, taken as the mean per-frame success
// probability; 0.5 each when the outcome network did not run.
inline std::vector<double> confidence_vector(const std::vector<double>& g5, const std::vector<double>* g2,
                                             const double* p_success) {
  require(g5.size() == kNumOcc, "confidence_vector: stage-one vector must have 5 entries");
  require(!g2 || g2->size() == 2, "confidence_vector: stage-two vector must have 2 entries");
  const double ps = p_success ? *p_success : 0.5;
  std::vector<double> c(kNumFinal, 0.0);
  for (std::size_t b = 0; b + 1 < kNumBase; ++b) {
    const auto base = static_cast<BaseEvent>(b);
    const EventLabel probe{base, Outcome::Success};
    double pb = g5[probe.occ_index()];
    if (probe.occ_index() == kMergedOccIndex) {
      const std::size_t k = base == BaseEvent::Layup ? 0 : 1;
      pb *= g2 ? (*g2)[k] : 0.5;
    }
    c[2 * b] = pb * ps;
    c[2 * b + 1] = pb * (1.0 - ps);
  }
  c[kNumFinal - 1] = g5[kNumOcc - 1];
  return c;
}

inline std::vector<double> confidence_vector(const EventPrediction& p) {
  const double ps = p.vote ? p.vote->mean_success : 0.5;
  return confidence_vector(p.g5.mean, p.g2 ? &p.g2->mean : nullptr, p.vote ? &ps : nullptr);
}

// ---------------------------------------------------------------- records

// One line per clip:
//   id vf_index label g5(csv) g2(csv)|- success:failure|- p_success|-
struct PredictionRecord {
  std::string id;
  std::size_t vf_index = 0;
  std::vector<double> g5;
  std::optional<std::vector<double>> g2;
  std::optional<std::pair<std::size_t, std::size_t>> votes;
  std::optional<double> p_success;

  std::vector<double> confidences() const {
    return confidence_vector(g5, g2 ? &*g2 : nullptr, p_success ? &*p_success : nullptr);
  }
};

inline PredictionRecord make_record(const std::string& id, const EventPrediction& p) {
  PredictionRecord r;
  r.id = id;
  r.vf_index = static_cast<std::size_t>(p.vf.index());
  r.g5 = p.g5.mean;
  if (p.g2) r.g2 = p.g2->mean;
  if (p.vote) {
    r.votes = std::make_pair(p.vote->success_votes, p.vote->failure_votes);
    r.p_success = p.vote->mean_success;
  }
  return r;
}

namespace detail {
inline std::string csv(const std::vector<double>& v) {
  std::string s;
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g", v[i]);
    if (i) s += ',';
    s += buf;
  }
  return s;
}
inline std::vector<double> parse_csv(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) out.push_back(std::stod(tok));
  return out;
}
}  // namespace detail

inline std::string format_record(const PredictionRecord& r) {
  std::string line = r.id + ' ' + std::to_string(r.vf_index) + ' ' + final_class_name(r.vf_index) + ' ' +
                     detail::csv(r.g5) + ' ' + (r.g2 ? detail::csv(*r.g2) : "-") + ' ';
  line += r.votes ? std::to_string(r.votes->first) + ":" + std::to_string(r.votes->second) : "-";
  line += ' ';
  if (r.p_success) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", *r.p_success);
    line += buf;
  } else {
    line += '-';
  }
  return line;
}

inline PredictionRecord parse_record(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> f;
  for (std::string tok; in >> tok;) f.push_back(tok);
  if (f.size() != 7) throw ValidationError("prediction record: expected 7 fields, got " + std::to_string(f.size()));
  PredictionRecord r;
  try {
    r.id = f[0];
    r.vf_index = static_cast<std::size_t>(std::stoul(f[1]));
    if (r.vf_index >= kNumFinal || final_class_name(r.vf_index) != f[2])
      throw ValidationError("label does not match index");
    r.g5 = detail::parse_csv(f[3]);
    if (r.g5.size() != kNumOcc) throw ValidationError("stage-one vector must have 5 entries");
    if (f[4] != "-") {
      r.g2 = detail::parse_csv(f[4]);
      if (r.g2->size() != 2) throw ValidationError("stage-two vector must have 2 entries");
    }
    if (f[5] != "-") {
      const auto colon = f[5].find(':');
      if (colon == std::string::npos) throw ValidationError("vote tally must be S:F");
      r.votes = std::make_pair(std::stoul(f[5].substr(0, colon)), std::stoul(f[5].substr(colon + 1)));
    }
    if (f[6] != "-") r.p_success = std::stod(f[6]);
  } catch (const ValidationError& e) {
    throw ValidationError("prediction record '" + line + "': " + e.what());
  } catch (const std::exception&) {
    throw ValidationError("prediction record '" + line + "': malformed number");
  }
  return r;
}

}  // namespace ongcmp::ontology

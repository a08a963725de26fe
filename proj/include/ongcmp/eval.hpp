// Metrics and reports: confusion matrices with per-class accuracy, mean
// average precision over ranked clip lists, feature correlation between
// classes, and per-phase timing.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "image.hpp"

namespace ongcmp::eval {

// ---------------------------------------------------------------- confusion

struct ConfusionMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> counts;  // [truth][prediction]

  explicit ConfusionMatrix(std::vector<std::string> class_names)
      : names(std::move(class_names)), counts(names.size(), std::vector<std::size_t>(names.size(), 0)) {}

  std::size_t classes() const { return names.size(); }

  void add(std::size_t truth, std::size_t pred) {
    require(truth < classes() && pred < classes(), "confusion: label outside the class space");
    ++counts[truth][pred];
  }

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& r : counts) n = std::accumulate(r.begin(), r.end(), n);
    return n;
  }
  std::size_t row_total(std::size_t c) const { return std::accumulate(counts[c].begin(), counts[c].end(), std::size_t{0}); }

  // Diagonal over row sum; nullopt for classes with no clips.
  std::optional<double> class_accuracy(std::size_t c) const {
    const auto n = row_total(c);
    if (n == 0) return std::nullopt;
    return static_cast<double>(counts[c][c]) / static_cast<double>(n);
  }

  // Unweighted mean over classes that have clips.
  double average_accuracy() const {
    double s = 0;
    std::size_t k = 0;
    for (std::size_t c = 0; c < classes(); ++c)
      if (auto a = class_accuracy(c)) {
        s += *a;
        ++k;
      }
    return k ? s / static_cast<double>(k) : 0.0;
  }

  double overall_accuracy() const {
    std::size_t d = 0;
    for (std::size_t c = 0; c < classes(); ++c) d += counts[c][c];
    const auto n = total();
    return n ? static_cast<double>(d) / static_cast<double>(n) : 0.0;
  }
};

struct LabelPair {
  std::size_t truth = 0;
  std::size_t pred = 0;
};

inline ConfusionMatrix accuracy_report(const std::vector<LabelPair>& preds, const std::vector<std::string>& names) {
  require(!preds.empty(), "accuracy_report: no predictions");
  ConfusionMatrix m(names);
  for (const auto& p : preds) m.add(p.truth, p.pred);
  return m;
}

inline std::string format_confusion(const ConfusionMatrix& m, const std::string& title) {
  std::string out = title + "\n";
  std::size_t w = 6;
  for (const auto& n : m.names) w = std::max(w, n.size());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(w), "truth\\pred");
  out += buf;
  for (std::size_t c = 0; c < m.classes(); ++c) {
    std::snprintf(buf, sizeof buf, " %5zu", c);
    out += buf;
  }
  out += "   acc%\n";
  for (std::size_t r = 0; r < m.classes(); ++r) {
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(w), m.names[r].c_str());
    out += buf;
    for (std::size_t c = 0; c < m.classes(); ++c) {
      std::snprintf(buf, sizeof buf, " %5zu", m.counts[r][c]);
      out += buf;
    }
    const auto a = m.class_accuracy(r);
    if (a)
      std::snprintf(buf, sizeof buf, "  %6.2f\n", 100.0 * *a);
    else
      std::snprintf(buf, sizeof buf, "     n/a\n");
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "Average (per-class mean) %.2f%%   Overall %.2f%%   Clips %zu\n",
                100.0 * m.average_accuracy(), 100.0 * m.overall_accuracy(), m.total());
  out += buf;
  return out;
}

inline std::string confusion_csv(const ConfusionMatrix& m) {
  std::string out = "truth";
  for (const auto& n : m.names) out += "," + n;
  out += ",accuracy\n";
  for (std::size_t r = 0; r < m.classes(); ++r) {
    out += m.names[r];
    for (auto v : m.counts[r]) out += "," + std::to_string(v);
    const auto a = m.class_accuracy(r);
    out += "," + (a ? std::to_string(*a) : std::string("")) + "\n";
  }
  return out;
}

// Row-normalised heat image, `cell` pixels per entry; darker is larger.
inline void write_confusion_pgm(const std::string& path, const ConfusionMatrix& m, int cell = 16) {
  const int k = static_cast<int>(m.classes()), side = k * cell;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(side) * side, 255);
  for (int r = 0; r < k; ++r) {
    const double n = static_cast<double>(m.row_total(static_cast<std::size_t>(r)));
    for (int c = 0; c < k; ++c) {
      const double f = n > 0 ? m.counts[r][c] / n : 0.0;
      const auto g = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - f)));
      for (int y = 0; y < cell; ++y)
        for (int x = 0; x < cell; ++x) px[static_cast<std::size_t>(r * cell + y) * side + c * cell + x] = g;
    }
  }
  write_pgm(path, side, side, px);
}

// ---------------------------------------------------------------- mAP

struct ScoredClip {
  std::string id;
  std::vector<double> confidence;  // one entry per class
  std::size_t truth = 0;
};

struct ApReport {
  std::vector<std::optional<double>> per_class;  // nullopt: no positives
  double map = 0.0;
  std::size_t defined = 0;
};

// Ranks clips by confidence for class c, descending; equal confidences are
// ordered by clip id.
inline std::vector<std::size_t> rank_for_class(const std::vector<ScoredClip>& clips, std::size_t c) {
  std::vector<std::size_t> order(clips.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ca = clips[a].confidence[c], cb = clips[b].confidence[c];
    if (ca != cb) return ca > cb;
    return clips[a].id < clips[b].id;
  });
  return order;
}

// AP = mean over positive ranks of precision at that rank; classes without
// positives are undefined and left out of the mean.
inline ApReport mean_average_precision(const std::vector<ScoredClip>& clips, std::size_t classes) {
  require(!clips.empty(), "mAP: no clips");
  for (const auto& s : clips) {
    require(s.confidence.size() == classes, "mAP: confidence vector length mismatch");
    require(s.truth < classes, "mAP: truth label out of range");
    for (double v : s.confidence) require(std::isfinite(v), "mAP: non-finite confidence");
  }
  ApReport r;
  r.per_class.resize(classes);
  double sum = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const auto order = rank_for_class(clips, c);
    std::size_t hits = 0;
    double ap = 0;
    for (std::size_t k = 0; k < order.size(); ++k)
      if (clips[order[k]].truth == c) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(k + 1);
      }
    if (hits == 0) continue;
    r.per_class[c] = ap / static_cast<double>(hits);
    sum += *r.per_class[c];
    ++r.defined;
  }
  r.map = r.defined ? sum / static_cast<double>(r.defined) : 0.0;
  return r;
}

inline std::string format_ap(const ApReport& r, const std::vector<std::string>& names) {
  std::string out =
      "Average precision per class (one ranked list of all test clips per class; ties by clip id)\n";
  char buf[96];
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    if (r.per_class[c])
      std::snprintf(buf, sizeof buf, "  %-22s %7.4f\n", names[c].c_str(), *r.per_class[c]);
    else
      std::snprintf(buf, sizeof buf, "  %-22s   undefined (no positives)\n", names[c].c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "mAP %.4f over %zu classes\n", r.map, r.defined);
  out += buf;
  return out;
}

// ---------------------------------------------------------------- correlation

struct LabeledFeature {
  std::vector<double> feature;
  std::size_t label = 0;
};

// Mean pairwise cosine similarity x100 between classes; self-pairs are left
// out of the diagonal.
struct CorrelationMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> sim;

  double intra(std::size_t c) const { return sim[c][c]; }
  // Largest off-diagonal entry of row c.
  double max_inter(std::size_t c) const {
    double m = -1e300;
    for (std::size_t k = 0; k < sim.size(); ++k)
      if (k != c) m = std::max(m, sim[c][k]);
    return m;
  }
};

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return d / std::sqrt(na * nb);
}

inline CorrelationMatrix correlate_features(const std::vector<LabeledFeature>& feats,
                                            const std::vector<std::string>& names) {
  const std::size_t K = names.size();
  std::vector<std::vector<std::size_t>> members(K);
  for (std::size_t i = 0; i < feats.size(); ++i) {
    require(feats[i].label < K, "correlate: label out of range");
    require(feats[i].feature.size() == feats.front().feature.size(), "correlate: feature length mismatch");
    double n = 0;
    for (double v : feats[i].feature) n += v * v;
    if (!(n > 0)) throw NumericError("correlate: zero-norm feature vector");
    members[feats[i].label].push_back(i);
  }
  for (std::size_t c = 0; c < K; ++c)
    require(members[c].size() >= 2, "correlate: class '" + names[c] + "' needs at least two clips");
  CorrelationMatrix m{names, std::vector<std::vector<double>>(K, std::vector<double>(K, 0.0))};
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = a; b < K; ++b) {
      double s = 0;
      std::size_t n = 0;
      for (auto i : members[a])
        for (auto j : members[b]) {
          if (i == j) continue;
          s += cosine(feats[i].feature, feats[j].feature);
          ++n;
        }
      m.sim[a][b] = m.sim[b][a] = 100.0 * s / static_cast<double>(n);
    }
  return m;
}

inline std::string format_correlation(const CorrelationMatrix& m, const std::string& title) {
  std::string out = title + " (mean cosine similarity x100)\n";
  char buf[64];
  std::size_t w = 6;
  for (const auto& n : m.names) w = std::max(w, n.size());
  std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(w), "");
  out += buf;
  for (std::size_t c = 0; c < m.names.size(); ++c) {
    std::snprintf(buf, sizeof buf, " %7zu", c);
    out += buf;
  }
  out += "\n";
  for (std::size_t r = 0; r < m.names.size(); ++r) {
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(w), m.names[r].c_str());
    out += buf;
    for (double v : m.sim[r]) {
      std::snprintf(buf, sizeof buf, " %7.2f", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- timing

struct PhaseSample {
  double occ = 0, pre = 0, post = 0, flow = 0, total = 0;
};

struct TimingReport {
  std::size_t clips = 0;
  std::size_t pre_runs = 0;
  std::size_t post_runs = 0;
  double occ = 0, pre = 0, post = 0, flow = 0, total = 0;  // mean seconds per clip
  bool exclude_flow = true;
};

inline TimingReport timing_report(const std::vector<PhaseSample>& samples, bool exclude_flow = true) {
  require(!samples.empty(), "timing_report: need at least one clip");
  TimingReport r;
  r.clips = samples.size();
  r.exclude_flow = exclude_flow;
  for (const auto& s : samples) {
    r.occ += s.occ;
    r.pre += s.pre;
    r.post += s.post;
    r.flow += s.flow;
    r.total += exclude_flow ? s.total - s.flow : s.total;
    r.pre_runs += s.pre > 0;
    r.post_runs += s.post > 0;
  }
  const double n = static_cast<double>(samples.size());
  r.occ /= n;
  r.pre /= n;
  r.post /= n;
  r.flow /= n;
  r.total /= n;
  return r;
}

inline std::string format_timing(const TimingReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "Time cost for different phases (mean seconds per clip, %zu clips%s)\n"
                "%-26s %-26s %-26s %-12s\n"
                "%-26.6f %-26.6f %-26.6f %-12.6f\n"
                "pre-event classifier ran on %zu clips; post-event classifier on %zu clips; optical flow %.6f s/clip\n",
                r.clips, r.exclude_flow ? ", optical flow excluded" : "", "Event-occ classification",
                "Pre-event classification", "Post-event classification", "Total", r.occ, r.pre, r.post, r.total,
                r.pre_runs, r.post_runs, r.flow);
  return buf;
}

inline std::string timing_csv(const TimingReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "phase,seconds\nocc,%.9f\npre,%.9f\npost,%.9f\nflow,%.9f\ntotal,%.9f\n", r.occ,
                r.pre, r.post, r.flow, r.total);
  return buf;
}

}  // namespace ongcmp::eval

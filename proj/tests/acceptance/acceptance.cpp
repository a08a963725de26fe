// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.
//   acceptance [--workdir DIR] [--only 1,4,...]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "ongcmp/cli.hpp"
#include "support/checks.hpp"

using namespace ongcmp;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

fs::path g_work;

// models and data shared between criteria that use the same runs
struct BenchRun {
  bool done = false;
  pipeline::EvaluationResult result;
  double seconds = 0;
};
BenchRun g_bench;

struct AblationRun {
  bool ready = false;
  Config cfg;
  data::Dataset ds;
  flow::SolverConfig solver;
  std::vector<pipeline::PreparedEvent> events;
  std::optional<pipeline::TrainedPipeline> trained;
};
AblationRun g_ablation;

Config load_conf(const std::string& name) { return Config::load(std::string(ONGCMP_CONFIG_DIR) + "/" + name); }

void save(const fs::path& p, const std::string& text) { cli::write_file(p, text); }

// ---------------------------------------------------------------- 1

Verdict gradients() {
  const auto t0 = Clock::now();
  double worst_op = 0, worst_seq = 0, worst_frame = 0;
  std::string worst_name;
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (const auto& r : checks::op_gradient_suite(seed, 1e-6)) {
      if (r.max_rel_error > worst_op) worst_op = r.max_rel_error, worst_name = r.op;
      checked += r.checked;
    }
    const auto s = checks::sequence_gradient_check(seed, 1e-4);
    worst_seq = std::max(worst_seq, s.max_rel_error);
    checked += s.checked;
    const auto f = checks::frame_gradient_check(seed, 1e-6);
    worst_frame = std::max(worst_frame, f.max_rel_error);
    checked += f.checked;
  }
  const double secs = seconds_since(t0);
  const double worst = std::max({worst_op, worst_seq, worst_frame});
  std::ostringstream d;
  d << "ops max rel err " << fmt("%.3g", worst_op) << " (" << worst_name << "), sequence model "
    << fmt("%.3g", worst_seq) << ", frame model " << fmt("%.3g", worst_frame) << ", " << checked
    << " entries, 10 seeds, " << fmt("%.1f", secs) << " s";
  return {worst <= 1e-5 && secs < 120, d.str()};
}

// ---------------------------------------------------------------- 2

Verdict fusion() {
  const auto t0 = Clock::now();
  const auto cases = checks::enumerate_fusion();
  std::set<std::size_t> reached;
  bool consistent = true;
  for (const auto& c : cases) {
    consistent = consistent && c.vf == checks::expected_vf(c.occ, c.pre, c.success);
    reached.insert(c.vf);
  }
  // distinct stub decisions: pre only matters for the merged class, outcome not for steal
  std::set<std::tuple<std::size_t, std::size_t, bool>> decisions;
  for (const auto& c : cases)
    decisions.insert({c.occ, c.occ == kMergedOccIndex ? c.pre : 0, c.occ == kNumOcc - 1 ? true : c.success});
  bool one_hot = true;
  for (const auto& c : cases) {
    std::vector<int> v(kNumFinal, 0);
    v[c.vf] = 1;
    try {
      (void)ontology::LabelVector(ontology::VectorKind::VF, v);
    } catch (const std::exception&) {
      one_hot = false;
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = consistent && one_hot && reached.size() == kNumFinal && decisions.size() == kNumFinal && secs < 1;
  return {ok, std::to_string(cases.size()) + " stub combinations, " + std::to_string(decisions.size()) +
                  " distinct decisions -> " + std::to_string(reached.size()) + " of " + std::to_string(kNumFinal) +
                  " VF vectors, " + fmt("%.4f", secs) + " s"};
}

// ---------------------------------------------------------------- 3

Verdict flow_checks() {
  const auto t0 = Clock::now();
  flow::SolverConfig cfg;
  double epe = 0, worst = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto c = checks::shift_case(1000 + s);
    const double e = checks::endpoint_error(flow::compute_flow(c.a, c.b, cfg), c.dx, c.dy, 0);
    epe += e / 20;
    worst = std::max(worst, e);
  }

  bool zero = true;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto c = checks::shift_case(2000 + s);
    const auto f = flow::compute_flow(c.a, c.a, cfg);
    for (std::size_t i = 0; i < f.u.size(); ++i) zero = zero && f.u[i] == 0.0f && f.v[i] == 0.0f;
  }

  bool monotone = true;
  std::size_t traces = 0;
  auto tracked = cfg;
  tracked.track_energy = true;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto c = checks::shift_case(3000 + s);
    flow::SolverDiagnostics diag;
    (void)flow::compute_flow(c.a, c.b, tracked, &diag);
    for (const auto& t : diag.traces) {
      ++traces;
      monotone = monotone && t.energy.size() == static_cast<std::size_t>(tracked.iterations) + 1;
      for (std::size_t k = 1; k < t.energy.size(); ++k) monotone = monotone && t.energy[k] <= t.energy[k - 1];
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "mean EPE " << fmt("%.4f", epe) << " px (worst case " << fmt("%.4f", worst) << "), identical frames "
    << (zero ? "exactly zero" : "NONZERO") << ", energy " << (monotone ? "non-increasing" : "INCREASED") << " over "
    << traces << " traces, " << fmt("%.1f", secs) << " s";
  return {epe <= 0.5 && zero && monotone && traces > 0 && secs < 60, d.str()};
}

// ---------------------------------------------------------------- 4

void run_benchmark() {
  if (g_bench.done) return;
  const auto t0 = Clock::now();
  const Config cfg = load_conf("benchmark.conf");
  const auto sc = data::SyntheticConfig::from(cfg);
  const auto ds = data::gen_synthetic(sc);
  const auto solver = flow::SolverConfig::from(cfg);
  const auto events =
      pipeline::prepare_events(ds, solver, pipeline::stage_model_config(cfg, train::Stage::Occ5).backbone);
  const auto tp = pipeline::train_pipeline(events, cfg, cli::config_seed(cfg));
  g_bench.result = pipeline::evaluate(ds, data::Split::Test, ontology::bind_models(tp.occ, tp.pre, tp.post), solver);
  g_bench.seconds = seconds_since(t0);
  g_bench.done = true;

  const auto dir = g_work / "benchmark";
  const auto names = pipeline::final_class_names();
  save(dir / "report.txt", eval::format_confusion(g_bench.result.confusion, "Final 11-class confusion (test split)") +
                               "\n" + eval::format_ap(g_bench.result.ap, names) + "\n" +
                               eval::format_timing(g_bench.result.timing));
  save(dir / "confusion.csv", eval::confusion_csv(g_bench.result.confusion));
  std::string pred;
  for (const auto& r : g_bench.result.records) pred += ontology::format_record(r) + "\n";
  save(dir / "predictions.txt", pred);
}

Verdict benchmark() {
  run_benchmark();
  const double acc = g_bench.result.confusion.overall_accuracy();
  const double map = g_bench.result.ap.map;
  std::ostringstream d;
  d << "accuracy " << fmt("%.2f", 100 * acc) << "% (>= 85), mAP " << fmt("%.4f", map) << " (>= 0.90), "
    << g_bench.result.records.size() << " test clips, train+eval " << fmt("%.0f", g_bench.seconds) << " s (<= 1200)";
  return {acc >= 0.85 && map >= 0.90 && g_bench.seconds <= 1200, d.str()};
}

// ---------------------------------------------------------------- 5-7

void prepare_ablation() {
  if (g_ablation.ready) return;
  g_ablation.cfg = load_conf("ablation.conf");
  g_ablation.ds = data::gen_synthetic(data::SyntheticConfig::from(g_ablation.cfg));
  g_ablation.solver = flow::SolverConfig::from(g_ablation.cfg);
  g_ablation.events = pipeline::prepare_events(
      g_ablation.ds, g_ablation.solver,
      pipeline::stage_model_config(g_ablation.cfg, train::Stage::Occ5).backbone, {true, true, true});
  g_ablation.ready = true;
}

const pipeline::TrainedPipeline& ablation_models() {
  prepare_ablation();
  if (!g_ablation.trained)
    g_ablation.trained = pipeline::train_pipeline(g_ablation.events, g_ablation.cfg, cli::config_seed(g_ablation.cfg));
  return *g_ablation.trained;
}

Verdict gcmp_ablation() {
  const auto t0 = Clock::now();
  prepare_ablation();
  const auto r = experiments::ablate_input(g_ablation.events, g_ablation.cfg, {1, 2, 3});
  save(g_work / "ablation" / "input.txt", experiments::format_input_ablation(r));
  const double gap = 100 * (r.mean_gcmp - r.mean_raw);
  std::ostringstream d;
  d << "motion-image input " << fmt("%.2f", 100 * r.mean_gcmp) << "% vs raw frames " << fmt("%.2f", 100 * r.mean_raw)
    << "% over seeds 1,2,3, gap " << fmt("%.2f", gap) << " points (>= 10), " << fmt("%.0f", seconds_since(t0)) << " s";
  return {gap >= 10, d.str()};
}

Verdict ontology_ablation() {
  const auto t0 = Clock::now();
  const auto& tp = ablation_models();
  const auto seed = cli::config_seed(g_ablation.cfg);
  const auto r = experiments::ablate_ontology(g_ablation.events, g_ablation.cfg, tp.occ, tp.pre, seed);
  save(g_work / "ablation" / "ontology.txt", experiments::format_ontology_ablation(r));
  const double gap = 100 * (r.cascade_two_point - r.flat_two_point);
  std::ostringstream d;
  d << "Layup+OtherTwoPoint average: cascade " << fmt("%.2f", 100 * r.cascade_two_point) << "% vs flat "
    << fmt("%.2f", 100 * r.flat_two_point) << "%, gap " << fmt("%.2f", gap) << " points (>= 5), "
    << fmt("%.0f", seconds_since(t0)) << " s";
  return {gap >= 5, d.str()};
}

Verdict correlation() {
  const auto t0 = Clock::now();
  const auto& tp = ablation_models();
  const auto s = experiments::correlation_study(g_ablation.events, tp.occ, tp.pre, tp.post, data::Split::Test,
                                                g_ablation.solver, &g_ablation.ds);
  save(g_work / "ablation" / "correlation.txt",
       eval::format_correlation(s.gcmp_svf, "GCMP_DF_SVF") + "\n" + eval::format_correlation(s.rgb_vf_sf, "RGB_DF_VF") +
           "\n" + eval::format_correlation(s.gcmp_svf_sf, "GCMP_DF_SVF post segment"));
  const bool base = experiments::intra_dominates(s.gcmp_svf);
  const bool sf = experiments::intra_dominates(s.rgb_vf_sf);
  double margin = 1e9;
  for (std::size_t c = 0; c < s.gcmp_svf.names.size(); ++c)
    margin = std::min(margin, s.gcmp_svf.intra(c) - s.gcmp_svf.max_inter(c));
  std::ostringstream d;
  d << "GCMP_DF_SVF intra > inter for " << (base ? "every class" : "NOT every class") << " (tightest margin "
    << fmt("%.2f", margin) << "), RGB_DF_VF S/F intra " << fmt("%.2f", s.rgb_vf_sf.intra(0)) << "/"
    << fmt("%.2f", s.rgb_vf_sf.intra(1)) << " vs inter " << fmt("%.2f", s.rgb_vf_sf.max_inter(0))
    << ", GCMP post S/F separated: " << (s.gcmp_svf_sf.names.empty() ? "n/a"
                                         : experiments::intra_dominates(s.gcmp_svf_sf) ? "yes"
                                                                                        : "no")
    << " (not required), " << fmt("%.0f", seconds_since(t0)) << " s";
  return {base && sf, d.str()};
}

// ---------------------------------------------------------------- 8

Verdict metric_oracles() {
  Rng rng(2024);
  double worst = 0;
  std::size_t ap_checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t classes = 2 + rng.index(10);
    const auto clips = checks::random_scored(rng, 5 + rng.index(60), classes);
    const auto r = eval::mean_average_precision(clips, classes);
    worst = std::max(worst, std::abs(r.map - checks::brute_force_map(clips, classes)));
    for (std::size_t c = 0; c < classes; ++c) {
      const double oracle = checks::brute_force_ap(clips, c);
      if (oracle < 0) {
        if (r.per_class[c]) worst = 1;
      } else {
        worst = std::max(worst, std::abs(*r.per_class[c] - oracle));
        ++ap_checked;
      }
    }
  }
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t classes = 2 + rng.index(10);
    std::vector<eval::LabelPair> pairs;
    const std::size_t n = 1 + rng.index(200);
    for (std::size_t i = 0; i < n; ++i) pairs.push_back({rng.index(classes), rng.index(classes)});
    std::vector<std::string> names(classes, "c");
    if (eval::accuracy_report(pairs, names).counts != checks::tally(pairs, classes)) ++mismatches;
  }
  std::ostringstream d;
  d << "mAP max abs diff " << fmt("%.3g", worst) << " over 100 instances (" << ap_checked
    << " class APs), confusion mismatches " << mismatches << " of 100";
  return {worst <= 1e-12 && mismatches == 0, d.str()};
}

// ---------------------------------------------------------------- 9

int cli_run(const fs::path& ws, const std::string& args) {
  const std::string tiny =
      " --set backbone.input_size=16 --set backbone.widths=4,4,4 --set backbone.feature_dim=16"
      " --set lstm.hidden_dim=8 --set flow.iterations=10 --set train.epochs=2 --set train.batch=4";
  const std::string cmd = "\"" + std::string(ONGCMP_CLI_PATH) + "\" --workspace \"" + ws.string() + "\" --seed 5" +
                          tiny + " " + args + " > \"" + (ws / "stdout.log").string() + "\" 2>&1";
  return std::system(cmd.c_str());
}

Verdict determinism() {
  const auto t0 = Clock::now();
  const std::vector<std::string> commands = {
      "gen --per-class 4 --test-per-class 2 --width 32 --height 32 --frames 36 --out data",
      "train --stage occ5 --data data --out ck/occ5.ckpt",
      "train --stage pre2 --data data --out ck/pre2.ckpt",
      "train --stage postsf --data data --out ck/postsf.ckpt",
      "predict --data data --ckpt-occ ck/occ5.ckpt --ckpt-pre ck/pre2.ckpt --ckpt-post ck/postsf.ckpt --out pred.txt",
      "eval --pred pred.txt --truth data/manifest.txt --out report",
      "flow --in data/clips/layup_0000 --out flow --dump-flo",
      "bench --data data --ckpt-occ ck/occ5.ckpt --ckpt-pre ck/pre2.ckpt --ckpt-post ck/postsf.ckpt --out bench"};
  std::array<std::map<std::string, std::string>, 2> trees;
  for (int k = 0; k < 2; ++k) {
    const auto ws = g_work / "determinism" / (k == 0 ? "a" : "b");
    fs::remove_all(ws);
    fs::create_directories(ws);
    for (const auto& c : commands)
      if (cli_run(ws, c) != 0) return {false, "command failed: ongcmp " + c + " (see " + (ws / "stdout.log").string() + ")"};
    fs::remove(ws / "stdout.log");
    trees[static_cast<std::size_t>(k)] = checks::artifact_tree(ws);
  }
  std::size_t ckpts = 0, differing = 0;
  for (const auto& [path, text] : trees[0]) {
    if (path.size() > 5 && path.compare(path.size() - 5, 5, ".ckpt") == 0) ++ckpts;
    const auto it = trees[1].find(path);
    if (it == trees[1].end() || it->second != text) ++differing;
  }
  const bool ok = trees[0].size() == trees[1].size() && differing == 0 && ckpts == 3;
  std::ostringstream d;
  d << commands.size() << " commands run twice, " << trees[0].size() << " artifacts (" << ckpts << " checkpoints), "
    << differing << " differ, " << fmt("%.0f", seconds_since(t0)) << " s";
  return {ok, d.str()};
}

// ---------------------------------------------------------------- 10

Verdict timing() {
  run_benchmark();
  const auto text = eval::format_timing(g_bench.result.timing);
  std::cout << "\n" << text << "\n";
  save(g_work / "benchmark" / "timing.csv", eval::timing_csv(g_bench.result.timing));
  const bool ok = text.find("Time cost for different phases") != std::string::npos && g_bench.result.timing.clips > 0;
  return {ok, "per-phase means over " + std::to_string(g_bench.result.timing.clips) + " test clips (report only)"};
}

}  // namespace

int main(int argc, char** argv) {
  g_work = fs::current_path() / "acceptance_work";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--workdir" && i + 1 < argc) {
      g_work = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string t; std::getline(ss, t, ',');) only.insert(std::stoi(t));
    } else {
      std::cerr << "usage: acceptance [--workdir DIR] [--only 1,2,...]\n";
      return 2;
    }
  }
  fs::create_directories(g_work);
  g_work = fs::absolute(g_work);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"gradient checks", gradients},
      {"fusion oracle", fusion},
      {"flow correctness", flow_checks},
      {"end-to-end benchmark", benchmark},
      {"motion-image input ablation", gcmp_ablation},
      {"ontology ablation", ontology_ablation},
      {"feature correlation", correlation},
      {"metric oracles", metric_oracles},
      {"determinism", determinism},
      {"timing report", timing},
  };

  int failed = 0, ran = 0;
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(n)) continue;
    Verdict o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    ++ran;
    if (!o.pass) ++failed;
    const std::string line =
        std::string(o.pass ? "[PASS] " : "[FAIL] ") + std::to_string(n) + " " + criteria[i].first + ": " + o.detail;
    std::cout << line << std::endl;
    lines.push_back(line);
  }
  std::cout << "\n" << ran - failed << "/" << ran << " criteria passed\n";
  std::string summary;
  for (const auto& l : lines) summary += l + "\n";
  save(g_work / "summary.txt", summary);
  return failed == 0 ? 0 : 1;
}

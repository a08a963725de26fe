// Command-line front end: gen, flow, train, predict, eval, ablate, bench.
//
// Relative paths resolve against the workspace (--workspace or the
// ONGCMP_WORKSPACE environment variable, default: current directory). Every
// command writes "<output>.manifest.txt" listing its configuration, inputs
// and produced files. Exit codes: 0 ok, 2 invalid input, 3 I/O failure,
// 4 numerical failure.
#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ongcmp.hpp"

namespace ongcmp::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- helpers

inline std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void ensure_parent(const fs::path& p) {
  if (!p.has_parent_path()) return;
  std::error_code ec;
  fs::create_directories(p.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + p.parent_path().string());
}

inline void write_file(const fs::path& p, const std::string& text) {
  ensure_parent(p);
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot write " + p.string());
  f << text;
  if (!f) throw IoError("write failed: " + p.string());
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Content hash of a file, or of every file below a directory (sorted by
// relative path, names included).
inline std::uint64_t path_fingerprint(const fs::path& p) {
  if (fs::is_regular_file(p)) return fnv1a64(read_file(p));
  if (!fs::is_directory(p)) throw IoError("no such file or directory: " + p.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(p))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::uint64_t h = fnv1a64("");
  for (const auto& f : files) {
    h = fnv1a64(fs::relative(f, p).generic_string(), h);
    h = fnv1a64(read_file(f), h);
  }
  return h;
}

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Record of one command invocation. Only the started/finished lines depend
// on the clock.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  Config config;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, fingerprint
  std::vector<std::string> checkpoints;
  std::vector<std::string> outputs;
  std::string started = utc_now();

  fs::path root;  // paths below it are recorded relative to it

  RunManifest(std::string cmd, std::uint64_t s, Config c, fs::path workspace = {})
      : command(std::move(cmd)), seed(s), config(std::move(c)), root(std::move(workspace)) {}

  std::string show(const fs::path& p) const {
    if (root.empty()) return p.generic_string();
    const auto rel = p.lexically_relative(root);
    if (rel.empty() || *rel.begin() == "..") return p.generic_string();
    return rel.generic_string();
  }

  void input(const fs::path& p) { inputs.emplace_back(show(p), hex64(path_fingerprint(p))); }
  void output(const fs::path& p) { outputs.push_back(show(p)); }
  void checkpoint(const fs::path& p) { checkpoints.push_back(show(p)); }

  std::string text(const std::string& finished) const {
    std::string out = "command " + command + "\nseed " + std::to_string(seed) + "\n";
    for (const auto& [p, h] : inputs) out += "input " + p + " " + h + "\n";
    for (const auto& c : checkpoints) out += "checkpoint " + c + "\n";
    for (const auto& o : outputs) out += "output " + o + "\n";
    std::istringstream cfg(config.dump());
    for (std::string line; std::getline(cfg, line);) out += "config " + line + "\n";
    out += "started " + started + "\nfinished " + finished + "\n";
    return out;
  }

  void write(const fs::path& anchor) const {
    fs::path p = anchor;
    p += ".manifest.txt";
    write_file(p, text(utc_now()));
  }
};

// Options shared by all subcommands.
struct Common {
  std::string workspace;
  std::string config_file;
  std::vector<std::string> sets;
  long long seed = -1;

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    if (path.is_absolute() || workspace.empty()) return path;
    return fs::path(workspace) / path;
  }

  void apply_overrides(Config& c) const {
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw ValidationError("--set expects key=value, got '" + kv + "'");
      c.set(detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
    }
    if (seed >= 0) c.set("seed", std::to_string(seed));
  }

  Config config() const {
    Config c = config_file.empty() ? Config{} : Config::load(resolve(config_file).string());
    apply_overrides(c);
    return c;
  }
};

inline std::uint64_t config_seed(const Config& c) {
  const long long s = c.get("seed", 1LL);
  require(s >= 0, "seed must be non-negative");
  return static_cast<std::uint64_t>(s);
}

inline std::vector<data::Split> parse_splits(const std::string& s) {
  if (s == "all") return {data::Split::Train, data::Split::Test};
  return {data::parse_split(s)};
}

// ---------------------------------------------------------------- commands

struct GenArgs {
  int classes = 6;
  int per_class = 60;
  int test_per_class = -1;
  int width = 64, height = 64, frames = 60;
  std::string out;
};

inline int cmd_gen(const Common& co, const GenArgs& a) {
  Config cfg = co.config();
  require(a.per_class >= 1, "--per-class must be >= 1");
  const int test = a.test_per_class >= 0 ? a.test_per_class : a.per_class / 6;
  require(test <= a.per_class, "--test-per-class exceeds --per-class");
  cfg.set("gen.classes", std::to_string(a.classes));
  cfg.set("gen.train_per_class", std::to_string(a.per_class - test));
  cfg.set("gen.test_per_class", std::to_string(test));
  cfg.set("gen.width", std::to_string(a.width));
  cfg.set("gen.height", std::to_string(a.height));
  cfg.set("gen.frames", std::to_string(a.frames));
  const auto sc = data::SyntheticConfig::from(cfg);
  const fs::path out = co.resolve(a.out);
  RunManifest rm{"gen", sc.seed, cfg, co.workspace};
  const auto ds = data::gen_synthetic(sc);
  data::save_dataset(out, ds);
  rm.output(out);
  rm.write(out);
  std::cout << "wrote " << ds.sources.size() << " clips to " << out.string() << "\n";
  return 0;
}

struct FlowArgs {
  std::string in, out;
  bool dump_flo = false;
};

inline int cmd_flow(const Common& co, const FlowArgs& a) {
  const Config cfg = co.config();
  const auto solver = flow::SolverConfig::from(cfg);
  const fs::path in = co.resolve(a.in), out = co.resolve(a.out);
  RunManifest rm{"flow", config_seed(cfg), cfg, co.workspace};
  rm.input(in);
  const auto clip = data::load_clip(in);
  const auto flows = flow::compute_flows(clip, solver);
  const auto images = flow::colorize_sequence(flows, solver.normalization);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string());
  for (std::size_t t = 0; t < images.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "%04zu.gcmp.ppm", t);
    write_ppm((out / name).string(), images[t]);
    if (a.dump_flo) {
      std::snprintf(name, sizeof name, "%04zu.flo", t);
      flow::write_flo((out / name).string(), flows[t]);
    }
  }
  rm.output(out);
  rm.write(out);
  std::cout << "wrote " << images.size() << " GCMP images to " << out.string() << "\n";
  return 0;
}

struct TrainArgs {
  std::string stage, data, hyper, out;
  bool raw = false;
};

inline int cmd_train(const Common& co, const TrainArgs& a) {
  Config cfg = co.config();
  if (!a.hyper.empty()) {
    for (const auto& [k, v] : Config::load(co.resolve(a.hyper).string()).values()) cfg.set(k, v);
    co.apply_overrides(cfg);  // --set and --seed still win over the hyper file
  }
  const auto stage = train::parse_stage(a.stage);
  require(!a.raw || stage == train::Stage::Occ5 || stage == train::Stage::Flat6,
          "--raw applies to occ5 and flat6 only");
  const std::uint64_t seed = config_seed(cfg);
  const fs::path data_dir = co.resolve(a.data), out = co.resolve(a.out);
  RunManifest rm{"train --stage " + a.stage + (a.raw ? " --raw" : ""), seed, cfg, co.workspace};
  rm.input(data_dir);

  const auto ds = data::load_dataset(data_dir);
  const auto solver = flow::SolverConfig::from(cfg);
  const auto mc = pipeline::stage_model_config(cfg, stage, a.raw);
  const auto hyper = pipeline::stage_hyper(cfg, stage);
  pipeline::PrepareOptions opt;
  opt.gcmp = stage != train::Stage::PostSf && !a.raw;
  opt.post = stage == train::Stage::PostSf;
  opt.raw_occ = a.raw;
  std::vector<pipeline::PreparedEvent> events;
  for (std::size_t i = 0; i < ds.sources.size(); ++i) {
    const auto& r = ds.manifest.records[i];
    if (r.split != data::Split::Train || train::stage_label(stage, r.label) < 0) continue;
    events.push_back(pipeline::prepare_event(r, ds.sources[i], solver, mc.backbone, opt));
  }
  require(!events.empty(), "no training events for stage " + a.stage + " in " + data_dir.string());

  Checkpoint ck;
  train::TrainReport rep;
  std::size_t examples = 0;
  if (stage == train::Stage::PostSf) {
    auto m = train::make_frame_model(mc, seed);
    const auto ex = pipeline::frame_examples(events, data::Split::Train);
    examples = ex.size();
    rep = train::train_frames(m, ex, hyper, seed);
    ck = to_checkpoint(m);
  } else {
    auto m = train::make_sequence_model(mc, seed);
    const auto ex = pipeline::sequence_examples(events, stage, data::Split::Train, a.raw);
    examples = ex.size();
    rep = train::train_sequence(m, ex, hyper, seed);
    ck = to_checkpoint(m);
  }
  ck.header.emplace_back("stage", std::string(train::stage_name(stage)));
  ensure_parent(out);
  save_checkpoint(out.string(), ck);

  std::string meta = "stage " + std::string(train::stage_name(stage)) + "\nlabels";
  for (const auto& n : train::stage_label_names(stage)) meta += " " + n;
  meta += "\ninput " + std::string(models::input_kind_name(mc.input)) + "\nhyper " + hyper.describe() +
          "\nseed " + std::to_string(seed) + "\ndataset " + hex64(pipeline::fingerprint(ds)) + "\nexamples " +
          std::to_string(examples) + "\niterations " + std::to_string(rep.iterations) + "\n";
  fs::path meta_path = out, loss_path = out;
  meta_path += ".meta";
  loss_path += ".loss.csv";
  write_file(meta_path, meta);
  write_file(loss_path, train::loss_curve_csv(rep));
  rm.checkpoint(out);
  for (const auto& o : {out, meta_path, loss_path}) rm.output(o);
  rm.write(out);
  std::cout << "trained " << a.stage << " on " << examples << " examples (" << rep.iterations
            << " iterations); wrote " << out.string() << "\n";
  return 0;
}

struct PredictArgs {
  std::string data, ckpt_occ, ckpt_pre, ckpt_post, out, split = "test";
};

struct LoadedModels {
  models::SequenceClassifier<float> occ, pre;
  models::FrameClassifier<float> post;
};

inline LoadedModels load_models(const Common& co, const PredictArgs& a, RunManifest& rm) {
  LoadedModels m;
  const auto occ = co.resolve(a.ckpt_occ), pre = co.resolve(a.ckpt_pre), post = co.resolve(a.ckpt_post);
  m.occ = sequence_from_checkpoint(load_checkpoint(occ.string()));
  m.pre = sequence_from_checkpoint(load_checkpoint(pre.string()));
  m.post = frame_from_checkpoint(load_checkpoint(post.string()));
  require(m.occ.classes() == kNumOcc && m.occ.config().input == models::InputKind::Gcmp,
          "--ckpt-occ must be a five-class GCMP sequence model");
  require(m.pre.classes() == 2 && m.pre.config().input == models::InputKind::Gcmp,
          "--ckpt-pre must be a two-class GCMP sequence model");
  for (const auto& p : {occ, pre, post}) {
    rm.input(p);
    rm.checkpoint(p);
  }
  return m;
}

struct Predictions {
  std::vector<ontology::PredictionRecord> records;
  std::vector<EventLabel> truth;
  std::vector<eval::PhaseSample> samples;
};

inline Predictions run_predictions(const data::Dataset& ds, const std::vector<data::Split>& splits,
                                   const ontology::StageModels& sm, const flow::SolverConfig& solver) {
  Predictions p;
  for (std::size_t i = 0; i < ds.sources.size(); ++i) {
    const auto& r = ds.manifest.records[i];
    if (std::find(splits.begin(), splits.end(), r.split) == splits.end()) continue;
    const auto ev = ontology::predict_event(data::segment_record(r, ds.sources[i]), sm, solver);
    p.records.push_back(ontology::make_record(r.source_id, ev));
    p.truth.push_back(r.label);
    p.samples.push_back({ev.times.occ, ev.times.pre, ev.times.post, ev.times.flow, ev.times.total});
  }
  require(!p.records.empty(), "no clips in the requested split");
  return p;
}

inline int cmd_predict(const Common& co, const PredictArgs& a) {
  const Config cfg = co.config();
  const auto solver = flow::SolverConfig::from(cfg);
  const fs::path data_dir = co.resolve(a.data), out = co.resolve(a.out);
  RunManifest rm{"predict --split " + a.split, config_seed(cfg), cfg, co.workspace};
  rm.input(data_dir);
  const auto models = load_models(co, a, rm);
  const auto ds = data::load_dataset(data_dir);
  const auto p = run_predictions(ds, parse_splits(a.split), ontology::bind_models(models.occ, models.pre, models.post),
                                 solver);
  std::string text = "# id vf_index label g5 g2 votes(S:F) p_success\n";
  for (const auto& r : p.records) text += ontology::format_record(r) + "\n";
  write_file(out, text);
  fs::path timing = out;
  timing += ".timing.txt";
  write_file(timing, eval::format_timing(eval::timing_report(p.samples)));
  rm.output(out);
  rm.output(timing);
  rm.write(out);
  std::cout << "wrote " << p.records.size() << " predictions to " << out.string() << "\n";
  return 0;
}

struct EvalArgs {
  std::string pred, truth, out;
};

inline std::vector<ontology::PredictionRecord> load_predictions(const fs::path& p) {
  std::vector<ontology::PredictionRecord> out;
  std::istringstream in(read_file(p));
  for (std::string line; std::getline(in, line);) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    out.push_back(ontology::parse_record(line));
  }
  require(!out.empty(), "prediction file " + p.string() + " has no records");
  return out;
}

inline std::string ap_csv(const eval::ApReport& r, const std::vector<std::string>& names) {
  std::string out = "class,ap\n";
  for (std::size_t c = 0; c < names.size(); ++c) {
    char buf[32] = "";
    if (r.per_class[c]) std::snprintf(buf, sizeof buf, "%.12g", *r.per_class[c]);
    out += names[c] + "," + buf + "\n";
  }
  char buf[48];
  std::snprintf(buf, sizeof buf, "mAP,%.12g\n", r.map);
  return out + buf;
}

inline int cmd_eval(const Common& co, const EvalArgs& a) {
  const Config cfg = co.config();
  const fs::path pred = co.resolve(a.pred), truth = co.resolve(a.truth), out = co.resolve(a.out);
  RunManifest rm{"eval", config_seed(cfg), cfg, co.workspace};
  rm.input(pred);
  rm.input(truth);
  const auto records = load_predictions(pred);
  const auto manifest = data::load_manifest(truth);
  std::map<std::string, EventLabel> by_id;
  for (const auto& r : manifest.records) by_id[r.source_id] = r.label;
  std::vector<EventLabel> labels;
  for (const auto& r : records) {
    const auto it = by_id.find(r.id);
    if (it == by_id.end()) throw ValidationError("prediction for unknown clip '" + r.id + "'");
    labels.push_back(it->second);
  }
  const auto res = pipeline::score_records(records, labels);
  const auto names = pipeline::final_class_names();
  const std::string report = eval::format_confusion(res.confusion, "Eleven-class confusion matrix (row: truth)") +
                             "\n" + eval::format_ap(res.ap, names);
  write_file(out / "report.txt", report);
  write_file(out / "confusion.csv", eval::confusion_csv(res.confusion));
  write_file(out / "ap.csv", ap_csv(res.ap, names));
  eval::write_confusion_pgm((out / "confusion.pgm").string(), res.confusion);
  for (const char* f : {"report.txt", "confusion.csv", "ap.csv", "confusion.pgm"}) rm.output(out / f);
  rm.write(out);
  std::cout << report;
  return 0;
}

struct AblateArgs {
  std::string mode, data, out;
  std::vector<int> seeds;
};

inline int cmd_ablate(const Common& co, const AblateArgs& a) {
  const Config cfg = co.config();
  require(a.mode == "gcmp" || a.mode == "ontology", "--mode must be gcmp or ontology");
  const std::uint64_t seed = config_seed(cfg);
  const fs::path data_dir = co.resolve(a.data), out = co.resolve(a.out);
  RunManifest rm{"ablate --mode " + a.mode, seed, cfg, co.workspace};
  rm.input(data_dir);
  const auto ds = data::load_dataset(data_dir);
  const auto solver = flow::SolverConfig::from(cfg);
  const auto bb = pipeline::stage_model_config(cfg, train::Stage::Occ5).backbone;
  std::string report;
  if (a.mode == "gcmp") {
    std::vector<std::uint64_t> seeds;
    for (int s : a.seeds.empty() ? std::vector<int>{1, 2, 3} : a.seeds) {
      require(s >= 0, "seeds must be non-negative");
      seeds.push_back(static_cast<std::uint64_t>(s));
    }
    const auto events = pipeline::prepare_events(ds, solver, bb, {true, false, true});
    const auto r = experiments::ablate_input(events, cfg, seeds);
    report = experiments::format_input_ablation(r);
    std::string csv = "seed,raw_accuracy,gcmp_accuracy\n";
    for (std::size_t i = 0; i < seeds.size(); ++i)
      csv += std::to_string(seeds[i]) + "," + std::to_string(r.raw_accuracy[i]) + "," +
             std::to_string(r.gcmp_accuracy[i]) + "\n";
    write_file(out / "ablation.csv", csv);
  } else {
    const auto events = pipeline::prepare_events(ds, solver, bb, {true, false, false});
    auto occ = train::make_sequence_model(pipeline::stage_model_config(cfg, train::Stage::Occ5), seed);
    train::train_sequence(occ, pipeline::sequence_examples(events, train::Stage::Occ5, data::Split::Train),
                          pipeline::stage_hyper(cfg, train::Stage::Occ5), seed);
    auto pre = train::make_sequence_model(pipeline::stage_model_config(cfg, train::Stage::Pre2), seed);
    train::train_sequence(pre, pipeline::sequence_examples(events, train::Stage::Pre2, data::Split::Train),
                          pipeline::stage_hyper(cfg, train::Stage::Pre2), seed);
    const auto r = experiments::ablate_ontology(events, cfg, occ, pre, seed);
    report = experiments::format_ontology_ablation(r);
    write_file(out / "flat.csv", eval::confusion_csv(r.flat));
    write_file(out / "cascade.csv", eval::confusion_csv(r.cascade));
  }
  write_file(out / "report.txt", report);
  rm.output(out);
  rm.write(out);
  std::cout << report;
  return 0;
}

struct BenchArgs {
  PredictArgs predict;
  bool include_flow = false;
};

inline int cmd_bench(const Common& co, const BenchArgs& a) {
  const Config cfg = co.config();
  const auto solver = flow::SolverConfig::from(cfg);
  const fs::path data_dir = co.resolve(a.predict.data), out = co.resolve(a.predict.out);
  RunManifest rm{"bench", config_seed(cfg), cfg, co.workspace};
  rm.input(data_dir);
  const auto models = load_models(co, a.predict, rm);
  const auto ds = data::load_dataset(data_dir);
  const auto p = run_predictions(ds, parse_splits(a.predict.split),
                                 ontology::bind_models(models.occ, models.pre, models.post), solver);
  const auto t = eval::timing_report(p.samples, !a.include_flow);
  write_file(out / "timing.txt", eval::format_timing(t));
  write_file(out / "timing.csv", eval::timing_csv(t));
  rm.output(out / "timing.txt");
  rm.output(out / "timing.csv");
  rm.write(out);
  std::cout << eval::format_timing(t);
  return 0;
}

// ---------------------------------------------------------------- entry point

inline int run(int argc, char** argv) {
  CLI::App app{"Basketball event recognition: data generation, motion images, training and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Common co;
  app.add_option("--workspace", co.workspace, "Root for relative paths")->envname("ONGCMP_WORKSPACE");
  app.add_option("--config", co.config_file, "key = value configuration file");
  app.add_option("--set", co.sets, "Override one configuration key (key=value); repeatable");
  app.add_option("--seed", co.seed, "Seed for every random stream");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic event dataset");
  g->add_option("--classes", gen.classes, "Number of base event classes (1-6)")->capture_default_str();
  g->add_option("--per-class", gen.per_class, "Clips per class (train + test)")->capture_default_str();
  g->add_option("--test-per-class", gen.test_per_class, "Test clips per class (default: per-class / 6)");
  g->add_option("--width", gen.width)->capture_default_str();
  g->add_option("--height", gen.height)->capture_default_str();
  g->add_option("--frames", gen.frames)->capture_default_str();
  g->add_option("--out", gen.out, "Dataset directory")->required();

  FlowArgs fl;
  auto* f = app.add_subcommand("flow", "Compute colourised optical flow (GCMP) images for one clip");
  f->add_option("--in", fl.in, "Clip directory")->required();
  f->add_option("--out", fl.out, "Output directory")->required();
  f->add_flag("--dump-flo", fl.dump_flo, "Also write raw .flo fields");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train one pipeline stage");
  t->add_option("--stage", tr.stage, "occ5 | pre2 | postsf | flat6")->required();
  t->add_option("--data", tr.data, "Dataset directory")->required();
  t->add_option("--hyper", tr.hyper, "Hyperparameter file (key = value)");
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_flag("--raw", tr.raw, "Feed raw occ frames instead of GCMP images (occ5, flat6)");

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Run the full pipeline on a dataset split");
  p->add_option("--data", pr.data)->required();
  p->add_option("--ckpt-occ", pr.ckpt_occ)->required();
  p->add_option("--ckpt-pre", pr.ckpt_pre)->required();
  p->add_option("--ckpt-post", pr.ckpt_post)->required();
  p->add_option("--out", pr.out, "Prediction records file")->required();
  p->add_option("--split", pr.split, "train | test | all")->capture_default_str();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score predictions: confusion matrix and mAP");
  e->add_option("--pred", ev.pred)->required();
  e->add_option("--truth", ev.truth, "Dataset manifest")->required();
  e->add_option("--out", ev.out, "Report directory")->required();

  AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "Input (gcmp) or ontology comparison");
  a->add_option("--mode", ab.mode, "gcmp | ontology")->required();
  a->add_option("--data", ab.data)->required();
  a->add_option("--out", ab.out, "Report directory")->required();
  a->add_option("--seeds", ab.seeds, "Training seeds for --mode gcmp")->delimiter(',');

  BenchArgs be;
  auto* b = app.add_subcommand("bench", "Per-phase timing report");
  b->add_option("--data", be.predict.data)->required();
  b->add_option("--ckpt-occ", be.predict.ckpt_occ)->required();
  b->add_option("--ckpt-pre", be.predict.ckpt_pre)->required();
  b->add_option("--ckpt-post", be.predict.ckpt_post)->required();
  b->add_option("--out", be.predict.out, "Report directory")->required();
  b->add_option("--split", be.predict.split)->capture_default_str();
  b->add_flag("--include-flow", be.include_flow, "Count optical flow time in the total");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return 2;
  }

  try {
    if (g->parsed()) return cmd_gen(co, gen);
    if (f->parsed()) return cmd_flow(co, fl);
    if (t->parsed()) return cmd_train(co, tr);
    if (p->parsed()) return cmd_predict(co, pr);
    if (e->parsed()) return cmd_eval(co, ev);
    if (a->parsed()) return cmd_ablate(co, ab);
    if (b->parsed()) return cmd_bench(co, be);
  } catch (const ValidationError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const IoError& ex) {
    std::cerr << "I/O error: " << ex.what() << "\n";
    return 3;
  } catch (const NumericError& ex) {
    std::cerr << "numerical error: " << ex.what() << "\n";
    return 4;
  }
  return 2;
}

}  // namespace ongcmp::cli

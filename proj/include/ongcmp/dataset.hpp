// Segment model (pre / occ / post), clip extension, 16-frame windowing, and
// on-disk clip and manifest formats.
#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "clip.hpp"
#include "config.hpp"
#include "error.hpp"
#include "labels.hpp"

namespace ongcmp::data {

inline constexpr std::size_t kPreFrames = 18;
inline constexpr std::size_t kPostFrames = 10;
inline constexpr std::size_t kWindow = 16;

struct SegmentedEvent {
  VideoClip pre;
  VideoClip occ;
  VideoClip post;
  EventLabel label;

  std::size_t total() const { return pre.size() + occ.size() + post.size(); }
};

enum class Split { Train, Test };

inline std::string_view split_name(Split s) { return s == Split::Train ? "train" : "test"; }

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw ValidationError("unknown split: " + std::string(s));
}

// One annotated event: an inclusive occ interval [start, end] in a source clip.
struct ManifestRecord {
  std::string source_id;
  long long start = 0;
  long long end = 0;
  EventLabel label;
  Split split = Split::Train;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct ClipManifest {
  std::vector<ManifestRecord> records;

  std::size_t count(Split s) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [s](const auto& r) { return r.split == s; }));
  }
  friend bool operator==(const ClipManifest&, const ClipManifest&) = default;
};

// ---------------------------------------------------------------- extension

// The extended interval [start - pre, end + post], possibly reaching outside
// the source. frame_indices() maps it onto source frames by clamping, which
// repeats the first or last frame where the source runs out.
struct ExtendedEvent {
  long long start = 0;
  long long end = 0;
  std::size_t pre_len = kPreFrames;
  std::size_t occ_len = 0;
  std::size_t post_len = kPostFrames;
  std::size_t source_len = 0;

  std::size_t length() const { return pre_len + occ_len + post_len; }

  std::vector<std::size_t> frame_indices() const {
    std::vector<std::size_t> idx;
    idx.reserve(length());
    const long long last = static_cast<long long>(source_len) - 1;
    for (long long i = start; i <= end; ++i) idx.push_back(static_cast<std::size_t>(std::clamp(i, 0LL, last)));
    return idx;
  }
};

inline void validate_record(const ManifestRecord& r, std::size_t source_len) {
  r.label.validate();
  require(r.start >= 0 && r.start < r.end, "record '" + r.source_id + "': need 0 <= start < end");
  require(r.end < static_cast<long long>(source_len),
          "record '" + r.source_id + "': interval exceeds source length " + std::to_string(source_len));
}

inline ExtendedEvent extend_event(const ManifestRecord& r, std::size_t source_len, std::size_t pre = kPreFrames,
                                  std::size_t post = kPostFrames) {
  validate_record(r, source_len);
  ExtendedEvent e;
  e.start = r.start - static_cast<long long>(pre);
  e.end = r.end + static_cast<long long>(post);
  e.pre_len = pre;
  e.post_len = post;
  e.occ_len = static_cast<std::size_t>(r.end - r.start + 1);
  e.source_len = source_len;
  return e;
}

inline VideoClip extract_extended(const VideoClip& source, const ExtendedEvent& e) {
  require(source.size() == e.source_len, "extract_extended: source length mismatch");
  VideoClip out{source.id, source.fps, {}};
  for (const auto i : e.frame_indices()) out.frames.push_back(source.frames[i]);
  return out;
}

// ---------------------------------------------------------------- segments

inline SegmentedEvent split_segments(const VideoClip& clip, EventLabel label, std::size_t pre_len = kPreFrames,
                                     std::size_t post_len = kPostFrames) {
  require(clip.size() > pre_len + post_len,
          "clip '" + clip.id + "' has " + std::to_string(clip.size()) + " frames; need more than " +
              std::to_string(pre_len + post_len));
  const std::size_t n = clip.size();
  return SegmentedEvent{clip.slice(0, pre_len), clip.slice(pre_len, n - post_len), clip.slice(n - post_len, n),
                        label};
}

// Half-open [begin, end) windows of `len` frames with stride `len`; a
// remainder is covered by one extra window over the last `len` frames.
inline std::vector<std::pair<std::size_t, std::size_t>> windows(std::size_t n, std::size_t len = kWindow) {
  require(len > 0, "window length must be positive");
  require(n >= len, "sequence of " + std::to_string(n) + " frames is shorter than the " + std::to_string(len) +
                        "-frame window");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t b = 0;
  for (; b + len <= n; b += len) out.emplace_back(b, b + len);
  if (b < n) out.emplace_back(n - len, n);
  return out;
}

inline std::vector<std::pair<std::size_t, std::size_t>> windows16(const VideoClip& clip) {
  return windows(clip.size(), kWindow);
}

// ---------------------------------------------------------------- clip I/O

namespace fs = std::filesystem;

inline std::string frame_filename(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04zu.ppm", i);
  return buf;
}

inline void save_clip(const fs::path& dir, const VideoClip& clip) {
  clip.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create clip directory " + dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < clip.size(); ++i) write_ppm((dir / frame_filename(i)).string(), clip.frames[i]);
  std::ofstream meta(dir / "meta.txt");
  if (!meta) throw IoError("cannot write clip metadata in " + dir.string());
  meta << "id = " << clip.id << "\nfps = " << clip.fps << "\nframes = " << clip.size() << "\n";
}

inline VideoClip load_clip(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("clip directory not found: " + dir.string());
  const auto meta = Config::load((dir / "meta.txt").string());
  VideoClip clip;
  clip.id = meta.get("id", dir.filename().string());
  clip.fps = meta.get("fps", 25.0);
  const long long n = meta.get("frames", -1LL);
  if (n > 0) {
    for (long long i = 0; i < n; ++i) clip.frames.push_back(read_ppm((dir / frame_filename(i)).string()));
  } else {
    for (std::size_t i = 0; fs::exists(dir / frame_filename(i)); ++i)
      clip.frames.push_back(read_ppm((dir / frame_filename(i)).string()));
  }
  try {
    clip.validate();
  } catch (const ValidationError& e) {
    throw IoError(std::string("malformed clip: ") + e.what());
  }
  return clip;
}

// ---------------------------------------------------------------- manifest I/O

// One record per line: id start end base outcome split. '#' starts a comment.
inline std::string format_manifest(const ClipManifest& m) {
  std::ostringstream out;
  out << "# id start end base outcome split\n";
  for (const auto& r : m.records)
    out << r.source_id << ' ' << r.start << ' ' << r.end << ' ' << base_name(r.label.base) << ' '
        << outcome_name(r.label.outcome) << ' ' << split_name(r.split) << '\n';
  return out.str();
}

inline ClipManifest parse_manifest(const std::string& text) {
  ClipManifest m;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> f;
    for (std::string tok; ls >> tok;) f.push_back(tok);
    if (f.empty()) continue;
    const std::string where = "manifest line " + std::to_string(lineno) + ": ";
    if (f.size() != 6) throw ValidationError(where + "expected 6 fields, got " + std::to_string(f.size()));
    ManifestRecord r;
    r.source_id = f[0];
    try {
      std::size_t p1 = 0, p2 = 0;
      r.start = std::stoll(f[1], &p1);
      r.end = std::stoll(f[2], &p2);
      if (p1 != f[1].size() || p2 != f[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError(where + "start/end must be integers");
    }
    try {
      r.label = {parse_base(f[3]), parse_outcome(f[4])};
      r.label.validate();
      r.split = parse_split(f[5]);
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
    if (r.start < 0 || r.start >= r.end) throw ValidationError(where + "need 0 <= start < end");
    m.records.push_back(std::move(r));
  }
  return m;
}

inline void save_manifest(const fs::path& path, const ClipManifest& m) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write manifest: " + path.string());
  f << format_manifest(m);
  if (!f) throw IoError("write failed: " + path.string());
}

inline ClipManifest load_manifest(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read manifest: " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_manifest(ss.str());
}

// A loaded dataset directory: DIR/manifest.txt plus DIR/clips/<id>/.
struct Dataset {
  ClipManifest manifest;
  std::vector<VideoClip> sources;  // parallel to manifest.records
};

inline fs::path clip_dir(const fs::path& root, const std::string& id) { return root / "clips" / id; }

inline void save_dataset(const fs::path& root, const Dataset& ds) {
  require(ds.sources.size() == ds.manifest.records.size(), "dataset: clip and record counts differ");
  for (const auto& c : ds.sources) save_clip(clip_dir(root, c.id), c);
  save_manifest(root / "manifest.txt", ds.manifest);
}

inline Dataset load_dataset(const fs::path& root) {
  Dataset ds;
  ds.manifest = load_manifest(root / "manifest.txt");
  for (const auto& r : ds.manifest.records) {
    ds.sources.push_back(load_clip(clip_dir(root, r.source_id)));
    validate_record(r, ds.sources.back().size());
  }
  return ds;
}

// Extends the record's interval and cuts the result into its three stages.
inline SegmentedEvent segment_record(const ManifestRecord& r, const VideoClip& source) {
  const auto ext = extend_event(r, source.size());
  return split_segments(extract_extended(source, ext), r.label, ext.pre_len, ext.post_len);
}

}  // namespace ongcmp::data

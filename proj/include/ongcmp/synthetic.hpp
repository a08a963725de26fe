// Seeded synthetic event clips.
//
// Each clip shows a textured court (the texture offset follows a "camera"
// pan) with two teams of round players and a ball. Event classes are motion
// archetypes: every class has its own background pan and collective player
// drift per stage. Layup and OtherTwoPoint draw their occ-stage motion from
// the same distribution and differ only in the pre stage. Success/Failure is
// carried only by where the ball and players sit during the post stage.
// Court and team colours are drawn per clip, so single raw frames carry no
// class information outside the post stage.
#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "config.hpp"
#include "dataset.hpp"
#include "rng.hpp"

namespace ongcmp::data {

struct SyntheticConfig {
  int classes = 6;  // first N base events in canonical order
  int train_per_class = 50;
  int test_per_class = 10;
  int width = 64;
  int height = 64;
  int frames = 60;
  double fps = 25.0;
  std::uint64_t seed = 1;

  // Keys: gen.classes, gen.train_per_class, gen.test_per_class, gen.width,
  // gen.height, gen.frames, gen.fps, and seed.
  static SyntheticConfig from(const Config& c) {
    SyntheticConfig s;
    s.classes = c.get("gen.classes", s.classes);
    s.train_per_class = c.get("gen.train_per_class", s.train_per_class);
    s.test_per_class = c.get("gen.test_per_class", s.test_per_class);
    s.width = c.get("gen.width", s.width);
    s.height = c.get("gen.height", s.height);
    s.frames = c.get("gen.frames", s.frames);
    s.fps = c.get("gen.fps", s.fps);
    s.seed = static_cast<std::uint64_t>(c.get("seed", static_cast<long long>(s.seed)));
    s.validate();
    return s;
  }

  void validate() const {
    require(classes >= 1 && classes <= static_cast<int>(kNumBase), "synthetic: classes must be in 1..6");
    require(train_per_class >= 0 && test_per_class >= 0 && train_per_class + test_per_class > 0,
            "synthetic: need at least one clip per class");
    require(width >= 32 && height >= 32, "synthetic: frames must be at least 32x32");
    require(frames >= static_cast<int>(kPreFrames + kPostFrames) + 2,
            "synthetic: need at least 30 frames per clip");
  }
};

namespace detail {

struct Vec2 {
  double x = 0, y = 0;
};

struct StageMotion {
  Vec2 background;  // image-space displacement of the court per frame
  Vec2 players;     // common drift of all players per frame
};

// Per-class archetypes: {pre, occ}. Post-stage motion is shared by all classes.
inline std::array<StageMotion, 2> class_motion(BaseEvent b) {
  switch (b) {
    case BaseEvent::ThreePoint: return {{{{-0.8, 0}, {0, 0.5}}, {{-1.5, 0}, {0, 1.0}}}};
    case BaseEvent::FreeThrow: return {{{{0, 0}, {0, 0}}, {{0, 0}, {0, 0}}}};
    case BaseEvent::Layup: return {{{{-1.06, -1.06}, {0.7, 0}}, {{1.5, 0}, {0, -1.0}}}};
    case BaseEvent::OtherTwoPoint: return {{{{1.06, 1.06}, {-0.7, 0}}, {{1.5, 0}, {0, -1.0}}}};
    case BaseEvent::SlamDunk: return {{{{0, 0.8}, {0.5, 0}}, {{0, 1.5}, {1.0, 0}}}};
    case BaseEvent::Steal: return {{{{0, -0.8}, {-0.8, 0}}, {{0, -1.5}, {-1.5, 0}}}};
  }
  return {};
}

// Rotates by up to +-0.2 rad and scales by 0.8..1.2, drawn once per clip stage.
inline Vec2 jitter(Vec2 v, Rng& rng) {
  const double a = rng.uniform(-0.2, 0.2), s = rng.uniform(0.8, 1.2);
  return {s * (v.x * std::cos(a) - v.y * std::sin(a)), s * (v.x * std::sin(a) + v.y * std::cos(a))};
}

struct Texture {
  std::array<double, 5> fx{}, fy{}, phase{}, amp{};
  double eval(double x, double y) const {
    double v = 0;
    for (std::size_t k = 0; k < fx.size(); ++k) v += amp[k] * std::sin(fx[k] * x + fy[k] * y + phase[k]);
    return v;
  }
};

struct Player {
  Vec2 pos;
  Vec2 own_velocity;
  int team = 0;
};

struct Scene {
  int width = 0, height = 0;
  Texture texture;
  std::array<double, 3> court{};
  std::array<std::array<double, 3>, 2> team_color{};
  Vec2 camera;
  std::vector<Player> players;
  Vec2 ball;
};

inline std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

inline double wrap(double v, double n) {
  v = std::fmod(v, n);
  return v < 0 ? v + n : v;
}

// Anti-aliased disc with toroidal wrap.
inline void draw_disc(std::vector<double>& rgb, int w, int h, Vec2 c, double r, const std::array<double, 3>& col) {
  const double cx = wrap(c.x, w), cy = wrap(c.y, h);
  const int ext = static_cast<int>(std::ceil(r + 1));
  for (int dy = -ext; dy <= ext; ++dy)
    for (int dx = -ext; dx <= ext; ++dx) {
      const int px = static_cast<int>(std::floor(cx)) + dx, py = static_cast<int>(std::floor(cy)) + dy;
      const double d = std::hypot(px - cx, py - cy);
      const double cover = std::clamp(r + 0.5 - d, 0.0, 1.0);
      if (cover <= 0) continue;
      const int x = ((px % w) + w) % w, y = ((py % h) + h) % h;
      double* p = &rgb[(static_cast<std::size_t>(y) * w + x) * 3];
      for (int k = 0; k < 3; ++k) p[k] = (1 - cover) * p[k] + cover * col[k];
    }
}

inline RgbImage render(const Scene& s) {
  const int w = s.width, h = s.height;
  std::vector<double> rgb(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double t = s.texture.eval(x - s.camera.x, y - s.camera.y);
      double* p = &rgb[(static_cast<std::size_t>(y) * w + x) * 3];
      for (int k = 0; k < 3; ++k) p[k] = s.court[k] * (1.0 + 0.5 * t);
    }
  // Basket: fixed in the frame.
  for (int y = 3; y < 6; ++y)
    for (int x = w / 2 - 5; x <= w / 2 + 5; ++x) {
      double* p = &rgb[(static_cast<std::size_t>(y) * w + x) * 3];
      p[0] = 240;
      p[1] = 240;
      p[2] = 240;
    }
  for (const auto& pl : s.players) draw_disc(rgb, w, h, pl.pos, 3.0, s.team_color[pl.team]);
  draw_disc(rgb, w, h, s.ball, 2.0, {255, 130, 0});
  RgbImage img(w, h);
  for (std::size_t i = 0; i < rgb.size(); ++i) img.bytes()[i] = to_byte(rgb[i]);
  return img;
}

inline std::array<double, 3> random_color(Rng& rng, double lo, double hi) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

// Post-stage layout. Success: ball at the rim, players gathered under it.
// Failure: ball loose in the lower court, players scattered. Steal: random.
inline void place_post(Scene& s, Outcome outcome, Rng& rng) {
  const double w = s.width, h = s.height;
  for (auto& p : s.players) {
    if (outcome == Outcome::Success)
      p.pos = {w / 2 + rng.normal() * w * 0.08, h * 0.3 + rng.normal() * h * 0.06};
    else
      p.pos = {rng.uniform(0, w), rng.uniform(h * 0.35, h)};
  }
  if (outcome == Outcome::Success)
    s.ball = {w / 2 + rng.uniform(-1, 1), 8 + rng.uniform(-1, 1)};
  else if (outcome == Outcome::Failure)
    s.ball = {rng.uniform(8, w - 8), rng.uniform(h * 0.65, h - 6)};
  else
    s.ball = {rng.uniform(0, w), rng.uniform(h * 0.2, h)};
}

inline VideoClip render_clip(const std::string& id, EventLabel label, const SyntheticConfig& cfg, Rng& rng) {
  Scene s;
  s.width = cfg.width;
  s.height = cfg.height;
  for (std::size_t k = 0; k < s.texture.fx.size(); ++k) {
    const double ang = rng.uniform(0, 2 * 3.14159265358979), fr = rng.uniform(0.1, 0.3);
    s.texture.fx[k] = fr * std::cos(ang);
    s.texture.fy[k] = fr * std::sin(ang);
    s.texture.phase[k] = rng.uniform(0, 2 * 3.14159265358979);
    s.texture.amp[k] = rng.uniform(0.15, 0.3);
  }
  s.court = random_color(rng, 50, 200);
  s.team_color = {random_color(rng, 0, 255), random_color(rng, 0, 255)};
  s.camera = {rng.uniform(0, 200), rng.uniform(0, 200)};
  for (int i = 0; i < 8; ++i)
    s.players.push_back({{rng.uniform(0, cfg.width), rng.uniform(0, cfg.height)},
                         {rng.normal() * 0.15, rng.normal() * 0.15},
                         i % 2});
  const auto motion = class_motion(label.base);
  const StageMotion pre{jitter(motion[0].background, rng), jitter(motion[0].players, rng)};
  const StageMotion occ{jitter(motion[1].background, rng), jitter(motion[1].players, rng)};
  const StageMotion post{{rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)}, {0, 0}};

  const std::size_t n = static_cast<std::size_t>(cfg.frames);
  const std::size_t post_begin = n - kPostFrames;
  VideoClip clip{id, cfg.fps, {}};
  clip.frames.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    if (t == post_begin) place_post(s, label.outcome, rng);
    clip.frames.push_back(render(s));
    const StageMotion& m = t < kPreFrames ? pre : (t < post_begin ? occ : post);
    s.camera.x += m.background.x;
    s.camera.y += m.background.y;
    const double own = t < post_begin ? 1.0 : 0.3;
    for (auto& p : s.players) {
      p.pos.x += m.players.x + own * p.own_velocity.x;
      p.pos.y += m.players.y + own * p.own_velocity.y;
    }
    if (t + 1 < post_begin) s.ball = {s.players[0].pos.x + 3, s.players[0].pos.y - 3};
  }
  return clip;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace detail

// Clips are ordered class-major; clip k of class c has global index
// c * (train + test) + k and is rendered from its own stream seeded by
// seed ^ index. Within a class, even indices succeed and odd ones fail
// (Steal is always NotApplicable); the first train_per_class are training clips.
inline Dataset gen_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  Dataset ds;
  const int per_class = cfg.train_per_class + cfg.test_per_class;
  for (int c = 0; c < cfg.classes; ++c) {
    const auto base = static_cast<BaseEvent>(c);
    for (int k = 0; k < per_class; ++k) {
      const std::uint64_t index = static_cast<std::uint64_t>(c) * per_class + k;
      Rng rng = Rng::stream(cfg.seed ^ index, "data");
      const EventLabel label{base, base == BaseEvent::Steal ? Outcome::NotApplicable
                                                            : (k % 2 == 0 ? Outcome::Success : Outcome::Failure)};
      char idbuf[64];
      std::snprintf(idbuf, sizeof idbuf, "%s_%04d", detail::lower(base_name(base)).c_str(), k);
      ds.sources.push_back(detail::render_clip(idbuf, label, cfg, rng));
      ds.manifest.records.push_back({idbuf, static_cast<long long>(kPreFrames),
                                     static_cast<long long>(cfg.frames - kPostFrames - 1), label,
                                     k < cfg.train_per_class ? Split::Train : Split::Test});
    }
  }
  return ds;
}

}  // namespace ongcmp::data

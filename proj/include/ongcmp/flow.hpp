// Dense optical flow (coarse-to-fine Horn-Schunck) and its colour-wheel
// rendering into 3-channel GCMP images.
//
// At every pyramid level and warp the solver minimises the linearised energy
//
//   E(u,v) = sum_p (Ix (u-u0) + Iy (v-v0) + It)^2
//          + alpha^2 sum_{p~q} ((u_p-u_q)^2 + (v_p-v_q)^2)
//
// over 4-neighbour pairs inside the image, where (u0,v0) is the flow the
// second frame was warped with. Each sweep is an in-place red-black
// Gauss-Seidel pass that solves the 2x2 system of one pixel exactly, so E
// never increases.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "clip.hpp"
#include "config.hpp"
#include "error.hpp"
#include "image.hpp"

namespace ongcmp::flow {

struct FlowField {
  int width = 0, height = 0;
  std::vector<float> u, v;

  FlowField() = default;
  FlowField(int w, int h)
      : width(w), height(h), u(static_cast<std::size_t>(w) * h, 0.f), v(static_cast<std::size_t>(w) * h, 0.f) {}

  std::size_t size() const { return u.size(); }
  float magnitude(std::size_t i) const { return std::hypot(u[i], v[i]); }
  float max_magnitude() const {
    float m = 0.f;
    for (std::size_t i = 0; i < size(); ++i) m = std::max(m, magnitude(i));
    return m;
  }
  friend bool operator==(const FlowField&, const FlowField&) = default;
};

enum class Normalization { PerClip, PerFrame };

struct SolverConfig {
  double alpha = 20.0;     // smoothness weight, intensities on a 0..255 scale
  int levels = 0;          // 0 selects from image size
  int iterations = 40;     // Gauss-Seidel sweeps per warp
  int warps = 2;           // re-linearisations per level
  bool track_energy = false;
  Normalization normalization = Normalization::PerClip;

  static SolverConfig from(const Config& c) {
    SolverConfig s;
    s.alpha = c.get("flow.alpha", s.alpha);
    s.levels = c.get("flow.levels", s.levels);
    s.iterations = c.get("flow.iterations", s.iterations);
    s.warps = c.get("flow.warps", s.warps);
    const auto norm = c.get("flow.normalization", std::string("clip"));
    require(norm == "clip" || norm == "frame", "flow.normalization must be 'clip' or 'frame'");
    s.normalization = norm == "clip" ? Normalization::PerClip : Normalization::PerFrame;
    require(s.alpha > 0 && s.iterations > 0 && s.warps > 0 && s.levels >= 0, "invalid flow solver config");
    return s;
  }
};

// Energy trace of one (level, warp) solve; entry 0 precedes the first sweep.
struct EnergyTrace {
  int level = 0;
  int warp = 0;
  std::vector<double> energy;
};

struct SolverDiagnostics {
  std::vector<EnergyTrace> traces;
};

// Pyramid depth for an image: 3 levels at 64 px, one more per doubling, at most 5.
inline int auto_levels(int width, int height) {
  int m = std::min(width, height) / 8, levels = 0;
  while (m >= 2 && levels < 5) {
    ++levels;
    m /= 2;
  }
  return std::max(1, levels);
}

namespace detail {

inline GrayImage blur121(const GrayImage& src) {
  GrayImage tmp(src.width, src.height), out(src.width, src.height);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x)
      tmp.at(x, y) = 0.25f * src.clamped(x - 1, y) + 0.5f * src.at(x, y) + 0.25f * src.clamped(x + 1, y);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x)
      out.at(x, y) = 0.25f * tmp.clamped(x, y - 1) + 0.5f * tmp.at(x, y) + 0.25f * tmp.clamped(x, y + 1);
  return out;
}

inline GrayImage downsample(const GrayImage& src) {
  return resize_bilinear(blur121(src), (src.width + 1) / 2, (src.height + 1) / 2);
}

// Linearised problem at one warp: derivative planes, the constant term
// c = It - Ix*u0 - Iy*v0, and per-pixel neighbour counts and pivots.
struct Linearisation {
  int w = 0, h = 0;
  std::vector<double> ix, iy, c;
  std::vector<double> inv_n;      // 1 / neighbour count
  std::vector<double> inv_pivot;  // 1 / (alpha^2 n + Ix^2 + Iy^2)
};

inline Linearisation linearise(const GrayImage& a, const GrayImage& b, const std::vector<double>& u,
                               const std::vector<double>& v, double alpha2) {
  const int w = a.width, h = a.height;
  GrayImage warped(w, h), avg(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      warped.at(x, y) = sample_bilinear(b, x + u[i], y + v[i]);
      avg.at(x, y) = 0.5f * (a.at(x, y) + warped.at(x, y));
    }
  Linearisation L;
  L.w = w;
  L.h = h;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  L.ix.resize(n);
  L.iy.resize(n);
  L.c.resize(n);
  L.inv_n.resize(n);
  L.inv_pivot.resize(n);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double ix = 0.5 * (avg.clamped(x + 1, y) - avg.clamped(x - 1, y));
      const double iy = 0.5 * (avg.clamped(x, y + 1) - avg.clamped(x, y - 1));
      const double it = static_cast<double>(warped.at(x, y)) - a.at(x, y);
      const int nb = (x > 0) + (x + 1 < w) + (y > 0) + (y + 1 < h);
      L.ix[i] = ix;
      L.iy[i] = iy;
      L.c[i] = it - ix * u[i] - iy * v[i];
      L.inv_n[i] = 1.0 / nb;
      L.inv_pivot[i] = 1.0 / (alpha2 * nb + ix * ix + iy * iy);
    }
  return L;
}

inline double energy(const Linearisation& L, const std::vector<double>& u, const std::vector<double>& v,
                     double alpha2) {
  double data = 0.0, smooth = 0.0;
  for (int y = 0; y < L.h; ++y)
    for (int x = 0; x < L.w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * L.w + x;
      const double r = L.ix[i] * u[i] + L.iy[i] * v[i] + L.c[i];
      data += r * r;
      if (x + 1 < L.w) {
        const double du = u[i + 1] - u[i], dv = v[i + 1] - v[i];
        smooth += du * du + dv * dv;
      }
      if (y + 1 < L.h) {
        const double du = u[i + L.w] - u[i], dv = v[i + L.w] - v[i];
        smooth += du * du + dv * dv;
      }
    }
  return data + alpha2 * smooth;
}

// Exact minimisation of E over (u_p, v_p) with all other pixels fixed.
inline void relax_pixel(const Linearisation& L, std::vector<double>& u, std::vector<double>& v, std::size_t i,
                        double su, double sv) {
  const double ubar = su * L.inv_n[i], vbar = sv * L.inv_n[i];
  const double ix = L.ix[i], iy = L.iy[i];
  const double t = (ix * ubar + iy * vbar + L.c[i]) * L.inv_pivot[i];
  u[i] = ubar - ix * t;
  v[i] = vbar - iy * t;
}

// Red-black ordering: pixels of one colour share no neighbours, so each
// half-sweep is a set of independent exact block updates.
inline void gauss_seidel_sweep(const Linearisation& L, std::vector<double>& u, std::vector<double>& v) {
  const int w = L.w, h = L.h;
  for (int colour = 0; colour < 2; ++colour)
    for (int y = 0; y < h; ++y) {
      const std::size_t row = static_cast<std::size_t>(y) * w;
      const bool interior_row = y > 0 && y + 1 < h;
      for (int x = (y + colour) & 1; x < w; x += 2) {
        const std::size_t i = row + x;
        if (interior_row && x > 0 && x + 1 < w) {
          relax_pixel(L, u, v, i, u[i - 1] + u[i + 1] + u[i - w] + u[i + w],
                      v[i - 1] + v[i + 1] + v[i - w] + v[i + w]);
          continue;
        }
        double su = 0.0, sv = 0.0;
        if (x > 0) { su += u[i - 1]; sv += v[i - 1]; }
        if (x + 1 < w) { su += u[i + 1]; sv += v[i + 1]; }
        if (y > 0) { su += u[i - w]; sv += v[i - w]; }
        if (y + 1 < h) { su += u[i + w]; sv += v[i + w]; }
        relax_pixel(L, u, v, i, su, sv);
      }
    }
}

inline std::vector<double> upsample_plane(const std::vector<double>& p, int w, int h, int W, int H, double scale) {
  GrayImage src(w, h);
  for (std::size_t i = 0; i < p.size(); ++i) src.data[i] = static_cast<float>(p[i]);
  const auto r = resize_bilinear(src, W, H);
  std::vector<double> out(r.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = r.data[i] * scale;
  return out;
}

}  // namespace detail

inline FlowField compute_flow(const GrayImage& a, const GrayImage& b, const SolverConfig& cfg,
                              SolverDiagnostics* diag = nullptr) {
  require(a.width == b.width && a.height == b.height, "compute_flow: frame dimensions differ");
  require(a.width >= 16 && a.height >= 16, "compute_flow: frames must be at least 16x16");
  require(cfg.alpha > 0 && cfg.iterations > 0 && cfg.warps > 0, "compute_flow: invalid solver config");
  const int levels = cfg.levels > 0 ? cfg.levels : auto_levels(a.width, a.height);

  std::vector<GrayImage> pa{a}, pb{b};
  for (int l = 1; l < levels; ++l) {
    if (pa.back().width < 4 || pa.back().height < 4) break;
    pa.push_back(detail::downsample(pa.back()));
    pb.push_back(detail::downsample(pb.back()));
  }
  const double alpha2 = cfg.alpha * cfg.alpha;
  const int top = static_cast<int>(pa.size()) - 1;
  std::vector<double> u, v;
  for (int l = top; l >= 0; --l) {
    const int w = pa[l].width, h = pa[l].height;
    if (l == top) {
      u.assign(static_cast<std::size_t>(w) * h, 0.0);
      v.assign(u.size(), 0.0);
    } else {
      const int pw = pa[l + 1].width, ph = pa[l + 1].height;
      u = detail::upsample_plane(u, pw, ph, w, h, static_cast<double>(w) / pw);
      v = detail::upsample_plane(v, pw, ph, w, h, static_cast<double>(h) / ph);
    }
    for (int warp = 0; warp < cfg.warps; ++warp) {
      const auto L = detail::linearise(pa[l], pb[l], u, v, alpha2);
      EnergyTrace trace{l, warp, {}};
      if (cfg.track_energy) trace.energy.push_back(detail::energy(L, u, v, alpha2));
      for (int it = 0; it < cfg.iterations; ++it) {
        detail::gauss_seidel_sweep(L, u, v);
        if (cfg.track_energy) trace.energy.push_back(detail::energy(L, u, v, alpha2));
      }
      if (diag && cfg.track_energy) diag->traces.push_back(std::move(trace));
    }
  }
  FlowField f(a.width, a.height);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.u[i] = static_cast<float>(u[i]);
    f.v[i] = static_cast<float>(v[i]);
  }
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!std::isfinite(f.u[i]) || !std::isfinite(f.v[i])) throw NumericError("compute_flow: non-finite flow");
  return f;
}

inline FlowField compute_flow(const RgbImage& a, const RgbImage& b, const SolverConfig& cfg,
                              SolverDiagnostics* diag = nullptr) {
  return compute_flow(to_gray(a), to_gray(b), cfg, diag);
}

// ---------------------------------------------------------------- colour wheel

// Middlebury colour wheel: 55 hues through red, yellow, green, cyan, blue and
// magenta with segment lengths 15, 6, 4, 11, 13, 6.
inline const std::vector<std::array<double, 3>>& color_wheel() {
  static const std::vector<std::array<double, 3>> wheel = [] {
    constexpr int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
    std::vector<std::array<double, 3>> w;
    for (int i = 0; i < RY; ++i) w.push_back({255, std::floor(255.0 * i / RY), 0});
    for (int i = 0; i < YG; ++i) w.push_back({255 - std::floor(255.0 * i / YG), 255, 0});
    for (int i = 0; i < GC; ++i) w.push_back({0, 255, std::floor(255.0 * i / GC)});
    for (int i = 0; i < CB; ++i) w.push_back({0, 255 - std::floor(255.0 * i / CB), 255});
    for (int i = 0; i < BM; ++i) w.push_back({std::floor(255.0 * i / BM), 0, 255});
    for (int i = 0; i < MR; ++i) w.push_back({255, 0, 255 - std::floor(255.0 * i / MR)});
    return w;
  }();
  return wheel;
}

// Colour of a displacement already divided by the normalisation constant.
// Radius is clamped to 1; zero displacement is white.
inline Rgb flow_color(double fu, double fv) {
  const auto& wheel = color_wheel();
  const int ncols = static_cast<int>(wheel.size());
  const double rad = std::min(1.0, std::hypot(fu, fv));
  // 0.0 - x turns -0.0 into +0.0 so a purely horizontal flow has one colour.
  const double a = std::atan2(0.0 - fv, 0.0 - fu) / 3.14159265358979323846;
  const double fk = (a + 1.0) / 2.0 * (ncols - 1);
  const int k0 = static_cast<int>(std::floor(fk));
  const int k1 = (k0 + 1) % ncols;
  const double f = fk - k0;
  std::array<std::uint8_t, 3> out{};
  for (int c = 0; c < 3; ++c) {
    const double col0 = wheel[k0][c] / 255.0, col1 = wheel[k1][c] / 255.0;
    double col = (1 - f) * col0 + f * col1;
    col = 1 - rad * (1 - col);
    out[c] = static_cast<std::uint8_t>(std::clamp(std::floor(255.0 * col), 0.0, 255.0));
  }
  return {out[0], out[1], out[2]};
}

inline RgbImage colorize_flow(const FlowField& flow, double norm) {
  require(norm > 0.0 && std::isfinite(norm), "colorize_flow: normalisation constant must be positive");
  RgbImage img(flow.width, flow.height);
  for (int y = 0; y < flow.height; ++y)
    for (int x = 0; x < flow.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * flow.width + x;
      if (flow.u[i] == 0.f && flow.v[i] == 0.f) {
        img.set(x, y, {255, 255, 255});
        continue;
      }
      img.set(x, y, flow_color(flow.u[i] / norm, flow.v[i] / norm));
    }
  return img;
}

// Flow between every consecutive pair: T+1 frames give T fields.
inline std::vector<FlowField> compute_flows(const VideoClip& clip, const SolverConfig& cfg) {
  clip.validate();
  require(clip.size() >= 2, "flow sequence needs at least two frames, clip '" + clip.id + "' has one");
  std::vector<GrayImage> gray;
  gray.reserve(clip.size());
  for (const auto& f : clip.frames) gray.push_back(to_gray(f));
  std::vector<FlowField> out;
  out.reserve(clip.size() - 1);
  for (std::size_t t = 0; t + 1 < gray.size(); ++t) out.push_back(compute_flow(gray[t], gray[t + 1], cfg));
  return out;
}

// Colorises a run of fields; per-clip normalisation divides by the largest
// magnitude over all of them. A motionless run renders white.
inline std::vector<RgbImage> colorize_sequence(const std::vector<FlowField>& flows, Normalization mode) {
  float clip_max = 0.f;
  for (const auto& f : flows) clip_max = std::max(clip_max, f.max_magnitude());
  std::vector<RgbImage> out;
  out.reserve(flows.size());
  for (const auto& f : flows) {
    const float m = mode == Normalization::PerClip ? clip_max : f.max_magnitude();
    out.push_back(colorize_flow(f, m > 0.f ? m : 1.0));
  }
  return out;
}

inline std::vector<RgbImage> flow_sequence(const VideoClip& clip, const SolverConfig& cfg) {
  return colorize_sequence(compute_flows(clip, cfg), cfg.normalization);
}

// ---------------------------------------------------------------- raw dump

// "FLO1", width u32, height u32, then interleaved little-endian float (u, v).
inline void write_flo(const std::string& path, const FlowField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write flow file: " + path);
  auto put_u32 = [&](std::uint32_t x) {
    const unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                                static_cast<unsigned char>(x >> 16), static_cast<unsigned char>(x >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
  };
  auto put_f32 = [&](float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(bits);
  };
  out.write("FLO1", 4);
  put_u32(static_cast<std::uint32_t>(f.width));
  put_u32(static_cast<std::uint32_t>(f.height));
  for (std::size_t i = 0; i < f.size(); ++i) {
    put_f32(f.u[i]);
    put_f32(f.v[i]);
  }
  if (!out) throw IoError("write failed: " + path);
}

inline FlowField read_flo(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read flow file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "FLO1", 4) != 0) throw IoError("bad flow file magic: " + path);
  auto get_u32 = [&]() {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw IoError("truncated flow file: " + path);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  };
  const auto w = get_u32(), h = get_u32();
  if (w == 0 || h == 0 || w > 1u << 16 || h > 1u << 16) throw IoError("bad flow file dimensions: " + path);
  FlowField f(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::uint32_t bu = get_u32(), bv = get_u32();
    std::memcpy(&f.u[i], &bu, 4);
    std::memcpy(&f.v[i], &bv, 4);
  }
  return f;
}

}  // namespace ongcmp::flow

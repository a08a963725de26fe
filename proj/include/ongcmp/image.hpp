// 8-bit RGB images, float grayscale planes, binary PPM/PGM I/O and resizing.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "tensor.hpp"

namespace ongcmp {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {}) : w_(width), h_(height) {
    require(width > 0 && height > 0, "image dimensions must be positive");
    px_.assign(static_cast<std::size_t>(width) * height * 3, 0);
    for (int i = 0; i < width * height; ++i) {
      px_[3 * i] = fill.r;
      px_[3 * i + 1] = fill.g;
      px_[3 * i + 2] = fill.b;
    }
  }

  int width() const { return w_; }
  int height() const { return h_; }
  bool empty() const { return px_.empty(); }

  Rgb get(int x, int y) const {
    const auto i = index(x, y);
    return {px_[i], px_[i + 1], px_[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const auto i = index(x, y);
    px_[i] = c.r;
    px_[i + 1] = c.g;
    px_[i + 2] = c.b;
  }
  std::uint8_t channel(int x, int y, int c) const { return px_[index(x, y) + c]; }

  const std::vector<std::uint8_t>& bytes() const { return px_; }
  std::vector<std::uint8_t>& bytes() { return px_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * w_ + x) * 3;
  }
  int w_ = 0, h_ = 0;
  std::vector<std::uint8_t> px_;
};

// Single-channel float image, row-major.
struct GrayImage {
  int width = 0, height = 0;
  std::vector<float> data;

  GrayImage() = default;
  GrayImage(int w, int h, float fill = 0.f) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}
  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  // Replicate-edge access.
  float clamped(int x, int y) const {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return at(x, y);
  }
};

// ITU-R BT.601 luma.
inline GrayImage to_gray(const RgbImage& img) {
  GrayImage g(img.width(), img.height());
  const auto& b = img.bytes();
  for (std::size_t i = 0; i < g.data.size(); ++i)
    g.data[i] = 0.299f * b[3 * i] + 0.587f * b[3 * i + 1] + 0.114f * b[3 * i + 2];
  return g;
}

// Bilinear sample with replicate-edge boundary.
inline float sample_bilinear(const GrayImage& img, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const double ax = x - fx, ay = y - fy;
  const double v00 = img.clamped(x0, y0), v10 = img.clamped(x0 + 1, y0);
  const double v01 = img.clamped(x0, y0 + 1), v11 = img.clamped(x0 + 1, y0 + 1);
  return static_cast<float>((1 - ay) * ((1 - ax) * v00 + ax * v10) + ay * ((1 - ax) * v01 + ax * v11));
}

// Bilinear resize using pixel-centre alignment.
inline GrayImage resize_bilinear(const GrayImage& src, int width, int height) {
  require(width > 0 && height > 0, "resize: target dimensions must be positive");
  GrayImage out(width, height);
  const double sx = static_cast<double>(src.width) / width;
  const double sy = static_cast<double>(src.height) / height;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      out.at(x, y) = sample_bilinear(src, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5);
  return out;
}

inline RgbImage resize_bilinear(const RgbImage& src, int width, int height) {
  if (src.width() == width && src.height() == height) return src;
  RgbImage out(width, height);
  for (int c = 0; c < 3; ++c) {
    GrayImage plane(src.width(), src.height());
    for (int y = 0; y < src.height(); ++y)
      for (int x = 0; x < src.width(); ++x) plane.at(x, y) = src.channel(x, y, c);
    const auto r = resize_bilinear(plane, width, height);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const float v = std::clamp(std::round(r.at(x, y)), 0.f, 255.f);
        out.bytes()[(static_cast<std::size_t>(y) * width + x) * 3 + c] = static_cast<std::uint8_t>(v);
      }
  }
  return out;
}

// Planar [3, H, W] tensor scaled to [-1, 1].
template <typename T>
Tensor<T> to_tensor(const RgbImage& img) {
  const std::size_t H = img.height(), W = img.width();
  Tensor<T> t({3, H, W});
  const auto& b = img.bytes();
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        t[(c * H + y) * W + x] = static_cast<T>(b[(y * W + x) * 3 + c] / 127.5 - 1.0);
  return t;
}

// ---------------------------------------------------------------- PNM I/O

namespace detail {
inline std::string read_pnm_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string dummy;
      std::getline(in, dummy);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok += c;
  }
  return tok;
}
}  // namespace detail

inline void write_ppm(const std::string& path, const RgbImage& img) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write image: " + path);
  f << "P6\n" << img.width() << " " << img.height() << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.bytes().data()), static_cast<std::streamsize>(img.bytes().size()));
  if (!f) throw IoError("write failed: " + path);
}

// Reads binary P6 (colour) or P5 (grayscale, expanded to RGB).
inline RgbImage read_ppm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read image: " + path);
  const std::string magic = detail::read_pnm_token(f);
  if (magic != "P6" && magic != "P5") throw IoError("unsupported image format in " + path);
  int w = 0, h = 0, maxv = 0;
  try {
    w = std::stoi(detail::read_pnm_token(f));
    h = std::stoi(detail::read_pnm_token(f));
    maxv = std::stoi(detail::read_pnm_token(f));
  } catch (const std::exception&) {
    throw IoError("malformed image header in " + path);
  }
  if (w <= 0 || h <= 0 || maxv != 255) throw IoError("unsupported image header in " + path);
  const std::size_t n = static_cast<std::size_t>(w) * h;
  RgbImage img(w, h);
  if (magic == "P6") {
    f.read(reinterpret_cast<char*>(img.bytes().data()), static_cast<std::streamsize>(n * 3));
  } else {
    std::vector<std::uint8_t> g(n);
    f.read(reinterpret_cast<char*>(g.data()), static_cast<std::streamsize>(n));
    for (std::size_t i = 0; i < n; ++i) img.bytes()[3 * i] = img.bytes()[3 * i + 1] = img.bytes()[3 * i + 2] = g[i];
  }
  if (!f) throw IoError("truncated image data in " + path);
  return img;
}

inline void write_pgm(const std::string& path, int width, int height, const std::vector<std::uint8_t>& gray) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write image: " + path);
  f << "P5\n" << width << " " << height << "\n255\n";
  f.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
}

}  // namespace ongcmp

// Binary checkpoints:
//   "GCMP" | u16 version | u32 metadata length | metadata text | f32 values
// Integers and floats are little-endian. The metadata is line-oriented text:
// "key value..." lines describing the model, then one "param NAME D0 D1 ..."
// line per tensor, in the order the values follow.
#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "models.hpp"
#include "tensor.hpp"

namespace ongcmp {

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> header;  // ordered key/value
  std::vector<std::pair<std::string, Tensor<float>>> params;

  std::string get(const std::string& key) const {
    for (const auto& [k, v] : header)
      if (k == key) return v;
    throw ValidationError("checkpoint: missing header key '" + key + "'");
  }
  const Tensor<float>& param(const std::string& name) const {
    for (const auto& [n, t] : params)
      if (n == name) return t;
    throw ValidationError("checkpoint: missing parameter '" + name + "'");
  }
};

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}
inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline std::uint32_t get_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& ck) {
  std::ostringstream meta;
  for (const auto& [k, v] : ck.header) {
    require(k.find_first_of(" \n") == std::string::npos && v.find('\n') == std::string::npos,
            "checkpoint: header entries must be single-line tokens");
    meta << k << ' ' << v << '\n';
  }
  for (const auto& [name, t] : ck.params) {
    meta << "param " << name;
    for (auto d : t.shape()) meta << ' ' << d;
    meta << '\n';
  }
  const std::string m = meta.str();
  std::string out = "GCMP";
  detail::put_u16(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(m.size()));
  out += m;
  for (const auto& [name, t] : ck.params)
    for (const float v : t.values()) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline Checkpoint decode_checkpoint(const std::string& bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 10 || bytes.compare(0, 4, "GCMP") != 0) throw IoError("not a checkpoint (bad magic)");
  const std::uint16_t version = static_cast<std::uint16_t>(p[4] | (p[5] << 8));
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t mlen = detail::get_u32(p + 6);
  if (bytes.size() < 10ull + mlen) throw IoError("truncated checkpoint metadata");
  Checkpoint ck;
  std::istringstream meta(bytes.substr(10, mlen));
  std::size_t offset = 10 + mlen;
  for (std::string line; std::getline(meta, line);) {
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key != "param") {
      ck.header.emplace_back(key, rest);
      continue;
    }
    std::istringstream ls(rest);
    std::string name;
    ls >> name;
    Shape shape;
    for (std::size_t d; ls >> d;) shape.push_back(d);
    if (name.empty() || shape.empty()) throw IoError("malformed parameter line: " + line);
    const std::size_t n = shape_size(shape);
    if (bytes.size() < offset + 4 * n) throw IoError("truncated checkpoint values for " + name);
    std::vector<float> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = std::bit_cast<float>(detail::get_u32(p + offset + 4 * i));
    offset += 4 * n;
    ck.params.emplace_back(name, Tensor<float>(std::move(shape), std::move(values)));
  }
  if (offset != bytes.size()) throw IoError("checkpoint has trailing bytes");
  return ck;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write checkpoint: " + path);
  const auto bytes = encode_checkpoint(ck);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read checkpoint: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_checkpoint(ss.str());
}

// ---------------------------------------------------------------- models <-> checkpoints

namespace detail {

inline void write_model_header(Checkpoint& ck, const std::string& kind, const models::ModelConfig& c) {
  const auto& b = c.backbone;
  ck.header = {{"kind", kind},
               {"input", std::string(models::input_kind_name(c.input))},
               {"classes", std::to_string(c.classes)},
               {"input_size", std::to_string(b.input_size)},
               {"in_channels", std::to_string(b.in_channels)},
               {"widths", std::to_string(b.widths[0]) + " " + std::to_string(b.widths[1]) + " " +
                              std::to_string(b.widths[2])},
               {"feature_dim", std::to_string(b.feature_dim)},
               {"hidden_dim", std::to_string(c.hidden_dim)}};
}

inline models::ModelConfig read_model_header(const Checkpoint& ck) {
  models::ModelConfig c;
  try {
    c.input = models::parse_input_kind(ck.get("input"));
    c.classes = std::stoi(ck.get("classes"));
    c.backbone.input_size = std::stoi(ck.get("input_size"));
    c.backbone.in_channels = std::stoi(ck.get("in_channels"));
    std::istringstream ws(ck.get("widths"));
    for (auto& w : c.backbone.widths)
      if (!(ws >> w)) throw ValidationError("bad widths");
    c.backbone.feature_dim = std::stoi(ck.get("feature_dim"));
    c.hidden_dim = std::stoi(ck.get("hidden_dim"));
  } catch (const std::logic_error& e) {
    throw IoError(std::string("checkpoint: malformed model header: ") + e.what());
  }
  c.backbone.validate();
  return c;
}

template <typename Model>
void export_params(Checkpoint& ck, Model& m) {
  for (const auto& p : m.params()) ck.params.emplace_back(p.name, *p.tensor);
}

template <typename Model>
void import_params(const Checkpoint& ck, Model& m) {
  const auto ps = m.params();
  if (ps.size() != ck.params.size()) throw IoError("checkpoint: parameter count does not match the model");
  for (const auto& p : ps) {
    const auto& src = ck.param(p.name);
    if (src.shape() != p.tensor->shape())
      throw IoError("checkpoint: shape mismatch for " + p.name + ": " + shape_str(src.shape()) + " vs " +
                    shape_str(p.tensor->shape()));
    *p.tensor = src;
  }
}

}  // namespace detail

inline Checkpoint to_checkpoint(models::SequenceClassifier<float>& m) {
  Checkpoint ck;
  detail::write_model_header(ck, "sequence", m.config());
  detail::export_params(ck, m);
  return ck;
}

inline Checkpoint to_checkpoint(models::FrameClassifier<float>& m) {
  Checkpoint ck;
  detail::write_model_header(ck, "frame", m.config());
  detail::export_params(ck, m);
  return ck;
}

inline models::SequenceClassifier<float> sequence_from_checkpoint(const Checkpoint& ck) {
  if (ck.get("kind") != "sequence") throw ValidationError("checkpoint is not a sequence classifier");
  models::SequenceClassifier<float> m(detail::read_model_header(ck));
  detail::import_params(ck, m);
  return m;
}

inline models::FrameClassifier<float> frame_from_checkpoint(const Checkpoint& ck) {
  if (ck.get("kind") != "frame") throw ValidationError("checkpoint is not a frame classifier");
  models::FrameClassifier<float> m(detail::read_model_header(ck));
  detail::import_params(ck, m);
  return m;
}

}  // namespace ongcmp

// A video clip: an ordered run of equally sized RGB frames.
#pragma once

#include <string>
#include <vector>

#include "image.hpp"

namespace ongcmp {

struct VideoClip {
  std::string id;
  double fps = 25.0;
  std::vector<RgbImage> frames;

  std::size_t size() const { return frames.size(); }
  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }

  void validate() const {
    require(!frames.empty(), "clip '" + id + "' has no frames");
    for (const auto& f : frames)
      require(f.width() == width() && f.height() == height(), "clip '" + id + "' has frames of differing size");
  }

  // Frames [begin, end) as a new clip with the same id and rate.
  VideoClip slice(std::size_t begin, std::size_t end) const {
    require(begin <= end && end <= frames.size(), "clip slice out of range");
    return VideoClip{id, fps, std::vector<RgbImage>(frames.begin() + begin, frames.begin() + end)};
  }

  friend bool operator==(const VideoClip&, const VideoClip&) = default;
};

}  // namespace ongcmp

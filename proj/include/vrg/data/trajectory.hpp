#pragma once

#include <cstdint>
#include <vector>

#include "vrg/data/bbox.hpp"

namespace vrg::data {

/// One box per original frame over the contiguous span [start_frame, end_frame].
struct Trajectory {
  std::int64_t start_frame = 0;
  std::int64_t end_frame = -1;
  std::vector<BBox> boxes;

  std::int64_t length() const { return end_frame - start_frame + 1; }
  bool contains(std::int64_t frame) const { return frame >= start_frame && frame <= end_frame; }
  const BBox& at(std::int64_t frame) const { return boxes[static_cast<std::size_t>(frame - start_frame)]; }
  bool valid() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

}  // namespace vrg::data

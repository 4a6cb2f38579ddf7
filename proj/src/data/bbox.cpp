#include "vrg/data/bbox.hpp"

#include <algorithm>
#include <cmath>

#include "vrg/error.hpp"

namespace vrg::data {

bool BBox::valid() const {
  return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) && std::isfinite(y_max) &&
         x_min <= x_max && y_min <= y_max;
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

bool clamp_to_frame(BBox& box, double frame_width, double frame_height) {
  const BBox before = box;
  box.x_min = std::clamp(box.x_min, 0.0, frame_width);
  box.x_max = std::clamp(box.x_max, 0.0, frame_width);
  box.y_min = std::clamp(box.y_min, 0.0, frame_height);
  box.y_max = std::clamp(box.y_max, 0.0, frame_height);
  return !(before == box);
}

std::array<double, 5> geometry_feature(const BBox& box, double frame_width, double frame_height) {
  if (!(frame_width > 0.0) || !(frame_height > 0.0)) {
    throw DomainError("geometry_feature: frame dimensions must be positive");
  }
  return {box.x_min / frame_width, box.y_min / frame_height, box.x_max / frame_width,
          box.y_max / frame_height, box.area() / (frame_width * frame_height)};
}

}  // namespace vrg::data

#pragma once

#include <array>

namespace vrg::data {

/// Axis-aligned box in pixel coordinates, (x_min, y_min) top-left.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }
  bool valid() const;

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Intersection over union; 0 when the union is empty.
double iou(const BBox& a, const BBox& b);

/// Clamps to [0, W] × [0, H]. Returns true when any coordinate moved.
bool clamp_to_frame(BBox& box, double frame_width, double frame_height);

/// [x_min/W, y_min/H, x_max/W, y_max/H, area/(W·H)].
std::array<double, 5> geometry_feature(const BBox& box, double frame_width, double frame_height);

}  // namespace vrg::data

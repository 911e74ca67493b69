// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace cibse {

/// Axis-aligned box in pixels, x1 <= x2 and y1 <= y2.
struct Box {
  float x1 = 0.0f;
  float y1 = 0.0f;
  float x2 = 0.0f;
  float y2 = 0.0f;

  double area() const;
  bool operator==(const Box&) const = default;
};

/// Intersection over union; 0 when the union is empty.
double iou(const Box& a, const Box& b);

struct Detection {
  int class_id = 0;
  float score = 0.0f;
  Box box;

  bool operator==(const Detection&) const = default;
};

}  // namespace cibse

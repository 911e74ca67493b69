// SPDX-License-Identifier: Apache-2.0
#include "cibse/detection.hpp"

#include <algorithm>

namespace cibse {

double Box::area() const {
  return std::max(0.0, static_cast<double>(x2) - x1) * std::max(0.0, static_cast<double>(y2) - y1);
}

double iou(const Box& a, const Box& b) {
  const double iw = std::min<double>(a.x2, b.x2) - std::max<double>(a.x1, b.x1);
  const double ih = std::min<double>(a.y2, b.y2) - std::max<double>(a.y1, b.y1);
  const double inter = iw > 0.0 && ih > 0.0 ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace cibse

#include "isp/data/scanpath.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace isp::data {

std::string_view roi_name(Roi roi) {
  switch (roi) {
    case Roi::Social: return "social";
    case Roi::Nonsocial: return "nonsocial";
    case Roi::Background: return "background";
  }
  return "background";
}

Roi roi_from_name(std::string_view name) {
  if (name == "social") return Roi::Social;
  if (name == "nonsocial") return Roi::Nonsocial;
  if (name == "background") return Roi::Background;
  throw std::invalid_argument("unknown ROI label '" + std::string(name) + "'");
}

void validate(const Scanpath& sp) {
  if (sp.fixations.empty()) throw std::invalid_argument("scanpath has no fixations");
  for (std::size_t i = 0; i < sp.fixations.size(); ++i) {
    const auto& f = sp.fixations[i];
    if (!(f.x >= 0.0 && f.x <= 1.0 && f.y >= 0.0 && f.y <= 1.0)) {
      throw std::invalid_argument("fixation " + std::to_string(i) + " coordinate out of [0,1]");
    }
    if (!(f.dur_ms > 0.0) || !std::isfinite(f.dur_ms)) {
      throw std::invalid_argument("fixation " + std::to_string(i) + " has non-positive duration");
    }
  }
}

std::size_t cell_index(double x, double y, std::size_t grid_h, std::size_t grid_w) {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) throw std::invalid_argument("coordinate out of [0,1]");
  auto col = std::min(static_cast<std::size_t>(std::floor(x * static_cast<double>(grid_w))), grid_w - 1);
  auto row = std::min(static_cast<std::size_t>(std::floor(y * static_cast<double>(grid_h))), grid_h - 1);
  return row * grid_w + col;
}

Fixation cell_center(std::size_t cell, std::size_t grid_h, std::size_t grid_w, double dur_ms) {
  const auto row = cell / grid_w;
  const auto col = cell % grid_w;
  return {(static_cast<double>(col) + 0.5) / static_cast<double>(grid_w),
          (static_cast<double>(row) + 0.5) / static_cast<double>(grid_h), dur_ms};
}

}  // namespace isp::data

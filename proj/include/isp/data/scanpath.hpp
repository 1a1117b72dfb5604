#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace isp::data {

// Normalized image coordinates in [0,1], duration in milliseconds.
struct Fixation {
  double x = 0.0;
  double y = 0.0;
  double dur_ms = 0.0;

  bool operator==(const Fixation&) const = default;
};

struct Scanpath {
  int image_id = 0;
  int observer_id = 0;
  std::vector<Fixation> fixations;

  bool operator==(const Scanpath&) const = default;
};

enum class Roi : std::uint8_t { Social = 0, Nonsocial = 1, Background = 2 };
inline constexpr int kRoiCount = 3;

std::string_view roi_name(Roi roi);
Roi roi_from_name(std::string_view name);

// Throws std::invalid_argument naming the first offending fixation.
void validate(const Scanpath& sp);

// Grid cell (row-major, row = floor(y*H)) of a normalized coordinate; x or y
// equal to 1 falls in the last cell.
std::size_t cell_index(double x, double y, std::size_t grid_h, std::size_t grid_w);
Fixation cell_center(std::size_t cell, std::size_t grid_h, std::size_t grid_w, double dur_ms);

}  // namespace isp::data

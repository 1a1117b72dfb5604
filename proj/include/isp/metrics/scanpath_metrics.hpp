#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "isp/data/scanpath.hpp"

namespace isp::metrics {

struct MetricConfig {
  std::size_t sm_grid_x = 8;
  std::size_t sm_grid_y = 6;
  double sm_tbin_ms = 50.0;  // 0 disables temporal binning
  double sm_gap = 0.0;       // penalty subtracted per gap
  std::size_t sed_grid_x = 5;
  std::size_t sed_grid_y = 5;
  double aspect_w = 4.0;
  double aspect_h = 3.0;

  void validate() const;
};

struct GriddedScanpath {
  std::vector<int> tokens;
  std::size_t grid_x = 1;
  std::size_t grid_y = 1;
};

// Bin id is row * grid_x + col with col = floor(x * grid_x), clamped at 1.
// With tbin > 0 each fixation contributes ceil(dur / tbin) tokens.
GriddedScanpath quantize(const data::Scanpath& sp, std::size_t grid_x, std::size_t grid_y, double tbin_ms);

// Substitution scores 1 - 2 d / d_max between bin centers, with bins scaled to
// the screen aspect and d_max the distance between opposite corner bins.
class SubstitutionMatrix {
 public:
  SubstitutionMatrix(std::size_t grid_x, std::size_t grid_y, double aspect_w, double aspect_h);
  double operator()(int a, int b) const { return scores_[static_cast<std::size_t>(a) * n_ + static_cast<std::size_t>(b)]; }
  std::size_t bins() const { return n_; }

 private:
  std::size_t n_;
  std::vector<double> scores_;
};

// Global alignment score with a linear gap penalty.
double needleman_wunsch(const std::vector<int>& a, const std::vector<int>& b, const SubstitutionMatrix& sub,
                        double gap_penalty);

double scanmatch(const data::Scanpath& a, const data::Scanpath& b, const MetricConfig& cfg = {});

struct MultiMatchResult {
  double shape = 0.0;
  double direction = 0.0;
  double length = 0.0;
  double position = 0.0;
  double duration = 0.0;
  double mean = 0.0;
  // false when either scanpath has fewer than two fixations; only position
  // and duration are then defined.
  bool has_saccades = false;
};

struct Alignment {
  std::vector<std::pair<std::size_t, std::size_t>> path;
  double cost = 0.0;
};

// Monotone path from (0,0) to (n-1,m-1) with unit right/down/diagonal moves
// that minimizes the summed cell costs. `cost` is row-major n x m.
Alignment align_min_cost(const std::vector<double>& cost, std::size_t n, std::size_t m);

MultiMatchResult multimatch(const data::Scanpath& a, const data::Scanpath& b, const MetricConfig& cfg = {});

int levenshtein(const std::vector<int>& a, const std::vector<int>& b);
int string_edit_distance(const data::Scanpath& a, const data::Scanpath& b, const MetricConfig& cfg = {});

}  // namespace isp::metrics

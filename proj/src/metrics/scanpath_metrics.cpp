#include "isp/metrics/scanpath_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>

namespace isp::metrics {
namespace {

void require_nonempty(const data::Scanpath& sp, const char* what) {
  if (sp.fixations.empty()) throw std::invalid_argument(std::string(what) + ": empty scanpath");
}

std::size_t bin_of(double v, std::size_t n) {
  auto b = static_cast<std::size_t>(std::floor(v * static_cast<double>(n)));
  return std::min(b, n - 1);
}

// Orders the pair so that metric(a, b) and metric(b, a) run the same computation.
bool fixations_less(const data::Scanpath& a, const data::Scanpath& b) {
  return std::lexicographical_compare(a.fixations.begin(), a.fixations.end(), b.fixations.begin(), b.fixations.end(),
                                      [](const data::Fixation& l, const data::Fixation& r) {
                                        return std::tie(l.x, l.y, l.dur_ms) < std::tie(r.x, r.y, r.dur_ms);
                                      });
}

double duration_similarity(double a, double b) {
  const double mx = std::max(a, b);
  return mx > 0.0 ? 1.0 - std::abs(a - b) / mx : 1.0;
}

}  // namespace

void MetricConfig::validate() const {
  if (sm_grid_x < 1 || sm_grid_y < 1) throw std::invalid_argument("scanmatch grid must be at least 1x1");
  if (sed_grid_x < 1 || sed_grid_y < 1) throw std::invalid_argument("SED grid must be at least 1x1");
  if (!(sm_tbin_ms >= 0.0)) throw std::invalid_argument("scanmatch temporal bin must be >= 0");
  if (!(sm_gap >= 0.0)) throw std::invalid_argument("scanmatch gap penalty must be >= 0");
  if (!(aspect_w > 0.0) || !(aspect_h > 0.0)) throw std::invalid_argument("screen aspect must be positive");
}

GriddedScanpath quantize(const data::Scanpath& sp, std::size_t grid_x, std::size_t grid_y, double tbin_ms) {
  require_nonempty(sp, "quantize");
  if (grid_x < 1 || grid_y < 1) throw std::invalid_argument("quantize: grid must be at least 1x1");
  GriddedScanpath g;
  g.grid_x = grid_x;
  g.grid_y = grid_y;
  for (std::size_t i = 0; i < sp.fixations.size(); ++i) {
    const auto& f = sp.fixations[i];
    if (!(f.x >= 0.0 && f.x <= 1.0 && f.y >= 0.0 && f.y <= 1.0)) {
      throw std::invalid_argument("quantize: fixation " + std::to_string(i) + " outside [0,1]");
    }
    const int bin = static_cast<int>(bin_of(f.y, grid_y) * grid_x + bin_of(f.x, grid_x));
    std::size_t reps = 1;
    if (tbin_ms > 0.0) reps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(f.dur_ms / tbin_ms)));
    g.tokens.insert(g.tokens.end(), reps, bin);
  }
  return g;
}

SubstitutionMatrix::SubstitutionMatrix(std::size_t grid_x, std::size_t grid_y, double aspect_w, double aspect_h)
    : n_(grid_x * grid_y), scores_(n_ * n_, 1.0) {
  const double bw = aspect_w / static_cast<double>(grid_x);
  const double bh = aspect_h / static_cast<double>(grid_y);
  const double d_max = std::hypot(bw * static_cast<double>(grid_x - 1), bh * static_cast<double>(grid_y - 1));
  if (d_max == 0.0) return;
  for (std::size_t a = 0; a < n_; ++a) {
    for (std::size_t b = 0; b < n_; ++b) {
      const double dx = bw * (static_cast<double>(a % grid_x) - static_cast<double>(b % grid_x));
      const double dy = bh * (static_cast<double>(a / grid_x) - static_cast<double>(b / grid_x));
      scores_[a * n_ + b] = 1.0 - 2.0 * std::hypot(dx, dy) / d_max;
    }
  }
}

double needleman_wunsch(const std::vector<int>& a, const std::vector<int>& b, const SubstitutionMatrix& sub,
                        double gap_penalty) {
  const std::size_t m = b.size();
  std::vector<double> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = -gap_penalty * static_cast<double>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = -gap_penalty * static_cast<double>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = std::max({prev[j - 1] + sub(a[i - 1], b[j - 1]), prev[j] - gap_penalty, cur[j - 1] - gap_penalty});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double scanmatch(const data::Scanpath& a, const data::Scanpath& b, const MetricConfig& cfg) {
  require_nonempty(a, "scanmatch");
  require_nonempty(b, "scanmatch");
  const bool swap = fixations_less(b, a);
  const auto& first = swap ? b : a;
  const auto& second = swap ? a : b;
  const auto ga = quantize(first, cfg.sm_grid_x, cfg.sm_grid_y, cfg.sm_tbin_ms);
  const auto gb = quantize(second, cfg.sm_grid_x, cfg.sm_grid_y, cfg.sm_tbin_ms);
  const SubstitutionMatrix sub(cfg.sm_grid_x, cfg.sm_grid_y, cfg.aspect_w, cfg.aspect_h);
  const double score = needleman_wunsch(ga.tokens, gb.tokens, sub, cfg.sm_gap);
  const auto len = static_cast<double>(std::max(ga.tokens.size(), gb.tokens.size()));
  return std::clamp(score / len, 0.0, 1.0);
}

Alignment align_min_cost(const std::vector<double>& cost, std::size_t n, std::size_t m) {
  if (n == 0 || m == 0 || cost.size() != n * m) throw std::invalid_argument("align_min_cost: bad cost matrix");
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> acc(n * m, inf);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double best = 0.0;
      if (i > 0 || j > 0) {
        best = inf;
        if (i > 0 && j > 0) best = std::min(best, acc[(i - 1) * m + j - 1]);
        if (i > 0) best = std::min(best, acc[(i - 1) * m + j]);
        if (j > 0) best = std::min(best, acc[i * m + j - 1]);
      }
      acc[i * m + j] = best + cost[i * m + j];
    }
  }
  Alignment out;
  out.cost = acc[n * m - 1];
  std::size_t i = n - 1;
  std::size_t j = m - 1;
  out.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    // Ties prefer the diagonal, then the row step.
    if (i > 0 && j > 0 && acc[(i - 1) * m + j - 1] <= std::min(i > 0 ? acc[(i - 1) * m + j] : inf, acc[i * m + j - 1])) {
      --i;
      --j;
    } else if (i > 0 && (j == 0 || acc[(i - 1) * m + j] <= acc[i * m + j - 1])) {
      --i;
    } else {
      --j;
    }
    out.path.emplace_back(i, j);
  }
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

MultiMatchResult multimatch(const data::Scanpath& a_in, const data::Scanpath& b_in, const MetricConfig& cfg) {
  require_nonempty(a_in, "multimatch");
  require_nonempty(b_in, "multimatch");
  (void)cfg;
  const bool swap = fixations_less(b_in, a_in);
  const auto& fa = (swap ? b_in : a_in).fixations;
  const auto& fb = (swap ? a_in : b_in).fixations;

  MultiMatchResult r;
  if (fa.size() < 2 || fb.size() < 2) {
    const std::size_t n = fa.size();
    const std::size_t m = fb.size();
    std::vector<double> cost(n * m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) cost[i * m + j] = std::hypot(fa[i].x - fb[j].x, fa[i].y - fb[j].y);
    }
    const auto al = align_min_cost(cost, n, m);
    for (auto [i, j] : al.path) {
      r.position += 1.0 - cost[i * m + j] / std::numbers::sqrt2;
      r.duration += duration_similarity(fa[i].dur_ms, fb[j].dur_ms);
    }
    const auto k = static_cast<double>(al.path.size());
    r.position /= k;
    r.duration /= k;
    r.mean = (r.position + r.duration) / 2.0;
    return r;
  }

  struct Saccade {
    double dx, dy;
  };
  auto saccades = [](const std::vector<data::Fixation>& f) {
    std::vector<Saccade> s;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) s.push_back({f[i + 1].x - f[i].x, f[i + 1].y - f[i].y});
    return s;
  };
  const auto sa = saccades(fa);
  const auto sb = saccades(fb);
  const std::size_t n = sa.size();
  const std::size_t m = sb.size();
  std::vector<double> cost(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) cost[i * m + j] = std::hypot(sa[i].dx - sb[j].dx, sa[i].dy - sb[j].dy);
  }
  const auto al = align_min_cost(cost, n, m);
  for (auto [i, j] : al.path) {
    r.shape += 1.0 - cost[i * m + j] / (2.0 * std::numbers::sqrt2);
    const double la = std::hypot(sa[i].dx, sa[i].dy);
    const double lb = std::hypot(sb[j].dx, sb[j].dy);
    r.length += 1.0 - std::abs(la - lb) / std::numbers::sqrt2;
    double dtheta = std::abs(std::atan2(sa[i].dy, sa[i].dx) - std::atan2(sb[j].dy, sb[j].dx));
    if (dtheta > std::numbers::pi) dtheta = 2.0 * std::numbers::pi - dtheta;
    r.direction += 1.0 - dtheta / std::numbers::pi;
    r.position += 1.0 - std::hypot(fa[i].x - fb[j].x, fa[i].y - fb[j].y) / std::numbers::sqrt2;
    r.duration += duration_similarity(fa[i].dur_ms, fb[j].dur_ms);
  }
  const auto k = static_cast<double>(al.path.size());
  r.shape = std::clamp(r.shape / k, 0.0, 1.0);
  r.direction = std::clamp(r.direction / k, 0.0, 1.0);
  r.length = std::clamp(r.length / k, 0.0, 1.0);
  r.position = std::clamp(r.position / k, 0.0, 1.0);
  r.duration = std::clamp(r.duration / k, 0.0, 1.0);
  r.mean = (r.shape + r.direction + r.length + r.position + r.duration) / 5.0;
  r.has_saccades = true;
  return r;
}

int levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t m = b.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = std::min({prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1), prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

int string_edit_distance(const data::Scanpath& a, const data::Scanpath& b, const MetricConfig& cfg) {
  require_nonempty(a, "string_edit_distance");
  require_nonempty(b, "string_edit_distance");
  return levenshtein(quantize(a, cfg.sed_grid_x, cfg.sed_grid_y, 0.0).tokens,
                     quantize(b, cfg.sed_grid_x, cfg.sed_grid_y, 0.0).tokens);
}

}  // namespace isp::metrics

#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include "ereem/sensitivity.hpp"

namespace ereem {

namespace {

// Edge id: (row, col, orientation) of the lower-left grid node; orientation
// 0 runs along columns, 1 along rows.
using EdgeId = std::tuple<Eigen::Index, Eigen::Index, int>;

struct EdgeSegment {
  EdgeId a, b;
};

}  // namespace

std::vector<ContourLine> extract_contours(const SensitivityGrid& grid, double level) {
  const Eigen::MatrixXd& v = grid.values;
  const Eigen::Index nr = v.rows(), nc = v.cols();
  if (nr < 2 || nc < 2) throw std::invalid_argument("contours: grid needs at least 2x2 cells");
  if (static_cast<Eigen::Index>(grid.rows.values.size()) != nr ||
      static_cast<Eigen::Index>(grid.cols.values.size()) != nc) {
    throw std::invalid_argument("contours: axis lengths do not match the value matrix");
  }
  const auto& ry = grid.rows.values;
  const auto& cx = grid.cols.values;

  auto point_on = [&](const EdgeId& e) -> Eigen::Vector2d {
    const auto [i, j, o] = e;
    const Eigen::Index i2 = o == 1 ? i + 1 : i;
    const Eigen::Index j2 = o == 0 ? j + 1 : j;
    const double v1 = v(i, j), v2 = v(i2, j2);
    const double t = v1 == v2 ? 0.5 : (level - v1) / (v2 - v1);
    return {cx[static_cast<std::size_t>(j)] + t * (cx[static_cast<std::size_t>(j2)] - cx[static_cast<std::size_t>(j)]),
            ry[static_cast<std::size_t>(i)] + t * (ry[static_cast<std::size_t>(i2)] - ry[static_cast<std::size_t>(i)])};
  };

  std::vector<EdgeSegment> segs;
  for (Eigen::Index i = 0; i + 1 < nr; ++i) {
    for (Eigen::Index j = 0; j + 1 < nc; ++j) {
      const double c00 = v(i, j), c01 = v(i, j + 1), c11 = v(i + 1, j + 1), c10 = v(i + 1, j);
      int mask = 0;
      if (c00 >= level) mask |= 1;
      if (c01 >= level) mask |= 2;
      if (c11 >= level) mask |= 4;
      if (c10 >= level) mask |= 8;
      if (mask == 0 || mask == 15) continue;
      const EdgeId bottom{i, j, 0}, right{i, j + 1, 1}, top{i + 1, j, 0}, left{i, j, 1};
      const bool centre_high = 0.25 * (c00 + c01 + c11 + c10) >= level;
      switch (mask) {
        case 1: case 14: segs.push_back({left, bottom}); break;
        case 2: case 13: segs.push_back({bottom, right}); break;
        case 3: case 12: segs.push_back({left, right}); break;
        case 4: case 11: segs.push_back({right, top}); break;
        case 6: case 9: segs.push_back({bottom, top}); break;
        case 7: case 8: segs.push_back({left, top}); break;
        case 5:
          if (centre_high) {
            segs.push_back({left, top});
            segs.push_back({bottom, right});
          } else {
            segs.push_back({left, bottom});
            segs.push_back({right, top});
          }
          break;
        case 10:
          if (centre_high) {
            segs.push_back({left, bottom});
            segs.push_back({right, top});
          } else {
            segs.push_back({left, top});
            segs.push_back({bottom, right});
          }
          break;
        default: break;
      }
    }
  }

  // chain segments sharing edges into polylines
  std::multimap<EdgeId, std::size_t> at;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    at.emplace(segs[k].a, k);
    at.emplace(segs[k].b, k);
  }
  std::vector<bool> used(segs.size(), false);
  auto next_from = [&](const EdgeId& e) -> std::ptrdiff_t {
    auto [lo, hi] = at.equal_range(e);
    for (auto it = lo; it != hi; ++it) {
      if (!used[it->second]) return static_cast<std::ptrdiff_t>(it->second);
    }
    return -1;
  };
  auto walk = [&](EdgeId from, std::vector<EdgeId>& chain) {
    for (;;) {
      const std::ptrdiff_t k = next_from(from);
      if (k < 0) return;
      used[static_cast<std::size_t>(k)] = true;
      const EdgeSegment& s = segs[static_cast<std::size_t>(k)];
      from = s.a == from ? s.b : s.a;
      chain.push_back(from);
    }
  };

  std::vector<ContourLine> lines;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    if (used[k]) continue;
    used[k] = true;
    std::vector<EdgeId> fwd{segs[k].a, segs[k].b};
    walk(segs[k].b, fwd);
    std::vector<EdgeId> back;
    walk(segs[k].a, back);
    std::vector<EdgeId> chain(back.rbegin(), back.rend());
    chain.insert(chain.end(), fwd.begin(), fwd.end());
    ContourLine line;
    line.level = level;
    line.closed = chain.size() > 2 && chain.front() == chain.back();
    for (const auto& e : chain) line.points.push_back(point_on(e));
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace ereem

#pragma once

// Slow, obviously-correct reference computations shared by the unit tests
// and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "kiae/data.hpp"
#include "kiae/eval.hpp"
#include "kiae/numerics.hpp"

namespace kiae::oracle {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

// Greedy Ward from scratch: every step recomputes the exact increase in
// within-cluster sum of squares for every live pair of slots.
inline std::vector<Merge> ward(const Matrix& x, std::size_t k) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  auto centroid = [&](const std::vector<std::size_t>& m) {
    std::vector<double> c(d, 0.0);
    for (auto i : m)
      for (std::size_t t = 0; t < d; ++t) c[t] += x(i, t);
    for (auto& v : c) v /= static_cast<double>(m.size());
    return c;
  };
  std::vector<Merge> merges;
  for (std::size_t live = n; live > k; --live) {
    Merge best{0, 0, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < n; ++i) {
      if (members[i].empty()) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (members[j].empty()) continue;
        double a = static_cast<double>(members[i].size()), b = static_cast<double>(members[j].size());
        double cost = a * b / (a + b) * sq_dist(centroid(members[i]), centroid(members[j]));
        if (cost < best.cost) best = {i, j, cost};
      }
    }
    members[best.left].insert(members[best.left].end(), members[best.right].begin(),
                              members[best.right].end());
    members[best.right].clear();
    merges.push_back(best);
  }
  return merges;
}

// Per-position recombination: collect the value every covering window gives
// the position, in window order, then take the mean (continuous) or the most
// frequent rounded value, earliest first on ties (categorical).
inline std::vector<double> aggregate(const WindowPlan& plan,
                                     const std::vector<std::vector<double>>& values,
                                     const std::vector<FeatureKind>& kinds) {
  std::vector<double> out(plan.sample_length);
  for (std::size_t p = 0; p < plan.sample_length; ++p) {
    std::vector<double> seen;
    const std::size_t idx = p + plan.left_pad;
    for (std::size_t w = 0; w < plan.windows.size(); ++w)
      if (idx >= plan.windows[w].start && idx < plan.windows[w].end)
        seen.push_back(values[w][idx - plan.windows[w].start]);
    if (seen.empty()) {
      out[p] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    if (kinds[p] == FeatureKind::continuous) {
      double s = 0.0;
      for (double v : seen) s += v;
      out[p] = s / static_cast<double>(seen.size());
    } else {
      std::vector<std::pair<double, int>> tally;
      for (double v : seen) {
        double r = std::round(v);
        auto it = std::find_if(tally.begin(), tally.end(), [&](auto& t) { return t.first == r; });
        if (it == tally.end()) tally.push_back({r, 1});
        else ++it->second;
      }
      auto best = tally.front();
      for (auto& t : tally)
        if (t.second > best.second) best = t;
      out[p] = best.first;
    }
  }
  return out;
}

// True when every position of the padded sample lies inside some window.
inline bool covers(const WindowPlan& plan) {
  for (std::size_t p = 0; p < plan.padded_length(); ++p) {
    bool hit = false;
    for (const auto& w : plan.windows) hit = hit || (p >= w.start && p < w.end);
    if (!hit) return false;
  }
  return true;
}

}  // namespace kiae::oracle

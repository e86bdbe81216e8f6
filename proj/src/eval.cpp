#include "kiae/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kiae/error.hpp"
#include "kiae/kernels.hpp"

namespace kiae {

// ---------------------------------------------------------------------------
// Ward clustering

namespace {

class CondensedMatrix {
 public:
  explicit CondensedMatrix(std::size_t n) : n_(n), values_(n * (n > 0 ? n - 1 : 0) / 2) {}
  double& operator()(std::size_t i, std::size_t j) { return values_[index(i, j)]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[index(i, j)]; }

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return i * n_ - i * (i + 1) / 2 + (j - i - 1);
  }
  std::size_t n_;
  std::vector<double> values_;
};

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

}  // namespace

ClusterAssignment ward_cluster(const Matrix& points, std::size_t k) {
  const std::size_t n = points.rows();
  if (k < 1 || k > n) {
    throw DomainError("ward_cluster: need 1 <= K <= n, got K=" + std::to_string(k) +
                      " n=" + std::to_string(n));
  }
  CondensedMatrix cost(n);
  {
    std::vector<double> sq(n * n);
    kernels::pairwise_sq_dist(points.values(), n, points.cols(), sq);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) cost(i, j) = 0.5 * sq[i * n + j];
  }

  std::vector<std::size_t> size(n, 1);
  std::vector<char> active(n, 1);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};

  // Row cache: nearest active slot j > i, lowest j among equal costs.
  std::vector<std::size_t> nn(n, kNone);
  std::vector<double> nn_cost(n, std::numeric_limits<double>::infinity());
  auto refresh = [&](std::size_t i) {
    nn[i] = kNone;
    nn_cost[i] = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!active[j]) continue;
      double c = cost(i, j);
      if (c < nn_cost[i]) {
        nn_cost[i] = c;
        nn[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  ClusterAssignment out;
  out.k = k;
  out.merges.reserve(n - k);
  for (std::size_t step = 0; step + k < n; ++step) {
    std::size_t a = kNone;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || nn[i] == kNone) continue;
      if (a == kNone || nn_cost[i] < nn_cost[a]) a = i;
    }
    const std::size_t b = nn[a];
    const double merge_cost = nn_cost[a];
    out.merges.push_back({a, b, merge_cost});

    const double na = static_cast<double>(size[a]);
    const double nb = static_cast<double>(size[b]);
    for (std::size_t m = 0; m < n; ++m) {
      if (!active[m] || m == a || m == b) continue;
      const double nm = static_cast<double>(size[m]);
      cost(m, a) = ((na + nm) * cost(m, a) + (nb + nm) * cost(m, b) - nm * merge_cost) /
                   (na + nb + nm);
    }
    active[b] = 0;
    size[a] += size[b];
    members[a].insert(members[a].end(), members[b].begin(), members[b].end());
    members[b].clear();
    nn[b] = kNone;

    refresh(a);
    for (std::size_t m = 0; m < a; ++m) {
      if (!active[m]) continue;
      if (nn[m] == a || nn[m] == b) {
        refresh(m);
      } else if (cost(m, a) < nn_cost[m] || (cost(m, a) == nn_cost[m] && a < nn[m])) {
        nn_cost[m] = cost(m, a);
        nn[m] = a;
      }
    }
    for (std::size_t m = a + 1; m < b; ++m)
      if (active[m] && nn[m] == b) refresh(m);
  }

  out.cluster.assign(n, -1);
  int next = 0;
  std::vector<int> slot_label(n, -1);
  std::vector<std::size_t> owner(n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t p : members[s]) owner[p] = s;
  for (std::size_t p = 0; p < n; ++p) {
    std::size_t s = owner[p];
    if (slot_label[s] < 0) slot_label[s] = next++;
    out.cluster[p] = slot_label[s];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Misclassification

namespace {

Matrix confusion(std::span<const int> predicted, std::span<const int> labels, std::size_t k) {
  if (predicted.size() != labels.size())
    throw DomainError("misclassification: prediction and label counts differ");
  if (predicted.empty()) throw DomainError("misclassification: no samples");
  Matrix c(k, k);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] < 0 || static_cast<std::size_t>(predicted[i]) >= k || labels[i] < 0 ||
        static_cast<std::size_t>(labels[i]) >= k) {
      throw DomainError("misclassification: index outside 0..K-1 at sample " + std::to_string(i));
    }
    c(static_cast<std::size_t>(predicted[i]), static_cast<std::size_t>(labels[i])) += 1.0;
  }
  return c;
}

Misclassification finish(const Matrix& c, std::vector<int> map, std::size_t total) {
  double matched = 0.0;
  for (std::size_t r = 0; r < map.size(); ++r) matched += c(r, static_cast<std::size_t>(map[r]));
  Misclassification m;
  m.errors = total - static_cast<std::size_t>(matched);
  m.rate = static_cast<double>(m.errors) / static_cast<double>(total);
  m.best_map = std::move(map);
  return m;
}

}  // namespace

Misclassification misclassification_enumerate(std::span<const int> predicted,
                                              std::span<const int> labels, std::size_t k) {
  Matrix c = confusion(predicted, labels, k);
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_matched = -1.0;
  do {
    double matched = 0.0;
    for (std::size_t r = 0; r < k; ++r) matched += c(r, static_cast<std::size_t>(perm[r]));
    if (matched > best_matched) {
      best_matched = matched;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return finish(c, best, predicted.size());
}

std::vector<std::size_t> max_weight_assignment(const Matrix& weights) {
  const std::size_t n = weights.rows();
  if (weights.cols() != n) throw ShapeError("max_weight_assignment: matrix must be square");
  double top = 0.0;
  for (double w : weights.values()) top = std::max(top, w);
  // Minimise (top - w) with the potentials form of the Hungarian method; rows
  // and columns are 1-based inside, index 0 is the virtual start column.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t row = 1; row <= n; ++row) {
    match[0] = row;
    std::size_t col0 = 0;
    std::vector<double> min_v(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      std::size_t r0 = match[col0], col1 = 0;
      double delta = inf;
      for (std::size_t col = 1; col <= n; ++col) {
        if (used[col]) continue;
        double cur = (top - weights(r0 - 1, col - 1)) - u[r0] - v[col];
        if (cur < min_v[col]) {
          min_v[col] = cur;
          way[col] = col0;
        }
        if (min_v[col] < delta) {
          delta = min_v[col];
          col1 = col;
        }
      }
      for (std::size_t col = 0; col <= n; ++col) {
        if (used[col]) {
          u[match[col]] += delta;
          v[col] -= delta;
        } else {
          min_v[col] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      std::size_t col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t col = 1; col <= n; ++col) assignment[match[col] - 1] = col - 1;
  return assignment;
}

Misclassification misclassification_assignment(std::span<const int> predicted,
                                               std::span<const int> labels, std::size_t k) {
  Matrix c = confusion(predicted, labels, k);
  auto assignment = max_weight_assignment(c);
  std::vector<int> map(assignment.begin(), assignment.end());
  return finish(c, map, predicted.size());
}

Misclassification misclassification(std::span<const int> predicted, std::span<const int> labels,
                                    std::size_t k) {
  if (k <= 8) return misclassification_enumerate(predicted, labels, k);
  return misclassification_assignment(predicted, labels, k);
}

Misclassification misclassification(const ClusterAssignment& predicted,
                                    const std::vector<std::string>& predicted_ids,
                                    std::span<const int> labels,
                                    const std::vector<std::string>& label_ids) {
  if (predicted_ids != label_ids || predicted.cluster.size() != predicted_ids.size())
    throw DomainError("misclassification: predictions and labels cover different samples");
  std::vector<int> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() != predicted.k) {
    throw DomainError("misclassification: " + std::to_string(predicted.k) + " clusters but " +
                      std::to_string(distinct.size()) + " label classes");
  }
  return misclassification(predicted.cluster, labels, predicted.k);
}

// ---------------------------------------------------------------------------
// PCA

PcaModel pca_fit(const Matrix& points, std::size_t components) {
  const std::size_t n = points.rows();
  const std::size_t r = points.cols();
  if (n < 2) throw DomainError("pca: need at least 2 points");
  if (components > std::min(n, r)) {
    throw DomainError("pca: " + std::to_string(components) + " components requested from " +
                      points.shape_string() + " points");
  }
  PcaModel model;
  model.mean.assign(r, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < r; ++c) model.mean[c] += points(i, c);
  for (auto& m : model.mean) m /= static_cast<double>(n);

  Matrix centred(n, r);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < r; ++c) centred(i, c) = points(i, c) - model.mean[c];
  Matrix cov = matmul(centred.transposed(), centred);
  for (auto& v : cov.values()) v /= static_cast<double>(n - 1);
  // Exact symmetry for the eigensolver.
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = i + 1; j < r; ++j) cov(j, i) = cov(i, j);

  auto eig = sym_eigen(cov);
  model.eigenvalues = eig.values;
  model.components = Matrix(r, components);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t c = 0; c < components; ++c) model.components(i, c) = eig.vectors(i, c);
  return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& points) {
  if (points.cols() != model.mean.size()) {
    throw ShapeError("pca_transform: points have " + std::to_string(points.cols()) +
                     " columns, model expects " + std::to_string(model.mean.size()));
  }
  Matrix centred(points.rows(), points.cols());
  for (std::size_t i = 0; i < points.rows(); ++i)
    for (std::size_t c = 0; c < points.cols(); ++c) centred(i, c) = points(i, c) - model.mean[c];
  return matmul(centred, model.components);
}

PcaProjection pca_project(const Matrix& points, std::size_t components) {
  auto model = pca_fit(points, components);
  PcaProjection out;
  out.projected = pca_transform(model, points);
  out.eigenvalues.assign(model.eigenvalues.begin(),
                         model.eigenvalues.begin() + static_cast<std::ptrdiff_t>(components));
  return out;
}

// ---------------------------------------------------------------------------
// Subsampling and centroids

std::vector<std::size_t> setcover_subsample(const Matrix& points, std::size_t m) {
  const std::size_t n = points.rows();
  if (m > n) {
    throw DomainError("setcover_subsample: cannot pick " + std::to_string(m) + " of " +
                      std::to_string(n) + " points");
  }
  std::vector<std::size_t> chosen;
  if (m == 0) return chosen;
  const std::size_t dim = points.cols();
  auto dist2 = [&](std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t c = 0; c < dim; ++c) s += (x[c] - y[c]) * (x[c] - y[c]);
    return s;
  };

  std::vector<double> mean(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < dim; ++c) mean[c] += points(i, c);
  for (auto& v : mean) v /= static_cast<double>(n);
  std::size_t anchor = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double d = dist2(points.row(i), mean);
    if (d < best) {
      best = d;
      anchor = i;
    }
  }

  std::vector<double> reach(n);
  std::vector<char> taken(n, 0);
  for (std::size_t i = 0; i < n; ++i) reach[i] = dist2(points.row(i), points.row(anchor));
  while (chosen.size() < m) {
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (pick == n || reach[i] > reach[pick]) pick = i;
    }
    chosen.push_back(pick);
    taken[pick] = 1;
    // The anchor only seeds the first pick; later distances are to chosen points.
    for (std::size_t i = 0; i < n; ++i) {
      double d = dist2(points.row(i), points.row(pick));
      reach[i] = chosen.size() == 1 ? d : std::min(reach[i], d);
    }
  }
  return chosen;
}

CentroidReport centroid_report(const Matrix& latent, std::span<const int> cluster, std::size_t k) {
  if (cluster.size() != latent.rows())
    throw DomainError("centroid_report: assignment does not cover every embedded sample");
  const std::size_t r = latent.cols();
  CentroidReport out{Matrix(k, r), Matrix(k, k)};
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    if (cluster[i] < 0 || static_cast<std::size_t>(cluster[i]) >= k)
      throw DomainError("centroid_report: cluster index out of range");
    auto c = static_cast<std::size_t>(cluster[i]);
    ++counts[c];
    for (std::size_t d = 0; d < r; ++d) out.centroids(c, d) += latent(i, d);
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) throw DomainError("centroid_report: cluster " + std::to_string(c) + " is empty");
    for (std::size_t d = 0; d < r; ++d) out.centroids(c, d) /= static_cast<double>(counts[c]);
  }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b) {
      double s = 0.0;
      for (std::size_t d = 0; d < r; ++d) {
        double diff = out.centroids(a, d) - out.centroids(b, d);
        s += diff * diff;
      }
      out.distances(a, b) = out.distances(b, a) = std::sqrt(s);
    }
  return out;
}

}  // namespace kiae

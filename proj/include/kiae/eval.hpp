#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kiae/numerics.hpp"

namespace kiae {

struct Merge {
  std::size_t left;   // surviving slot (lower index)
  std::size_t right;  // absorbed slot
  double cost;        // increase in within-cluster sum of squares
  bool operator==(const Merge&) const = default;
};

struct ClusterAssignment {
  std::vector<int> cluster;  // per sample, 0..k-1 in order of first appearance
  std::size_t k = 0;
  std::vector<Merge> merges;  // n - k entries
};

/// Agglomerative Ward clustering down to k clusters.
///
/// Clusters live in slots 0..n-1; merging slots i < j keeps the result in i.
/// Costs start at ||x_i - x_j||^2 / 2 and are updated with the Lance-Williams
/// Ward recurrence, so each recorded cost is the exact increase in
/// within-cluster sum of squares. Equal costs go to the smallest (i, j).
ClusterAssignment ward_cluster(const Matrix& points, std::size_t k);

struct Misclassification {
  double rate = 0.0;
  std::size_t errors = 0;
  std::vector<int> best_map;  // cluster index -> label
};

/// Minimum error rate over all bijections clusters -> labels. Uses exhaustive
/// K! enumeration for K <= 8 and optimal assignment above that.
Misclassification misclassification(std::span<const int> predicted, std::span<const int> labels,
                                    std::size_t k);
Misclassification misclassification_enumerate(std::span<const int> predicted,
                                              std::span<const int> labels, std::size_t k);
Misclassification misclassification_assignment(std::span<const int> predicted,
                                               std::span<const int> labels, std::size_t k);
/// Checks that both sides describe the same samples before scoring.
Misclassification misclassification(const ClusterAssignment& predicted,
                                    const std::vector<std::string>& predicted_ids,
                                    std::span<const int> labels,
                                    const std::vector<std::string>& label_ids);

/// Maximum-weight perfect matching on a square matrix (Hungarian method).
/// Returns the column assigned to each row.
std::vector<std::size_t> max_weight_assignment(const Matrix& weights);

struct PcaModel {
  std::vector<double> mean;
  Matrix components;                // r x c, unit columns
  std::vector<double> eigenvalues;  // all r, sorted by |value| descending
};

/// Covariance uses the 1/(n-1) normalisation.
PcaModel pca_fit(const Matrix& points, std::size_t components);
Matrix pca_transform(const PcaModel& model, const Matrix& points);

struct PcaProjection {
  Matrix projected;
  std::vector<double> eigenvalues;  // of the kept components
};
PcaProjection pca_project(const Matrix& points, std::size_t components);

/// Farthest-first traversal. The point nearest the mean anchors the search;
/// the first pick is the point farthest from that anchor and every later pick
/// maximises its distance to the chosen set. Ties go to the lowest index.
std::vector<std::size_t> setcover_subsample(const Matrix& points, std::size_t m);

struct CentroidReport {
  Matrix centroids;  // k x r
  Matrix distances;  // k x k Euclidean
};

CentroidReport centroid_report(const Matrix& latent, std::span<const int> cluster, std::size_t k);

}  // namespace kiae

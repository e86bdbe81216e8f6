#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kiae/data.hpp"
#include "kiae/numerics.hpp"

namespace kiae {

/// Expert pairwise-distance matrix with a known/missing mask. The diagonal is
/// always known and zero; known entries are symmetric, finite and >= 0.
class KnowledgeMatrix {
 public:
  KnowledgeMatrix() = default;
  /// All off-diagonal entries missing.
  explicit KnowledgeMatrix(std::size_t n);
  /// All entries known. Throws DomainError if `entries` breaks an invariant.
  static KnowledgeMatrix fully_known(Matrix entries);

  std::size_t size() const { return n_; }
  bool known(std::size_t i, std::size_t j) const { return known_[i * n_ + j] != 0; }
  double at(std::size_t i, std::size_t j) const { return entries_(i, j); }
  const Matrix& entries() const { return entries_; }

  /// Sets both (i, j) and (j, i).
  void set(std::size_t i, std::size_t j, double value);
  /// Marks both (i, j) and (j, i) missing. The diagonal cannot be cleared.
  void clear(std::size_t i, std::size_t j);

  std::size_t known_pair_count() const;    // unordered, off-diagonal
  std::size_t missing_pair_count() const;  // unordered, off-diagonal
  bool fully_known() const { return missing_pair_count() == 0; }

  void validate() const;
  bool operator==(const KnowledgeMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  Matrix entries_;
  std::vector<std::uint8_t> known_;
};

/// Same-category draws come from [alpha1, alpha2); a cross-category pair of
/// classes (x, y) draws from [gamma(x, y), gamma(x, y) + 1).
struct GammaTable {
  double alpha1 = 0.0;
  double alpha2 = 1.0;
  Matrix gamma;  // K x K, symmetric, diagonal unused

  static GammaTable uniform(std::size_t k, double value = 1.0);
  void set(std::size_t x, std::size_t y, double value);
  /// Requires alpha1 < alpha2 and gamma(x, y) = gamma(y, x) >= alpha2.
  void validate() const;
};

struct PairMetric {
  std::string name;
  std::function<double(std::span<const double>, std::span<const double>)> distance;
};
using PairMetricSet = std::vector<PairMetric>;

/// Euclidean, Manhattan and cosine distance.
PairMetricSet default_pair_metrics();

KnowledgeMatrix build_from_labels(const Dataset& ds, const GammaTable& gamma, Rng& rng);

/// Completes the missing entries with a k-nearest-neighbour regressor.
///
/// Every known off-diagonal pair (i, j) becomes a training point with features
/// (g_1(m_i, m_j), ..., g_M(m_i, m_j)) and target M_T(i, j). A missing pair is
/// predicted as the mean target of its k nearest training points under
/// Euclidean distance in feature space, ties going to the lower pair index
/// (pairs are numbered row-major over i < j). Known entries are returned
/// untouched. Throws TrainingError with fewer than max(k, 10) known pairs.
KnowledgeMatrix fill_missing_dr(const KnowledgeMatrix& mt, const Dataset& ds,
                                const PairMetricSet& metrics, std::size_t k_neighbors = 5);

/// Off-diagonal entries uniform in [0, 1), symmetric, all known.
KnowledgeMatrix corrupt_noisy(std::size_t n, Rng& rng);

/// Principal submatrix at the given (distinct, in-range) positions.
KnowledgeMatrix subset(const KnowledgeMatrix& mt, const std::vector<std::size_t>& positions);

/// n x n CSV without a header; an empty cell is a missing entry. An empty
/// diagonal cell is read as 0. Asymmetric known cells are rejected.
KnowledgeMatrix load_knowledge_csv(const std::string& path);
void write_knowledge_csv(const KnowledgeMatrix& mt, const std::string& path);

}  // namespace kiae

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kiae/numerics.hpp"

namespace kiae {

enum class FeatureKind { continuous, categorical };

/// Tabular samples, one row per sample, with optional dense category labels.
struct Dataset {
  Matrix samples;                         // n x d
  std::vector<std::string> sample_ids;    // unique
  std::vector<int> labels;                // empty, or one of 0..num_classes-1 per sample
  std::size_t num_classes = 0;
  std::vector<std::string> label_names;   // original label text per class index
  std::vector<std::string> feature_names;
  std::vector<FeatureKind> feature_kinds;

  std::size_t size() const { return samples.rows(); }
  std::size_t dim() const { return samples.cols(); }
  bool has_labels() const { return !labels.empty(); }

  /// Rows at the given positions, in that order. Class count and names carry over.
  Dataset select(const std::vector<std::size_t>& positions) const;

  /// Checks the structural invariants; throws FormatError/DomainError.
  void validate() const;
};

struct CsvOptions {
  std::optional<std::string> label_column;
  std::optional<std::string> id_column;
  std::vector<std::string> categorical_columns;
};

/// Reads a comma-delimited file with a header row. Feature cells must parse as
/// reals; the label column, if named, is mapped to dense indices in order of
/// first appearance.
Dataset load_csv(const std::string& path, const CsvOptions& options = {});

/// Writes id (when `with_ids`), features, then `label` when labelled. Values use
/// the shortest round-trip representation, so reloading is bit-exact.
void write_csv(const Dataset& ds, const std::string& path, bool with_ids = false);

enum class SyntheticProfile { economics_like, physics_like, biology_like };

struct ProfileDefaults {
  std::size_t n;
  std::size_t d;
  std::size_t k;
  double separation;
};

ProfileDefaults profile_defaults(SyntheticProfile profile);
SyntheticProfile parse_profile(const std::string& name);
std::string profile_name(SyntheticProfile profile);

/// K unit-variance Gaussian clusters. Class means sit on scaled simplex
/// vertices (pairwise distance = separation) when d >= K, otherwise evenly on
/// the first axis. Labels cycle 0..K-1 so class counts differ by at most one.
Dataset generate_synthetic(SyntheticProfile profile, std::size_t n, std::size_t d,
                           std::size_t k, double separation, Rng& rng);

struct Window {
  std::size_t start;
  std::size_t end;
  bool operator==(const Window&) const = default;
};

/// Sliding-window decomposition of one sample. Window coordinates refer to the
/// sample after `left_pad` zeros are prepended (non-zero only when the sample
/// is shorter than the window).
struct WindowPlan {
  std::size_t sample_length = 0;
  std::size_t window_length = 0;
  std::size_t jump = 0;
  std::size_t left_pad = 0;
  std::vector<Window> windows;

  std::size_t padded_length() const { return sample_length + left_pad; }
};

WindowPlan plan_windows(std::size_t sample_length, std::size_t window_length, std::size_t jump);

enum class SplitMode { fit_all, train_test };

struct SplitSpec {
  SplitMode mode = SplitMode::train_test;
  double train_fraction = 0.8;
  std::size_t fold_count = 5;
  std::uint64_t seed = 0;
};

struct Fold {
  std::vector<std::size_t> train;       // dataset positions
  std::vector<std::size_t> validation;  // dataset positions
};

struct SplitResult {
  std::vector<std::size_t> train;  // ascending dataset positions
  std::vector<std::size_t> test;
  std::vector<Fold> folds;         // validation sets partition `train`
};

/// Seeded, label-stratified split with k folds over the training part.
SplitResult split(const Dataset& ds, const SplitSpec& spec);

}  // namespace kiae

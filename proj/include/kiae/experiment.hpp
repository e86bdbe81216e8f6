#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "kiae/data.hpp"
#include "kiae/knowledge.hpp"
#include "kiae/model.hpp"
#include "kiae/numerics.hpp"

namespace kiae {

enum class Variant { ae, kiae, noisy_kiae };
enum class SplitTag { fit, train, test };

std::string to_string(Variant v);
Variant parse_variant(const std::string& text);
std::string to_string(SplitTag s);
SplitTag parse_split_tag(const std::string& text);

struct DatasetSource {
  std::optional<std::string> csv_path;
  CsvOptions csv;
  std::optional<SyntheticProfile> profile;
  // Synthetic overrides; unset values come from the profile.
  std::optional<std::size_t> n;
  std::optional<std::size_t> d;
  std::optional<std::size_t> k;
  std::optional<double> separation;
};

struct GammaOverride {
  std::size_t x;
  std::size_t y;
  double value;
};

struct ExperimentSpec {
  std::string name;  // dataset column of results.csv; defaults to the source name
  DatasetSource dataset;
  std::vector<Variant> variants;
  std::vector<SplitTag> splits{SplitTag::fit, SplitTag::train, SplitTag::test};
  KiaeConfig model;  // input_dim is taken from the data; omega is per variant

  double alpha1 = 0.0;
  double alpha2 = 1.0;
  double gamma = 1.0;  // every cross-category pair unless overridden
  std::vector<GammaOverride> gamma_overrides;
  double known_fraction = 1.0;  // share of label-derived pairs kept before DR completion
  std::size_t dr_neighbors = 5;

  double train_fraction = 0.8;
  std::size_t folds = 5;
  std::size_t plot_points = 90;
  std::string out_dir = "kiae-out";
  std::optional<std::uint64_t> seed;

  /// Throws ConfigError for invalid combinations.
  void validate() const;
  GammaTable gamma_table(std::size_t k) const;
};

/// Reads a `key = value` file with [dataset], [knowledge], [model] and
/// [experiment] sections. `#` starts a comment. Relative CSV paths resolve
/// against the config file's directory.
ExperimentSpec parse_config(const std::string& path);
ExperimentSpec parse_config_text(const std::string& text, const std::string& origin = "<config>",
                                 const std::string& base_dir = "");

/// Only the [model] section of a config file; other sections are checked for
/// syntax but nothing is required.
KiaeConfig parse_model_config(const std::string& path);

/// Help text listing every key with its default.
std::string config_reference();

Dataset load_source(const DatasetSource& source, std::uint64_t seed);

/// Scatter plot: fill colour follows the predicted cluster, marker shape the
/// true label. Every pair of centroids is joined by a segment annotated with
/// their latent-space distance.
void emit_scatter(const Matrix& projected, std::span<const int> predicted,
                  std::span<const int> labels, const Matrix& centroids,
                  const Matrix& centroid_distances, const std::string& path);

struct ResultRow {
  std::string dataset;
  std::string variant;
  std::string split;
  double misclassification;
};

struct VariantOutcome {
  Variant variant;
  bool completed = false;
  std::string error;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<VariantOutcome> outcomes;
  bool all_completed() const;
};

enum class LogLevel { quiet, info, debug };
/// From KIAE_LOG (quiet|info|debug); info when unset or unrecognised.
LogLevel log_level_from_env();

/// Trains, clusters and scores every variant on every split, then writes
/// results.csv, embedding_<v>.csv, centroids_<v>.csv, scatter_<v>.svg and
/// run.log into spec.out_dir. A failing variant is logged and skipped.
ExperimentResult run_experiment(const ExperimentSpec& spec);

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path);
void write_embedding_csv(const LatentEmbedding& z, const Dataset& ds, const std::string& path);
Dataset load_embedding_csv(const std::string& path);

}  // namespace kiae

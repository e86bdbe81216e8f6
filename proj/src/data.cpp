#include "kiae/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "kiae/csv.hpp"
#include "kiae/error.hpp"

namespace kiae {

Dataset Dataset::select(const std::vector<std::size_t>& positions) const {
  Dataset out;
  out.samples = Matrix(positions.size(), dim());
  out.sample_ids.reserve(positions.size());
  for (std::size_t r = 0; r < positions.size(); ++r) {
    std::size_t src = positions.at(r);
    if (src >= size()) throw DomainError("Dataset::select: position out of range");
    std::copy(samples.row(src).begin(), samples.row(src).end(), out.samples.row(r).begin());
    out.sample_ids.push_back(sample_ids[src]);
    if (has_labels()) out.labels.push_back(labels[src]);
  }
  out.num_classes = num_classes;
  out.label_names = label_names;
  out.feature_names = feature_names;
  out.feature_kinds = feature_kinds;
  return out;
}

void Dataset::validate() const {
  if (sample_ids.size() != size()) throw FormatError("dataset: one id per sample required");
  std::set<std::string> seen(sample_ids.begin(), sample_ids.end());
  if (seen.size() != sample_ids.size()) throw FormatError("dataset: sample ids are not unique");
  if (feature_kinds.size() != dim()) throw FormatError("dataset: one feature kind per column");
  if (has_labels()) {
    if (labels.size() != size()) throw FormatError("dataset: one label per sample required");
    std::set<int> distinct(labels.begin(), labels.end());
    if (num_classes < 2 || distinct.size() != num_classes || *distinct.begin() != 0 ||
        *distinct.rbegin() != static_cast<int>(num_classes) - 1) {
      throw DomainError("dataset: labels must cover 0..K-1 with K >= 2");
    }
  }
  require_finite(samples.values(), "dataset");
}

// ---------------------------------------------------------------------------
// CSV

Dataset load_csv(const std::string& path, const CsvOptions& options) {
  auto lines = csv::read_lines(path);
  while (!lines.empty() && lines.back().find_first_not_of(" \t\r") == std::string::npos)
    lines.pop_back();
  if (lines.empty()) throw FormatError(path + ": missing header row");

  auto header = csv::split_line(lines[0]);
  auto find_column = [&](const std::optional<std::string>& name) -> std::ptrdiff_t {
    if (!name) return -1;
    auto it = std::find(header.begin(), header.end(), *name);
    if (it == header.end()) throw FormatError(path + ": no column named '" + *name + "'");
    return it - header.begin();
  };
  const std::ptrdiff_t label_col = find_column(options.label_column);
  const std::ptrdiff_t id_col = find_column(options.id_column);

  Dataset ds;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (static_cast<std::ptrdiff_t>(c) == label_col || static_cast<std::ptrdiff_t>(c) == id_col)
      continue;
    feature_cols.push_back(c);
    ds.feature_names.push_back(header[c]);
    bool categorical = std::find(options.categorical_columns.begin(),
                                 options.categorical_columns.end(),
                                 header[c]) != options.categorical_columns.end();
    ds.feature_kinds.push_back(categorical ? FeatureKind::categorical : FeatureKind::continuous);
  }
  for (const auto& name : options.categorical_columns) {
    if (std::find(ds.feature_names.begin(), ds.feature_names.end(), name) == ds.feature_names.end())
      throw FormatError(path + ": categorical column '" + name + "' is not a feature column");
  }

  std::vector<double> values;
  std::map<std::string, int> label_index;
  const std::size_t rows = lines.size() - 1;
  values.reserve(rows * feature_cols.size());
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto cells = csv::split_line(lines[r]);
    if (cells.size() != header.size()) {
      throw FormatError(path + ": row " + std::to_string(r + 1) + " has " +
                        std::to_string(cells.size()) + " cells, header has " +
                        std::to_string(header.size()));
    }
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      auto v = csv::parse_double(cells[feature_cols[f]]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(path + ": row " + std::to_string(r + 1) + ", column \"" +
                         header[feature_cols[f]] + "\": cannot parse '" +
                         cells[feature_cols[f]] + "' as a real number");
      }
      values.push_back(*v);
    }
    ds.sample_ids.push_back(id_col >= 0 ? cells[static_cast<std::size_t>(id_col)]
                                        : std::to_string(r - 1));
    if (label_col >= 0) {
      const auto& text = cells[static_cast<std::size_t>(label_col)];
      auto [it, inserted] = label_index.try_emplace(text, static_cast<int>(label_index.size()));
      if (inserted) ds.label_names.push_back(text);
      ds.labels.push_back(it->second);
    }
  }
  ds.samples = Matrix(rows, feature_cols.size(), std::move(values));
  ds.num_classes = label_index.size();
  ds.validate();
  return ds;
}

void write_csv(const Dataset& ds, const std::string& path, bool with_ids) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  std::vector<std::string> names = ds.feature_names;
  if (names.size() != ds.dim()) {
    names.clear();
    for (std::size_t c = 0; c < ds.dim(); ++c) names.push_back("f" + std::to_string(c));
  }
  bool first = true;
  auto sep = [&] {
    if (!first) out << ',';
    first = false;
  };
  if (with_ids) {
    sep();
    out << "id";
  }
  for (const auto& n : names) {
    sep();
    out << n;
  }
  if (ds.has_labels()) {
    sep();
    out << "label";
  }
  out << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    first = true;
    if (with_ids) {
      sep();
      out << ds.sample_ids[r];
    }
    for (double v : ds.samples.row(r)) {
      sep();
      out << csv::format_double(v);
    }
    if (ds.has_labels()) {
      sep();
      auto l = static_cast<std::size_t>(ds.labels[r]);
      out << (l < ds.label_names.size() ? ds.label_names[l] : std::to_string(l));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Synthetic data

ProfileDefaults profile_defaults(SyntheticProfile profile) {
  switch (profile) {
    case SyntheticProfile::economics_like: return {2000, 9, 4, 4.0};
    case SyntheticProfile::physics_like: return {2500, 33, 2, 4.0};
    case SyntheticProfile::biology_like: return {90, 512, 3, 10.0};
  }
  throw DomainError("unknown synthetic profile");
}

SyntheticProfile parse_profile(const std::string& name) {
  if (name == "economics_like") return SyntheticProfile::economics_like;
  if (name == "physics_like") return SyntheticProfile::physics_like;
  if (name == "biology_like") return SyntheticProfile::biology_like;
  throw DomainError("unknown synthetic profile '" + name +
                    "' (expected economics_like, physics_like or biology_like)");
}

std::string profile_name(SyntheticProfile profile) {
  switch (profile) {
    case SyntheticProfile::economics_like: return "economics_like";
    case SyntheticProfile::physics_like: return "physics_like";
    case SyntheticProfile::biology_like: return "biology_like";
  }
  return "unknown";
}

Dataset generate_synthetic(SyntheticProfile profile, std::size_t n, std::size_t d,
                           std::size_t k, double separation, Rng& rng) {
  if (k < 1) throw DomainError("generate_synthetic: need at least one cluster");
  if (n < k) {
    throw DomainError("generate_synthetic: n=" + std::to_string(n) + " is smaller than K=" +
                      std::to_string(k));
  }
  if (d < 1) throw DomainError("generate_synthetic: need d >= 1");
  if (!(separation >= 0.0)) throw DomainError("generate_synthetic: separation must be >= 0");

  Matrix means(k, d);
  if (d >= k) {
    const double offset = separation / std::sqrt(2.0);
    for (std::size_t c = 0; c < k; ++c) means(c, c) = offset;
  } else {
    for (std::size_t c = 0; c < k; ++c) means(c, 0) = separation * static_cast<double>(c);
  }

  Dataset ds;
  ds.samples = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto label = static_cast<int>(i % k);
    for (std::size_t f = 0; f < d; ++f)
      ds.samples(i, f) = means(static_cast<std::size_t>(label), f) + rng.normal();
    ds.labels.push_back(label);
    ds.sample_ids.push_back("s" + std::to_string(i));
  }
  ds.num_classes = k;
  for (std::size_t c = 0; c < k; ++c) ds.label_names.push_back(std::to_string(c));
  for (std::size_t f = 0; f < d; ++f) ds.feature_names.push_back("f" + std::to_string(f));
  ds.feature_kinds.assign(d, FeatureKind::continuous);
  if (k < 2) {
    // A single cluster is legal for generation but is not a labelled dataset.
    ds.labels.clear();
    ds.num_classes = 0;
    ds.label_names.clear();
  }
  (void)profile;
  return ds;
}

// ---------------------------------------------------------------------------
// Windows

WindowPlan plan_windows(std::size_t sample_length, std::size_t window_length, std::size_t jump) {
  if (window_length == 0) throw DomainError("plan_windows: window length must be >= 1");
  if (jump == 0) throw DomainError("plan_windows: jump must be >= 1");
  if (jump > window_length) {
    throw DomainError("plan_windows: jump " + std::to_string(jump) +
                      " exceeds window length " + std::to_string(window_length) +
                      "; positions between windows would be skipped");
  }
  if (sample_length == 0) throw DomainError("plan_windows: empty sample");

  WindowPlan plan;
  plan.sample_length = sample_length;
  plan.window_length = window_length;
  plan.jump = jump;
  if (sample_length <= window_length) {
    plan.left_pad = window_length - sample_length;
    plan.windows.push_back({0, window_length});
    return plan;
  }
  std::size_t start = 0;
  for (; start + window_length <= sample_length; start += jump)
    plan.windows.push_back({start, start + window_length});
  if (plan.windows.back().end < sample_length)
    plan.windows.push_back({sample_length - window_length, sample_length});
  return plan;
}

// ---------------------------------------------------------------------------
// Splits

namespace {

// Largest-remainder allocation of `total` across groups proportional to sizes.
std::vector<std::size_t> apportion(const std::vector<std::size_t>& sizes, double fraction,
                                   std::size_t total) {
  std::vector<std::size_t> take(sizes.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    double exact = fraction * static_cast<double>(sizes[g]);
    take[g] = static_cast<std::size_t>(std::floor(exact));
    assigned += take[g];
    remainders.push_back({exact - std::floor(exact), g});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i) {
    std::size_t g = remainders[i].second;
    if (take[g] < sizes[g]) {
      ++take[g];
      ++assigned;
    }
  }
  return take;
}

}  // namespace

SplitResult split(const Dataset& ds, const SplitSpec& spec) {
  const std::size_t n = ds.size();
  if (spec.mode == SplitMode::train_test &&
      !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw DomainError("split: train_fraction must lie in (0, 1)");
  }
  Rng rng(spec.seed);

  // Group positions by class (a single group when unlabelled), shuffled.
  std::size_t groups_count = ds.has_labels() ? ds.num_classes : 1;
  std::vector<std::vector<std::size_t>> groups(groups_count);
  for (std::size_t i = 0; i < n; ++i)
    groups[ds.has_labels() ? static_cast<std::size_t>(ds.labels[i]) : 0].push_back(i);
  for (auto& g : groups) rng.shuffle(std::span<std::size_t>(g));

  SplitResult result;
  std::vector<std::vector<std::size_t>> train_groups(groups_count);
  if (spec.mode == SplitMode::fit_all) {
    train_groups = groups;
  } else {
    std::vector<std::size_t> sizes;
    for (const auto& g : groups) sizes.push_back(g.size());
    auto total = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
    auto take = apportion(sizes, spec.train_fraction, total);
    for (std::size_t g = 0; g < groups_count; ++g) {
      train_groups[g].assign(groups[g].begin(), groups[g].begin() + static_cast<std::ptrdiff_t>(take[g]));
      result.test.insert(result.test.end(), groups[g].begin() + static_cast<std::ptrdiff_t>(take[g]),
                         groups[g].end());
    }
  }
  for (const auto& g : train_groups) result.train.insert(result.train.end(), g.begin(), g.end());
  std::sort(result.train.begin(), result.train.end());
  std::sort(result.test.begin(), result.test.end());

  if (spec.fold_count >= 2) {
    for (std::size_t g = 0; g < groups_count; ++g) {
      if (ds.has_labels() && train_groups[g].size() < spec.fold_count) {
        throw DomainError("split: stratification impossible, class " + std::to_string(g) +
                          " has " + std::to_string(train_groups[g].size()) +
                          " training samples for " + std::to_string(spec.fold_count) + " folds");
      }
    }
    if (result.train.size() < spec.fold_count)
      throw DomainError("split: fewer training samples than folds");
    result.folds.resize(spec.fold_count);
    std::size_t cursor = 0;
    for (const auto& g : train_groups)
      for (std::size_t pos : g) result.folds[cursor++ % spec.fold_count].validation.push_back(pos);
    for (auto& fold : result.folds) {
      std::sort(fold.validation.begin(), fold.validation.end());
      std::set_difference(result.train.begin(), result.train.end(), fold.validation.begin(),
                          fold.validation.end(), std::back_inserter(fold.train));
    }
  }
  return result;
}

}  // namespace kiae

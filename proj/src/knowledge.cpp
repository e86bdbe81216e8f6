#include "kiae/knowledge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>

#include "kiae/csv.hpp"
#include "kiae/error.hpp"
#include "kiae/kernels.hpp"

namespace kiae {

KnowledgeMatrix::KnowledgeMatrix(std::size_t n) : n_(n), entries_(n, n), known_(n * n, 0) {
  for (std::size_t i = 0; i < n; ++i) known_[i * n + i] = 1;
}

KnowledgeMatrix KnowledgeMatrix::fully_known(Matrix entries) {
  if (entries.rows() != entries.cols()) {
    throw DomainError("knowledge matrix must be square, got " + entries.shape_string());
  }
  KnowledgeMatrix mt(entries.rows());
  mt.entries_ = std::move(entries);
  std::fill(mt.known_.begin(), mt.known_.end(), 1);
  mt.validate();
  return mt;
}

void KnowledgeMatrix::set(std::size_t i, std::size_t j, double value) {
  if (i >= n_ || j >= n_) throw DomainError("knowledge matrix index out of range");
  if (i == j) {
    if (value != 0.0) throw DomainError("knowledge matrix diagonal must be zero");
    return;
  }
  if (!std::isfinite(value) || value < 0.0) {
    throw DomainError("knowledge matrix entries must be finite and >= 0");
  }
  entries_(i, j) = value;
  entries_(j, i) = value;
  known_[i * n_ + j] = 1;
  known_[j * n_ + i] = 1;
}

void KnowledgeMatrix::clear(std::size_t i, std::size_t j) {
  if (i >= n_ || j >= n_) throw DomainError("knowledge matrix index out of range");
  if (i == j) throw DomainError("knowledge matrix diagonal is always known");
  entries_(i, j) = 0.0;
  entries_(j, i) = 0.0;
  known_[i * n_ + j] = 0;
  known_[j * n_ + i] = 0;
}

std::size_t KnowledgeMatrix::known_pair_count() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j) count += known(i, j) ? 1 : 0;
  return count;
}

std::size_t KnowledgeMatrix::missing_pair_count() const {
  return n_ * (n_ > 0 ? n_ - 1 : 0) / 2 - known_pair_count();
}

void KnowledgeMatrix::validate() const {
  if (entries_.rows() != n_ || entries_.cols() != n_ || known_.size() != n_ * n_) {
    throw DomainError("knowledge matrix storage does not match its size");
  }
  for (std::size_t i = 0; i < n_; ++i) {
    if (!known(i, i) || entries_(i, i) != 0.0) {
      throw DomainError("knowledge matrix diagonal must be known and zero (row " +
                        std::to_string(i) + ")");
    }
    for (std::size_t j = i + 1; j < n_; ++j) {
      if (known(i, j) != known(j, i)) {
        throw DomainError("knowledge matrix mask is asymmetric at (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
      }
      if (!known(i, j)) continue;
      double v = entries_(i, j);
      if (v != entries_(j, i)) {
        throw DomainError("knowledge matrix is asymmetric at (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
      }
      if (!std::isfinite(v) || v < 0.0) {
        throw DomainError("knowledge matrix entry (" + std::to_string(i) + "," +
                          std::to_string(j) + ") must be finite and >= 0");
      }
    }
  }
}

// ---------------------------------------------------------------------------

GammaTable GammaTable::uniform(std::size_t k, double value) {
  GammaTable g;
  g.gamma = Matrix(k, k, value);
  for (std::size_t x = 0; x < k; ++x) g.gamma(x, x) = 0.0;
  return g;
}

void GammaTable::set(std::size_t x, std::size_t y, double value) {
  if (x >= gamma.rows() || y >= gamma.rows()) throw DomainError("gamma index out of range");
  gamma(x, y) = value;
  gamma(y, x) = value;
}

void GammaTable::validate() const {
  if (!(alpha1 < alpha2)) throw DomainError("gamma table: alpha1 must be below alpha2");
  if (gamma.rows() != gamma.cols()) throw DomainError("gamma table must be K x K");
  for (std::size_t x = 0; x < gamma.rows(); ++x)
    for (std::size_t y = x + 1; y < gamma.rows(); ++y) {
      if (gamma(x, y) != gamma(y, x))
        throw DomainError("gamma table is asymmetric at (" + std::to_string(x) + "," +
                          std::to_string(y) + ")");
      // The reference constants use gamma = alpha2 = 1, so equality is allowed.
      if (!(gamma(x, y) >= alpha2))
        throw DomainError("gamma(" + std::to_string(x) + "," + std::to_string(y) +
                          ") must be >= alpha2");
    }
}

PairMetricSet default_pair_metrics() {
  PairMetricSet set;
  set.push_back({"euclidean", [](std::span<const double> a, std::span<const double> b) {
                   double s = 0.0;
                   for (std::size_t t = 0; t < a.size(); ++t) s += (a[t] - b[t]) * (a[t] - b[t]);
                   return std::sqrt(s);
                 }});
  set.push_back({"manhattan", [](std::span<const double> a, std::span<const double> b) {
                   double s = 0.0;
                   for (std::size_t t = 0; t < a.size(); ++t) s += std::abs(a[t] - b[t]);
                   return s;
                 }});
  set.push_back({"cosine", [](std::span<const double> a, std::span<const double> b) {
                   if (std::equal(a.begin(), a.end(), b.begin(), b.end())) return 0.0;
                   double dot = 0.0, na = 0.0, nb = 0.0;
                   for (std::size_t t = 0; t < a.size(); ++t) {
                     dot += a[t] * b[t];
                     na += a[t] * a[t];
                     nb += b[t] * b[t];
                   }
                   if (na == 0.0 || nb == 0.0) return 1.0;
                   double c = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
                   return 1.0 - c;
                 }});
  return set;
}

KnowledgeMatrix build_from_labels(const Dataset& ds, const GammaTable& gamma, Rng& rng) {
  if (!ds.has_labels()) {
    throw DomainError("build_from_labels: dataset has unlabelled samples");
  }
  gamma.validate();
  if (gamma.gamma.rows() < ds.num_classes) {
    throw DomainError("build_from_labels: gamma table covers " +
                      std::to_string(gamma.gamma.rows()) + " classes, dataset has " +
                      std::to_string(ds.num_classes));
  }
  const std::size_t n = ds.size();
  KnowledgeMatrix mt(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      auto x = static_cast<std::size_t>(ds.labels[i]);
      auto y = static_cast<std::size_t>(ds.labels[j]);
      double lo = x == y ? gamma.alpha1 : gamma.gamma(x, y);
      double hi = x == y ? gamma.alpha2 : gamma.gamma(x, y) + 1.0;
      mt.set(i, j, uniform_one(rng, lo, hi));
    }
  }
  return mt;
}

KnowledgeMatrix fill_missing_dr(const KnowledgeMatrix& mt, const Dataset& ds,
                                const PairMetricSet& metrics, std::size_t k_neighbors) {
  const std::size_t n = mt.size();
  if (ds.size() != n) {
    throw ShapeError("fill_missing_dr: matrix is " + std::to_string(n) + "x" +
                     std::to_string(n) + " but dataset has " + std::to_string(ds.size()) +
                     " samples");
  }
  if (mt.fully_known()) return mt;
  if (metrics.empty()) throw DomainError("fill_missing_dr: need at least one pair metric");
  if (k_neighbors == 0) throw DomainError("fill_missing_dr: k_neighbors must be >= 1");
  const std::size_t minimum = std::max<std::size_t>(k_neighbors, 10);
  const std::size_t known = mt.known_pair_count();
  if (known < minimum) {
    throw TrainingError("fill_missing_dr: " + std::to_string(known) +
                        " known pairs, the regressor needs at least " + std::to_string(minimum));
  }

  const std::size_t dim = metrics.size();
  std::vector<double> train_features, targets, query_features;
  std::vector<std::pair<std::size_t, std::size_t>> queries;
  train_features.reserve(known * dim);
  targets.reserve(known);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      auto& dest = mt.known(i, j) ? train_features : query_features;
      for (const auto& metric : metrics) dest.push_back(metric.distance(ds.samples.row(i), ds.samples.row(j)));
      if (mt.known(i, j))
        targets.push_back(mt.at(i, j));
      else
        queries.emplace_back(i, j);
    }
  }
  require_finite(train_features, "fill_missing_dr features");
  require_finite(query_features, "fill_missing_dr features");

  std::vector<double> predictions(queries.size());
  kernels::knn_mean(query_features, queries.size(), train_features, targets.size(), dim, targets,
                    k_neighbors, predictions);

  KnowledgeMatrix out = mt;
  for (std::size_t q = 0; q < queries.size(); ++q)
    out.set(queries[q].first, queries[q].second, std::max(0.0, predictions[q]));
  return out;
}

KnowledgeMatrix corrupt_noisy(std::size_t n, Rng& rng) {
  if (n < 2) throw DomainError("corrupt_noisy: need n >= 2");
  KnowledgeMatrix mt(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) mt.set(i, j, uniform_one(rng, 0.0, 1.0));
  return mt;
}

KnowledgeMatrix subset(const KnowledgeMatrix& mt, const std::vector<std::size_t>& positions) {
  std::vector<std::uint8_t> used(mt.size(), 0);
  for (std::size_t p : positions) {
    if (p >= mt.size()) {
      throw DomainError("subset: position " + std::to_string(p) + " out of range for size " +
                        std::to_string(mt.size()));
    }
    if (used[p]) throw DomainError("subset: duplicate position " + std::to_string(p));
    used[p] = 1;
  }
  KnowledgeMatrix out(positions.size());
  for (std::size_t a = 0; a < positions.size(); ++a)
    for (std::size_t b = a + 1; b < positions.size(); ++b)
      if (mt.known(positions[a], positions[b])) out.set(a, b, mt.at(positions[a], positions[b]));
  return out;
}

KnowledgeMatrix load_knowledge_csv(const std::string& path) {
  auto lines = csv::read_lines(path);
  while (!lines.empty() && lines.back().find_first_not_of(" \t\r") == std::string::npos)
    lines.pop_back();
  const std::size_t n = lines.size();
  if (n == 0) throw FormatError(path + ": empty knowledge matrix");
  std::vector<std::vector<std::optional<double>>> cells(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto fields = csv::split_line(lines[i]);
    if (fields.size() != n) {
      throw FormatError(path + ": row " + std::to_string(i + 1) + " has " +
                        std::to_string(fields.size()) + " cells, expected " + std::to_string(n));
    }
    for (std::size_t j = 0; j < n; ++j) {
      const auto& text = fields[j];
      if (text.find_first_not_of(" \t") == std::string::npos) {
        cells[i].push_back(std::nullopt);
        continue;
      }
      auto v = csv::parse_double(text);
      if (!v) {
        throw ParseError(path + ": row " + std::to_string(i + 1) + ", column " +
                         std::to_string(j + 1) + ": cannot parse '" + text + "'");
      }
      cells[i].push_back(v);
    }
  }
  KnowledgeMatrix mt(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (cells[i][i] && *cells[i][i] != 0.0) {
      throw DomainError(path + ": diagonal entry " + std::to_string(i + 1) + " is not zero");
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& a = cells[i][j];
      const auto& b = cells[j][i];
      if (a.has_value() != b.has_value() || (a && *a != *b)) {
        throw DomainError(path + ": entries (" + std::to_string(i + 1) + "," +
                          std::to_string(j + 1) + ") and (" + std::to_string(j + 1) + "," +
                          std::to_string(i + 1) + ") disagree");
      }
      if (a) mt.set(i, j, *a);
    }
  }
  return mt;
}

void write_knowledge_csv(const KnowledgeMatrix& mt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (std::size_t i = 0; i < mt.size(); ++i) {
    for (std::size_t j = 0; j < mt.size(); ++j) {
      if (j > 0) out << ',';
      if (mt.known(i, j)) out << csv::format_double(mt.at(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace kiae

#include "kiae/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <vector>

#ifdef KIAE_HAVE_OPENMP
#include <omp.h>
#endif

namespace kiae::kernels {

namespace {

std::atomic<bool> g_parallel{
#ifdef KIAE_HAVE_OPENMP
    true
#else
    false
#endif
};

inline double gemm_cell(const double* a_row, const double* b, std::size_t k, std::size_t n,
                        std::size_t j) {
  double s = 0.0;
  for (std::size_t p = 0; p < k; ++p) s += a_row[p] * b[p * n + j];
  return s;
}

inline double sq_dist(const double* x, const double* y, std::size_t dim) {
  double s = 0.0;
  for (std::size_t t = 0; t < dim; ++t) {
    double diff = x[t] - y[t];
    s += diff * diff;
  }
  return s;
}

// One k-NN query. scratch holds (distance, index) pairs for every reference.
double knn_one(const double* q, std::span<const double> refs, std::size_t n_refs,
               std::size_t dim, std::span<const double> targets, std::size_t k,
               std::vector<std::pair<double, std::size_t>>& scratch) {
  scratch.resize(n_refs);
  for (std::size_t r = 0; r < n_refs; ++r) {
    scratch[r] = {sq_dist(q, refs.data() + r * dim, dim), r};
  }
  std::size_t take = std::min(k, n_refs);
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(take),
                    scratch.end());
  double sum = 0.0;
  for (std::size_t t = 0; t < take; ++t) sum += targets[scratch[t].second];
  return take == 0 ? 0.0 : sum / static_cast<double>(take);
}

}  // namespace

bool openmp_enabled() {
#ifdef KIAE_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

int thread_count() {
#ifdef KIAE_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

bool parallel_active() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool enabled) { g_parallel.store(enabled && openmp_enabled()); }

ScopedPolicy::ScopedPolicy(bool parallel) : previous_(parallel_active()) {
  set_parallel(parallel);
}
ScopedPolicy::~ScopedPolicy() { set_parallel(previous_); }

namespace serial {

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = gemm_cell(a.data() + i * k, b.data(), k, n, j);
}

void pairwise_sq_dist(std::span<const double> points, std::size_t n, std::size_t dim,
                      std::span<double> out) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i * n + i] = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = sq_dist(points.data() + i * dim, points.data() + j * dim, dim);
      out[i * n + j] = d;
      out[j * n + i] = d;
    }
  }
}

void knn_mean(std::span<const double> queries, std::size_t n_queries,
              std::span<const double> refs, std::size_t n_refs, std::size_t dim,
              std::span<const double> targets, std::size_t k, std::span<double> out) {
  std::vector<std::pair<double, std::size_t>> scratch;
  for (std::size_t q = 0; q < n_queries; ++q)
    out[q] = knn_one(queries.data() + q * dim, refs, n_refs, dim, targets, k, scratch);
}

void reduce_rows(std::span<const double> rows, std::size_t count, std::size_t len,
                 std::span<double> out) {
  for (std::size_t p = 0; p < len; ++p) {
    double s = 0.0;
    for (std::size_t r = 0; r < count; ++r) s += rows[r * len + p];
    out[p] = s;
  }
}

}  // namespace serial

namespace parallel {

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const double* a_row = a.data() + static_cast<std::size_t>(i) * k;
    double* c_row = c.data() + static_cast<std::size_t>(i) * n;
    for (std::size_t j = 0; j < n; ++j) c_row[j] = gemm_cell(a_row, b.data(), k, n, j);
  }
}

void pairwise_sq_dist(std::span<const double> points, std::size_t n, std::size_t dim,
                      std::span<double> out) {
  const auto count = static_cast<std::ptrdiff_t>(n);
  // Full rows rather than the upper triangle: balanced work per thread, and
  // sq_dist is symmetric bit-for-bit since subtraction order only flips sign.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t si = 0; si < count; ++si) {
    auto i = static_cast<std::size_t>(si);
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = i == j ? 0.0 : sq_dist(points.data() + i * dim, points.data() + j * dim, dim);
    }
  }
}

void knn_mean(std::span<const double> queries, std::size_t n_queries,
              std::span<const double> refs, std::size_t n_refs, std::size_t dim,
              std::span<const double> targets, std::size_t k, std::span<double> out) {
  const auto count = static_cast<std::ptrdiff_t>(n_queries);
#pragma omp parallel
  {
    std::vector<std::pair<double, std::size_t>> scratch;
#pragma omp for schedule(dynamic, 16)
    for (std::ptrdiff_t q = 0; q < count; ++q) {
      auto qi = static_cast<std::size_t>(q);
      out[qi] = knn_one(queries.data() + qi * dim, refs, n_refs, dim, targets, k, scratch);
    }
  }
}

void reduce_rows(std::span<const double> rows, std::size_t count, std::size_t len,
                 std::span<double> out) {
  const auto total = static_cast<std::ptrdiff_t>(len);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t sp = 0; sp < total; ++sp) {
    auto p = static_cast<std::size_t>(sp);
    double s = 0.0;
    for (std::size_t r = 0; r < count; ++r) s += rows[r * len + p];
    out[p] = s;
  }
}

}  // namespace parallel

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n) {
  if (parallel_active())
    parallel::gemm(a, b, c, m, k, n);
  else
    serial::gemm(a, b, c, m, k, n);
}

void pairwise_sq_dist(std::span<const double> points, std::size_t n, std::size_t dim,
                      std::span<double> out) {
  if (parallel_active())
    parallel::pairwise_sq_dist(points, n, dim, out);
  else
    serial::pairwise_sq_dist(points, n, dim, out);
}

void knn_mean(std::span<const double> queries, std::size_t n_queries,
              std::span<const double> refs, std::size_t n_refs, std::size_t dim,
              std::span<const double> targets, std::size_t k, std::span<double> out) {
  if (parallel_active())
    parallel::knn_mean(queries, n_queries, refs, n_refs, dim, targets, k, out);
  else
    serial::knn_mean(queries, n_queries, refs, n_refs, dim, targets, k, out);
}

void reduce_rows(std::span<const double> rows, std::size_t count, std::size_t len,
                 std::span<double> out) {
  if (parallel_active())
    parallel::reduce_rows(rows, count, len, out);
  else
    serial::reduce_rows(rows, count, len, out);
}

}  // namespace kiae::kernels

#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// kiae::kernels::serial and an OpenMP version in kiae::kernels::parallel.
// Both produce bit-identical results: each output element is accumulated in
// the same order, parallelism only distributes independent outputs.

#include <cstddef>
#include <span>

namespace kiae::kernels {

/// True when the library was built with OpenMP.
bool openmp_enabled();
/// Threads the parallel kernels will use (1 without OpenMP).
int thread_count();

/// Process-wide switch consulted by the dispatching entry points below and by
/// the batched model code. Defaults to parallel when OpenMP is available.
bool parallel_active();
void set_parallel(bool enabled);

/// Restores the previous policy on scope exit.
class ScopedPolicy {
 public:
  explicit ScopedPolicy(bool parallel);
  ~ScopedPolicy();
  ScopedPolicy(const ScopedPolicy&) = delete;
  ScopedPolicy& operator=(const ScopedPolicy&) = delete;

 private:
  bool previous_;
};

// c (m x n) = a (m x k) * b (k x n), all row-major.
// pairwise_sq_dist: out (n x n) = squared Euclidean distance between rows.
// knn_mean: for each query row, mean target of the k nearest reference rows
//   under Euclidean distance; ties go to the lower reference index.
// reduce_rows: out[p] = sum over s of rows[s * len + p], summed in s order.

namespace serial {
void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n);
void pairwise_sq_dist(std::span<const double> points, std::size_t n, std::size_t dim,
                      std::span<double> out);
void knn_mean(std::span<const double> queries, std::size_t n_queries,
              std::span<const double> refs, std::size_t n_refs, std::size_t dim,
              std::span<const double> targets, std::size_t k, std::span<double> out);
void reduce_rows(std::span<const double> rows, std::size_t count, std::size_t len,
                 std::span<double> out);
}  // namespace serial

namespace parallel {
void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n);
void pairwise_sq_dist(std::span<const double> points, std::size_t n, std::size_t dim,
                      std::span<double> out);
void knn_mean(std::span<const double> queries, std::size_t n_queries,
              std::span<const double> refs, std::size_t n_refs, std::size_t dim,
              std::span<const double> targets, std::size_t k, std::span<double> out);
void reduce_rows(std::span<const double> rows, std::size_t count, std::size_t len,
                 std::span<double> out);
}  // namespace parallel

// Dispatch on parallel_active().
void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n);
void pairwise_sq_dist(std::span<const double> points, std::size_t n, std::size_t dim,
                      std::span<double> out);
void knn_mean(std::span<const double> queries, std::size_t n_queries,
              std::span<const double> refs, std::size_t n_refs, std::size_t dim,
              std::span<const double> targets, std::size_t k, std::span<double> out);
void reduce_rows(std::span<const double> rows, std::size_t count, std::size_t len,
                 std::span<double> out);

}  // namespace kiae::kernels

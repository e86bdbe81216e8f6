#include "support.hpp"

#ifdef KIAE_HAVE_OPENMP
#include <omp.h>
#endif

#include "kiae/kernels.hpp"

using namespace kiae;
using kiae::test::bits_equal;
using kiae::test::random_matrix;

namespace {

// Several threads even on a single-core host, so the parallel paths really
// split their loops.
struct ForceThreads {
  ForceThreads() {
#ifdef KIAE_HAVE_OPENMP
    omp_set_num_threads(4);
#endif
  }
} force_threads;

}  // namespace

TEST_CASE("gemm: parallel equals serial bit for bit") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto a = random_matrix(37, 19, s), b = random_matrix(19, 23, s + 50);
    std::vector<double> c1(37 * 23), c2(37 * 23);
    kernels::serial::gemm(a.values(), b.values(), c1, 37, 19, 23);
    kernels::parallel::gemm(a.values(), b.values(), c2, 37, 19, 23);
    CHECK(bits_equal(c1, c2));
  }
}

TEST_CASE("pairwise squared distances") {
  auto p = random_matrix(41, 6, 3);
  std::vector<double> d1(41 * 41), d2(41 * 41);
  kernels::serial::pairwise_sq_dist(p.values(), 41, 6, d1);
  kernels::parallel::pairwise_sq_dist(p.values(), 41, 6, d2);
  CHECK(bits_equal(d1, d2));
  for (std::size_t i = 0; i < 41; ++i) {
    CHECK(d1[i * 41 + i] == 0.0);
    for (std::size_t j = 0; j < 41; ++j) {
      CHECK(d1[i * 41 + j] == d1[j * 41 + i]);
      double s = 0.0;
      for (std::size_t c = 0; c < 6; ++c) s += (p(i, c) - p(j, c)) * (p(i, c) - p(j, c));
      CHECK(d1[i * 41 + j] == doctest::Approx(s).epsilon(1e-12));
    }
  }
}

TEST_CASE("knn mean") {
  auto refs = random_matrix(60, 3, 4);
  auto queries = random_matrix(25, 3, 5);
  std::vector<double> targets(60);
  for (std::size_t i = 0; i < 60; ++i) targets[i] = static_cast<double>(i);
  std::vector<double> o1(25), o2(25);
  kernels::serial::knn_mean(queries.values(), 25, refs.values(), 60, 3, targets, 4, o1);
  kernels::parallel::knn_mean(queries.values(), 25, refs.values(), 60, 3, targets, 4, o2);
  CHECK(bits_equal(o1, o2));

  // Brute-force oracle: sort every reference by (distance, index).
  for (std::size_t q = 0; q < 25; ++q) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t r = 0; r < 60; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 3; ++c) s += std::pow(queries(q, c) - refs(r, c), 2);
      all.push_back({s, r});
    }
    std::sort(all.begin(), all.end());
    double mean = 0.0;
    for (std::size_t k = 0; k < 4; ++k) mean += targets[all[k].second];
    CHECK(o1[q] == doctest::Approx(mean / 4));
  }
}

TEST_CASE("knn ties go to the lower index") {
  std::vector<double> refs{1.0, -1.0, 1.0};
  std::vector<double> targets{10.0, 20.0, 30.0};
  std::vector<double> query{0.0}, out(1);
  kernels::knn_mean(query, 1, refs, 3, 1, targets, 1, out);
  CHECK(out[0] == 10.0);
  kernels::knn_mean(query, 1, refs, 3, 1, targets, 2, out);
  CHECK(out[0] == 15.0);
}

TEST_CASE("row reduction keeps a fixed order") {
  auto rows = random_matrix(17, 300, 6);
  std::vector<double> r1(300), r2(300);
  kernels::serial::reduce_rows(rows.values(), 17, 300, r1);
  kernels::parallel::reduce_rows(rows.values(), 17, 300, r2);
  CHECK(bits_equal(r1, r2));
  for (std::size_t c = 0; c < 300; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < 17; ++r) s += rows(r, c);
    CHECK(r1[c] == s);
  }
}

TEST_CASE("dispatch policy") {
  {
    kernels::ScopedPolicy serial(false);
    CHECK_FALSE(kernels::parallel_active());
  }
  CHECK(kernels::parallel_active() == kernels::openmp_enabled());
  CHECK(kernels::thread_count() >= 1);
}

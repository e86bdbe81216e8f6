// Serial vs OpenMP timings for the hot kernels and one batched loss
// evaluation. Each row reports the best of several repetitions and whether
// the two results agree bit for bit.
//
//   bench_kernels [repetitions]

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <vector>

#include "kiae/kernels.hpp"
#include "kiae/model.hpp"
#include "kiae/numerics.hpp"

using namespace kiae;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

double best_ms(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

bool same(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  return true;
}

void row(const char* name, int reps, std::vector<double>& s_out, std::vector<double>& p_out,
         const std::function<void()>& serial, const std::function<void()>& parallel) {
  double s = best_ms(reps, serial);
  double p = best_ms(reps, parallel);
  std::printf("%-28s %10.2f %10.2f %8.2fx  %s\n", name, s, p, s / p, same(s_out, p_out) ? "identical" : "DIFFERENT");
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::max(1, std::atoi(argv[1])) : 5;
  std::printf("openmp=%s threads=%d repetitions=%d\n", kernels::openmp_enabled() ? "yes" : "no",
              kernels::thread_count(), reps);
  std::printf("%-28s %10s %10s %9s  %s\n", "kernel", "serial ms", "omp ms", "speedup", "results");

  {
    const std::size_t m = 256, k = 256, n = 256;
    auto a = noise(m * k, 1), b = noise(k * n, 2);
    std::vector<double> cs(m * n), cp(m * n);
    row("gemm 256^3", reps, cs, cp, [&] { kernels::serial::gemm(a, b, cs, m, k, n); },
        [&] { kernels::parallel::gemm(a, b, cp, m, k, n); });
  }
  {
    const std::size_t n = 1500, d = 33;
    auto pts = noise(n * d, 3);
    std::vector<double> s(n * n), p(n * n);
    row("pairwise_sq_dist 1500x33", reps, s, p, [&] { kernels::serial::pairwise_sq_dist(pts, n, d, s); },
        [&] { kernels::parallel::pairwise_sq_dist(pts, n, d, p); });
  }
  {
    const std::size_t nq = 800, nr = 4000, d = 3, k = 5;
    auto q = noise(nq * d, 4), r = noise(nr * d, 5), t = noise(nr, 6);
    std::vector<double> s(nq), p(nq);
    row("knn_mean 800 vs 4000", reps, s, p,
        [&] { kernels::serial::knn_mean(q, nq, r, nr, d, t, k, s); },
        [&] { kernels::parallel::knn_mean(q, nq, r, nr, d, t, k, p); });
  }
  {
    const std::size_t count = 64, len = 200000;
    auto rows = noise(count * len, 7);
    std::vector<double> s(len), p(len);
    row("reduce_rows 64x200000", reps, s, p, [&] { kernels::serial::reduce_rows(rows, count, len, s); },
        [&] { kernels::parallel::reduce_rows(rows, count, len, p); });
  }
  {
    KiaeConfig c;
    c.input_dim = 33;
    c.repr_dim = 4;
    auto model = KiaeModel::initialize(c);
    Matrix batch(64, 33);
    auto v = noise(64 * 33, 8);
    std::copy(v.begin(), v.end(), batch.values().begin());
    Rng rng(9);
    auto mt = corrupt_noisy(64, rng);
    std::vector<double> s, p;
    row("loss+gradient batch 64", reps, s, p,
        [&] {
          kernels::ScopedPolicy policy(false);
          s = loss(model, batch, mt, 0.5, 0.5).gradient;
        },
        [&] {
          kernels::ScopedPolicy policy(true);
          p = loss(model, batch, mt, 0.5, 0.5).gradient;
        });
  }
  return 0;
}

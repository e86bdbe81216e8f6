#include "kiae/lstm.hpp"

#include <algorithm>
#include <cmath>

namespace kiae::lstm {

namespace {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

void forward_step(std::span<const double> weights, std::span<const double> bias, std::size_t in,
                  std::size_t hidden, std::span<const double> x, std::span<const double> h_prev,
                  std::span<const double> c_prev, StepCache& cache) {
  const std::size_t cols = in + hidden;
  cache.joint.resize(cols);
  std::copy(x.begin(), x.end(), cache.joint.begin());
  std::copy(h_prev.begin(), h_prev.end(), cache.joint.begin() + static_cast<std::ptrdiff_t>(in));
  cache.c_prev.assign(c_prev.begin(), c_prev.end());
  cache.gates.resize(4 * hidden);
  for (std::size_t r = 0; r < 4 * hidden; ++r) {
    const double* w = weights.data() + r * cols;
    double s = bias[r];
    for (std::size_t k = 0; k < cols; ++k) s += w[k] * cache.joint[k];
    cache.gates[r] = (r >= 2 * hidden && r < 3 * hidden) ? std::tanh(s) : sigmoid(s);
  }
  cache.c.resize(hidden);
  cache.tanh_c.resize(hidden);
  cache.h.resize(hidden);
  for (std::size_t u = 0; u < hidden; ++u) {
    double i = cache.gates[u];
    double f = cache.gates[hidden + u];
    double g = cache.gates[2 * hidden + u];
    double o = cache.gates[3 * hidden + u];
    cache.c[u] = f * c_prev[u] + i * g;
    cache.tanh_c[u] = std::tanh(cache.c[u]);
    cache.h[u] = o * cache.tanh_c[u];
  }
}

void backward_step(std::span<const double> weights, std::size_t in, std::size_t hidden,
                   const StepCache& cache, std::span<const double> dh, std::span<double> dc,
                   std::span<double> d_weights, std::span<double> d_bias, std::span<double> dx,
                   std::span<double> dh_prev) {
  const std::size_t cols = in + hidden;
  std::vector<double> dz(4 * hidden);
  for (std::size_t u = 0; u < hidden; ++u) {
    double i = cache.gates[u];
    double f = cache.gates[hidden + u];
    double g = cache.gates[2 * hidden + u];
    double o = cache.gates[3 * hidden + u];
    double tc = cache.tanh_c[u];
    double dct = dc[u] + dh[u] * o * (1.0 - tc * tc);
    dz[u] = dct * g * i * (1.0 - i);
    dz[hidden + u] = dct * cache.c_prev[u] * f * (1.0 - f);
    dz[2 * hidden + u] = dct * i * (1.0 - g * g);
    dz[3 * hidden + u] = dh[u] * tc * o * (1.0 - o);
    dc[u] = dct * f;
  }
  std::vector<double> djoint(cols, 0.0);
  for (std::size_t r = 0; r < 4 * hidden; ++r) {
    const double g = dz[r];
    d_bias[r] += g;
    if (g == 0.0) continue;
    const double* w = weights.data() + r * cols;
    double* dw = d_weights.data() + r * cols;
    for (std::size_t k = 0; k < cols; ++k) {
      dw[k] += g * cache.joint[k];
      djoint[k] += g * w[k];
    }
  }
  if (!dx.empty()) std::copy(djoint.begin(), djoint.begin() + static_cast<std::ptrdiff_t>(in), dx.begin());
  std::copy(djoint.begin() + static_cast<std::ptrdiff_t>(in), djoint.end(), dh_prev.begin());
}

}  // namespace kiae::lstm

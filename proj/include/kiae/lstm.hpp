#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kiae::lstm {

// One LSTM cell with gate order (input, forget, candidate, output).
// Weights are (4h) x (in + h) row-major acting on [x; h_prev], bias is 4h.

struct StepCache {
  std::vector<double> joint;  // [x; h_prev]
  std::vector<double> c_prev;
  std::vector<double> gates;  // activated i, f, g, o
  std::vector<double> c;
  std::vector<double> tanh_c;
  std::vector<double> h;
};

void forward_step(std::span<const double> weights, std::span<const double> bias, std::size_t in,
                  std::size_t hidden, std::span<const double> x, std::span<const double> h_prev,
                  std::span<const double> c_prev, StepCache& cache);

/// Backpropagates one step. On entry `dh` is dL/dh_t and `dc` is dL/dc_t
/// arriving from step t+1; on exit `dc` holds dL/dc_{t-1}. Gradients are
/// accumulated into `d_weights` and `d_bias`; dL/dx and dL/dh_{t-1} are
/// written to `dx` (may be empty) and `dh_prev`.
void backward_step(std::span<const double> weights, std::size_t in, std::size_t hidden,
                   const StepCache& cache, std::span<const double> dh, std::span<double> dc,
                   std::span<double> d_weights, std::span<double> d_bias, std::span<double> dx,
                   std::span<double> dh_prev);

}  // namespace kiae::lstm

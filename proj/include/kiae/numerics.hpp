#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace kiae {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  Matrix transposed() const;
  std::string shape_string() const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Throws NumericError when any entry is NaN or infinite.
void require_finite(std::span<const double> values, const char* what);

/// Seeded random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Conversions to reals and normals are done here rather than through
/// <random> distributions, whose algorithms are implementation-defined, so a
/// seed replays bit-identically on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double next_unit();
  /// Standard normal via Box-Muller.
  double normal();
  /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::size_t below(std::size_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 mix of a master seed with a stream tag. Used to hand independent
/// but reproducible seeds to sub-stages (model init, shuffling, noise).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Fresh seed from the OS entropy source. Only used when the caller gave none.
std::uint64_t entropy_seed();

/// n draws in [lo, hi). Throws DomainError unless lo < hi.
std::vector<double> uniform(Rng& rng, double lo, double hi, std::size_t n);
double uniform_one(Rng& rng, double lo, double hi);

/// Standard matrix product. Throws ShapeError naming both shapes on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central-difference gradient: (f(x + h e_k) - f(x - h e_k)) / 2h per component.
std::vector<double> finite_diff_grad(const ScalarFunction& f, std::span<const double> x,
                                     double h);

struct EigenDecomposition {
  std::vector<double> values;  // sorted by |value| descending
  Matrix vectors;              // column k pairs with values[k]
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvectors are orthonormal with their first non-negligible coordinate made
/// positive. Throws DomainError if the input is not square or not symmetric
/// within 1e-10 (relative to its largest entry when that exceeds 1).
EigenDecomposition sym_eigen(const Matrix& m);

}  // namespace kiae

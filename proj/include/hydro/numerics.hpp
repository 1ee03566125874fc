// numerics.hpp - Dense row-major matrices, a seeded deterministic RNG, the
// symmetric eigensolver, and the finite-difference gradient harness. This is
// the entire linear-algebra surface the engine uses.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "hydro/errors.hpp"

namespace hydro {

// Dense matrix of 64-bit reals, row-major. Values are expected to stay finite
// unless an operation documents otherwise.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return values_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols_ + c];
  }

  double* row(std::size_t r) { return values_.data() + r * cols_; }
  const double* row(std::size_t r) const { return values_.data() + r * cols_; }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool all_finite() const;

  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ &&
           values_ == other.values_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Standard product a*b. Throws ShapeError on dimension mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

// a * b^T without forming the transpose.
Matrix matmul_bt(const Matrix& a, const Matrix& b);

// a^T * b without forming the transpose.
Matrix matmul_at(const Matrix& a, const Matrix& b);

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // descending
  Matrix eigenvectors;              // columns, orthonormal, sign-canonical
};

// Symmetric eigendecomposition by cyclic Jacobi rotations. The input must be
// square and symmetric within 1e-10 (ContractError otherwise). Eigenvalues
// come back sorted descending; each eigenvector is flipped so its largest-
// magnitude entry is positive, which makes results comparable across runs.
EigenDecomposition sym_eigen(const Matrix& s);

// Central-difference gradient estimate of a scalar function, one coordinate
// at a time: (f(x + h e_i) - f(x - h e_i)) / (2h). Propagates NumericError if
// an evaluation comes back non-finite.
std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double h);

// Deterministic xoshiro256** generator seeded through splitmix64. The same
// seed produces the same draw sequence on every platform; distribution code
// (uniform doubles, Box-Muller normals, rejection-sampled bounded ints,
// Fisher-Yates shuffle) is spelled out here rather than delegated to
// <random>, whose distributions are not bit-portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();

  // Uniform in [0,1) with 53 bits of mantissa.
  double uniform();

  // Uniform in [a,b).
  double uniform(double a, double b);

  // Box-Muller normal draw; the paired second value is cached, so draws are
  // consumed from the uniform stream two at a time.
  double normal(double mean = 0.0, double stddev = 1.0);

  // Unbiased integer in [0,n) via rejection sampling. n must be > 0.
  std::uint64_t bounded(std::uint64_t n);

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // Independent child stream; derivation is a documented splitmix64 hash of
  // (seed, stream index) so parallel consumers stay reproducible.
  Rng child(std::uint64_t stream) const;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t state_[4] = {};
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace hydro

#pragma once

// Framework-free numerical building blocks: vector algebra, stable
// reductions, the Adam optimizer, a seeded RNG and a finite-difference
// gradient oracle. All math is float64.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace rse {

using DenseVector = std::vector<double>;

// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double norm(std::span<const double> v);

// Cosine similarity clamped to [-1, 1].
// Throws Shape on dimension mismatch and DegenerateVector on a zero-norm input.
double cosine(std::span<const double> u, std::span<const double> v);

// log(sum(exp(x))) with max subtraction. Throws Arity on empty input.
double log_sum_exp(std::span<const double> logits);

bool all_finite(std::span<const double> v) noexcept;

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moments for one parameter block.
struct AdamState {
  explicit AdamState(std::size_t n, AdamHyper h = {})
      : first_moment(n, 0.0), second_moment(n, 0.0), hyper(h) {}

  DenseVector first_moment;
  DenseVector second_moment;
  std::uint64_t step_count = 0;
  AdamHyper hyper;
};

// Bias-corrected Adam update in place. Throws Shape on size mismatch,
// Numeric on a non-finite gradient and Config on lr <= 0.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr);

using LossFn = std::function<double(std::span<const double>)>;

// max_i |a_i - c_i| / max(1e-12, |a_i| + |c_i|) with c the central difference
// of loss at params +- h e_i. Throws Arity on an empty parameter vector and
// Numeric when the loss is non-finite.
double finite_diff_check(const LossFn& loss, std::span<const double> params,
                         std::span<const double> analytic, double h = 1e-5);

// std::mt19937_64 with hand-written distributions; identical streams on every
// standard library.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n) by rejection; n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Fisher-Yates, driven only by rng.
template <class T>
void shuffle_in_place(std::vector<T>& items, SeededRng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_index(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

template <class T>
std::vector<T> seeded_shuffle(std::vector<T> items, SeededRng& rng) {
  shuffle_in_place(items, rng);
  return items;
}

}  // namespace rse

#include "doctest.h"

#include <array>
#include <cmath>
#include <numeric>

#include "rse/error.hpp"
#include "rse/numerics.hpp"
#include "test_support.hpp"

using namespace rse;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected rse::Error");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("cosine examples") {
  CHECK(cosine(DenseVector{1, 0}, DenseVector{0, 1}) == 0.0);
  CHECK(cosine(DenseVector{2, 4, 6}, DenseVector{1, 2, 3}) == doctest::Approx(1.0).epsilon(1e-15));

  const DenseVector u{1, 2, 3}, v{4, 5, 6};
  const double oracle = static_cast<double>(test::hp_cosine(u, v));
  CHECK(oracle == doctest::Approx(0.974632).epsilon(1e-6));
  CHECK(std::abs(cosine(u, v) - oracle) < 1e-15);
}

TEST_CASE("cosine errors") {
  CHECK(kind_of([] { cosine(DenseVector{1, 2}, DenseVector{1, 2, 3}); }) == ErrorKind::Shape);
  CHECK(kind_of([] { cosine(DenseVector{0, 0}, DenseVector{1, 2}); }) == ErrorKind::DegenerateVector);
}

TEST_CASE("cosine properties: positive scale invariance, symmetry, range") {
  SeededRng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 1 + rng.uniform_index(40);
    const auto u = test::random_vector(rng, d);
    const auto v = test::random_vector(rng, d);
    const double alpha = std::exp(rng.uniform(-5, 5));
    DenseVector au = u;
    for (double& x : au) x *= alpha;
    const double c = cosine(u, v);
    CHECK(std::abs(cosine(au, v) - c) <= 1e-12);
    CHECK(cosine(v, u) == c);
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
  }
  // clamping absorbs rounding on parallel vectors
  const DenseVector p{0.1, 0.2, 0.3};
  CHECK(cosine(p, p) <= 1.0);
}

TEST_CASE("log_sum_exp examples") {
  CHECK(log_sum_exp(std::array{0.0, 0.0, 0.0, 0.0}) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(log_sum_exp(std::array{5.0}) == 5.0);

  const double big = log_sum_exp(std::array{1000.0, 1000.0});
  const test::hp oracle = test::hp(1000) + log(test::hp(2));
  CHECK(std::isfinite(big));
  CHECK(std::abs(big - static_cast<double>(oracle)) < 1e-12);
  CHECK(std::isinf(std::log(std::exp(1000.0) + std::exp(1000.0))));  // the naive route overflows

  CHECK(kind_of([] { log_sum_exp(std::span<const double>{}); }) == ErrorKind::Arity);
}

TEST_CASE("log_sum_exp is shift-equivariant") {
  SeededRng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const auto x = test::random_vector(rng, 1 + rng.uniform_index(30), -50, 50);
    const double c = rng.uniform(-200, 200);
    DenseVector shifted = x;
    for (double& v : shifted) v += c;
    CHECK(std::abs(log_sum_exp(shifted) - (log_sum_exp(x) + c)) <= 1e-9);
  }
}

TEST_CASE("adam_step") {
  SUBCASE("zero gradient leaves params and decays moments") {
    DenseVector p{1.0, -2.0};
    AdamState st(2);
    st.first_moment = {0.5, -0.5};
    st.second_moment = {0.2, 0.1};
    adam_step(p, DenseVector{0.0, 0.0}, st, 0.1);
    // m_hat = 0.9*0.5/(1-0.9) is nonzero, so params move; with fresh state they do not
    CHECK(st.first_moment[0] == doctest::Approx(0.45));
    CHECK(st.second_moment[1] == doctest::Approx(0.0999));
    DenseVector q{1.0, -2.0};
    AdamState fresh(2);
    adam_step(q, DenseVector{0.0, 0.0}, fresh, 0.1);
    CHECK(q == DenseVector{1.0, -2.0});
    CHECK(fresh.step_count == 1);
  }
  SUBCASE("single step with unit gradient moves by ~lr") {
    // m_hat = 1, v_hat = 1, update = lr * 1 / (1 + 1e-8)
    DenseVector p{0.0};
    AdamState st(1);
    adam_step(p, DenseVector{1.0}, st, 0.1);
    const double hand = 0.1 * 1.0 / (1.0 + 1e-8);
    CHECK(p[0] == doctest::Approx(-hand).epsilon(1e-15));
    CHECK(p[0] == doctest::Approx(-0.1).epsilon(1e-7));
  }
  SUBCASE("identical blocks get identical updates") {
    DenseVector a{0.3, -0.7, 1.1}, b = a;
    AdamState sa(3), sb(3);
    const DenseVector g{0.5, -0.1, 2.0};
    for (int i = 0; i < 5; ++i) {
      adam_step(a, g, sa, 0.01);
      adam_step(b, g, sb, 0.01);
    }
    CHECK(a == b);
    CHECK(sa.step_count == 5);
  }
  SUBCASE("errors") {
    DenseVector p{0.0, 0.0};
    AdamState st(2);
    CHECK(kind_of([&] { adam_step(p, DenseVector{1.0}, st, 0.1); }) == ErrorKind::Shape);
    CHECK(kind_of([&] { adam_step(p, DenseVector{NAN, 0.0}, st, 0.1); }) == ErrorKind::Numeric);
    CHECK(kind_of([&] { adam_step(p, DenseVector{1.0, 0.0}, st, 0.0); }) == ErrorKind::Config);
    CHECK(st.step_count == 0);
  }
}

TEST_CASE("finite_diff_check") {
  const LossFn half_sq = [](std::span<const double> t) {
    double s = 0;
    for (double x : t) s += 0.5 * x * x;
    return s;
  };
  SeededRng rng(5);
  const auto theta = test::random_vector(rng, 10);
  CHECK(finite_diff_check(half_sq, theta, theta, 1e-5) < 1e-8);

  // |2g - g| / (|2g| + |g|) = 1/3 for every coordinate
  DenseVector doubled = theta;
  for (double& x : doubled) x *= 2;
  CHECK(finite_diff_check(half_sq, theta, doubled, 1e-5) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));

  CHECK(kind_of([&] { finite_diff_check(half_sq, DenseVector{}, DenseVector{}, 1e-5); }) ==
        ErrorKind::Arity);
  const LossFn nan_loss = [](std::span<const double>) { return NAN; };
  CHECK(kind_of([&] { finite_diff_check(nan_loss, theta, theta, 1e-5); }) == ErrorKind::Numeric);
}

TEST_CASE("SeededRng follows the standard mt19937_64 stream") {
  // The standard pins the 10000th output of a default-seeded mt19937_64.
  SeededRng rng(5489u);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = rng.next_u64();
  CHECK(x == 9981545732273789042ULL);

  SeededRng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.uniform01() == b.uniform01());
    CHECK(a.uniform_index(7) == b.uniform_index(7));
  }
  SeededRng c(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("seeded_shuffle") {
  SeededRng rng(6);
  CHECK(seeded_shuffle(std::vector<int>{}, rng).empty());

  std::vector<int> items(20);
  std::iota(items.begin(), items.end(), 0);
  SeededRng r1(99), r2(99);
  const auto p1 = seeded_shuffle(items, r1);
  const auto p2 = seeded_shuffle(items, r2);
  CHECK(p1 == p2);
  auto sorted = p1;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == items);

  // Each of 10 items lands in slot 0 with frequency 0.1 +- 0.02.
  std::array<int, 10> first{};
  SeededRng r3(2024);
  std::vector<int> ten(10);
  std::iota(ten.begin(), ten.end(), 0);
  for (int trial = 0; trial < 10000; ++trial) ++first[seeded_shuffle(ten, r3)[0]];
  for (int count : first) CHECK(std::abs(count / 10000.0 - 0.1) <= 0.02);
}

#include "doctest.h"

#include <cmath>

#include "rse/error.hpp"
#include "rse/kernels.hpp"
#include "test_support.hpp"

using namespace rse;

TEST_CASE("every available SIMD variant matches the scalar reference") {
  const auto& ref = kernels::scalar_table();
  SeededRng rng(11);
  for (kernels::Isa isa : kernels::available_isas()) {
    const auto& k = kernels::table_for(isa);
    CAPTURE(kernels::to_string(isa));
    for (std::size_t n = 0; n <= 71; ++n) {
      CAPTURE(n);
      const auto x = test::random_vector(rng, n);
      const auto y = test::random_vector(rng, n);

      long double exact = 0;
      long double mag = 0;
      for (std::size_t i = 0; i < n; ++i) {
        exact += static_cast<long double>(x[i]) * y[i];
        mag += std::fabs(static_cast<long double>(x[i]) * y[i]);
      }
      const double tol = 4e-16 * static_cast<double>(n + 1) * static_cast<double>(mag + 1);
      CHECK(std::fabs(k.dot(x.data(), y.data(), n) - ref.dot(x.data(), y.data(), n)) <= tol);
      CHECK(std::fabs(k.dot(x.data(), y.data(), n) - static_cast<double>(exact)) <= tol);

      auto ya = y, yb = y;
      k.axpy(0.37, x.data(), ya.data(), n);
      ref.axpy(0.37, x.data(), yb.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(ya[i] == doctest::Approx(yb[i]).epsilon(1e-15));

      auto xa = x, xb = x;
      k.scale(-1.5, xa.data(), n);
      ref.scale(-1.5, xb.data(), n);
      CHECK(xa == xb);  // a single rounded product: bit-identical
    }
  }
}

TEST_CASE("unaligned views go through the SIMD paths unchanged") {
  SeededRng rng(12);
  const auto buf_x = test::random_vector(rng, 40);
  const auto buf_y = test::random_vector(rng, 40);
  for (kernels::Isa isa : kernels::available_isas()) {
    const auto& k = kernels::table_for(isa);
    const double a = k.dot(buf_x.data() + 1, buf_y.data() + 3, 33);
    const double b = kernels::scalar_table().dot(buf_x.data() + 1, buf_y.data() + 3, 33);
    CHECK(a == doctest::Approx(b).epsilon(1e-14));
  }
}

TEST_CASE("scalar is always available and listed first") {
  const auto isas = kernels::available_isas();
  REQUIRE_FALSE(isas.empty());
  CHECK(isas.front() == kernels::Isa::Scalar);
  CHECK(kernels::table_for(kernels::Isa::Scalar).isa == kernels::Isa::Scalar);
}

TEST_CASE("requesting an unavailable variant is a config error") {
#if defined(__x86_64__)
  CHECK_THROWS_AS(kernels::table_for(kernels::Isa::Neon), Error);
#else
  CHECK_THROWS_AS(kernels::table_for(kernels::Isa::Avx2), Error);
#endif
}

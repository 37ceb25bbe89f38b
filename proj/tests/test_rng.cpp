#include "flashpuf/rng.hpp"

#include <doctest.h>

#include <array>
#include <cmath>

using namespace flashpuf::rng;

TEST_CASE("mix64 matches the SplitMix64 reference output") {
  // First output of SplitMix64 seeded with 0 and with 1234567.
  CHECK(mix64(0) == 0xE220A8397B1DCDAFULL);
  CHECK(mix64(1234567) == 0x599ED017FB08FC85ULL);
}

TEST_CASE("keyed streams are reproducible and key-separated") {
  KeyedStream a(hash_key({1, 2, 3}));
  KeyedStream b(hash_key({1, 2, 3}));
  KeyedStream c(hash_key({1, 2, 4}));
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    differs |= x != c();
  }
  CHECK(differs);
  CHECK(hash_key({1, 2}) != hash_key({2, 1}));
}

TEST_CASE("below stays in range and is roughly uniform") {
  KeyedStream s(42);
  std::array<int, 10> counts{};
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) {
    const auto v = s.below(10);
    REQUIRE(v < 10);
    ++counts[v];
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - kDraws / 10.0) * (c - kDraws / 10.0) / (kDraws / 10.0);
  CHECK(chi2 < 27.9);  // 99.9th percentile, 9 degrees of freedom
}

TEST_CASE("unit draws lie in the open interval") {
  CHECK(to_unit_open(0) > 0.0);
  CHECK(to_unit_open(~0ULL) < 1.0);
}

TEST_CASE("normal quantile inverts the normal CDF") {
  const auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  for (double p : {1e-12, 1e-6, 2.96e-5, 0.01, 0.2, 0.5, 0.8, 0.99, 1 - 1e-6}) {
    CHECK(cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK(normal_quantile(0.1) == doctest::Approx(-normal_quantile(0.9)).epsilon(1e-12));
}

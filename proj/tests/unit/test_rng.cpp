#include "doctest.h"
#include "mlmcmc/rng.hpp"

#include <cmath>
#include <vector>

using mlmcmc::RngStream;

TEST_SUITE("rng") {

TEST_CASE("equal seed and stream reproduce the sequence") {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) REQUIRE(a() == b());
  CHECK(a.draws() == 1000);
}

TEST_CASE("distinct streams and seeds diverge") {
  RngStream a(42, 0), b(42, 1), c(43, 0);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a(), y = b(), z = c();
    same_ab += x == y;
    same_ac += x == z;
  }
  CHECK(same_ab == 0);
  CHECK(same_ac == 0);
}

TEST_CASE("streams are uncorrelated") {
  RngStream a(5, 0), b(5, 1);
  const int n = 100000;
  double sab = 0, sa = 0, sb = 0, saa = 0, sbb = 0;
  for (int i = 0; i < n; ++i) {
    const double x = a.uniform(), y = b.uniform();
    sa += x;
    sb += y;
    sab += x * y;
    saa += x * x;
    sbb += y * y;
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  const double r = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
  CHECK(std::abs(r) < 4.0 / std::sqrt(n));
}

TEST_CASE("uniform moments and range") {
  RngStream r(1, 0);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    s += u;
    s2 += u * u;
  }
  CHECK(s / n == doctest::Approx(0.5).epsilon(0.005));
  CHECK(s2 / n - (s / n) * (s / n) == doctest::Approx(1.0 / 12.0).epsilon(0.01));
}

TEST_CASE("normal moments and word budget") {
  RngStream r(9, 3);
  const int n = 200000;
  double s = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(s4 / n == doctest::Approx(3.0).epsilon(0.03));
  CHECK(r.draws() == 2u * n);
}

TEST_CASE("split children are deterministic and distinct") {
  const RngStream root(11, 0);
  RngStream c1 = root.split(1), c1b = root.split(1), c2 = root.split(2);
  std::vector<std::uint64_t> x, y;
  for (int i = 0; i < 64; ++i) {
    const auto v = c1();
    CHECK(v == c1b());
    x.push_back(v);
    y.push_back(c2());
  }
  CHECK(x != y);
  CHECK(root.split(1).seed() == c1.seed());
}

}  // TEST_SUITE

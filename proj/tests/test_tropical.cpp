#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "tropa/tropical.hpp"

#include <cmath>
#include <random>

using namespace trop;

namespace {

TropValue random_trop(std::mt19937_64& rng, double bottom_prob = 0.25) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < bottom_prob) return TropValue::bottom();
  std::uniform_int_distribution<int> d(-9, 9);
  return TropValue(static_cast<double>(d(rng)));
}

TropMatrix random_trop_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                              double bottom_prob = 0.25) {
  TropMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = random_trop(rng, bottom_prob);
  return m;
}

}  // namespace

TEST_CASE("tropical sum") {
  CHECK(trop_add(TropValue::bottom(), TropValue(3)) == TropValue(3));
  CHECK(trop_add(TropValue(2), TropValue(5)) == TropValue(5));
  CHECK(trop_add(TropValue(-1.5), TropValue(-1.5)) == TropValue(-1.5));
  CHECK(trop_add(TropValue::bottom(), TropValue::bottom()).is_bottom());
}

TEST_CASE("tropical product") {
  CHECK(trop_mul(TropValue(0), TropValue(7)) == TropValue(7));
  CHECK(trop_mul(TropValue::bottom(), TropValue(7)).is_bottom());
  CHECK(trop_mul(TropValue(2), TropValue(3)) == TropValue(5));
}

TEST_CASE("tropical quotient") {
  CHECK(trop_div(TropValue(5), TropValue(2)) == TropValue(3));
  CHECK(trop_div(TropValue::bottom(), TropValue(2)).is_bottom());
  CHECK_THROWS_AS(trop_div(TropValue(1), TropValue::bottom()), DomainError);
}

TEST_CASE("semiring laws on sampled triples") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 2000; ++rep) {
    TropValue a = random_trop(rng), b = random_trop(rng), c = random_trop(rng);
    CHECK(trop_add(a, b) == trop_add(b, a));
    CHECK(trop_mul(a, b) == trop_mul(b, a));
    CHECK(trop_add(trop_add(a, b), c) == trop_add(a, trop_add(b, c)));
    CHECK(trop_mul(trop_mul(a, b), c) == trop_mul(a, trop_mul(b, c)));
    CHECK(trop_mul(a, trop_add(b, c)) == trop_add(trop_mul(a, b), trop_mul(a, c)));
    CHECK(trop_add(TropValue::bottom(), a) == a);
    CHECK(trop_mul(TropValue::zero(), a) == a);
    CHECK(trop_mul(TropValue::bottom(), a).is_bottom());
  }
}

TEST_CASE("max-plus matmul identity") {
  std::mt19937_64 rng(12);
  TropMatrix b = random_trop_matrix(rng, 4, 3);
  TropMatrix out = maxplus_matmul(trop_identity(4), b);
  for (Eigen::Index i = 0; i < b.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) CHECK(out(i, j) == b(i, j));
}

TEST_CASE("max-plus matmul hand example") {
  TropMatrix a(1, 2);
  a(0, 0) = TropValue(1);
  a(0, 1) = TropValue(2);
  TropMatrix b(2, 1);
  b(0, 0) = TropValue(3);
  b(1, 0) = TropValue(4);
  TropMatrix c = maxplus_matmul(a, b);
  CHECK(c.rows() == 1);
  CHECK(c.cols() == 1);
  CHECK(c(0, 0) == TropValue(6));
}

TEST_CASE("max-plus matmul matches brute-force reference") {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 50; ++rep) {
    TropMatrix a = random_trop_matrix(rng, 3, 3);
    TropMatrix b = random_trop_matrix(rng, 3, 3);
    TropMatrix got = maxplus_matmul(a, b);
    for (Eigen::Index i = 0; i < 3; ++i) {
      for (Eigen::Index j = 0; j < 3; ++j) {
        TropValue want = TropValue::bottom();
        for (Eigen::Index t = 0; t < 3; ++t) {
          if (a(i, t).is_bottom() || b(t, j).is_bottom()) continue;
          const double cand = a(i, t).raw() + b(t, j).raw();
          if (want.is_bottom() || cand > want.raw()) want = TropValue(cand);
        }
        CHECK(got(i, j) == want);
      }
    }
  }
}

TEST_CASE("max-plus matmul associativity on integer entries") {
  std::mt19937_64 rng(14);
  for (int rep = 0; rep < 50; ++rep) {
    TropMatrix a = random_trop_matrix(rng, 2, 3);
    TropMatrix b = random_trop_matrix(rng, 3, 4);
    TropMatrix c = random_trop_matrix(rng, 4, 2);
    TropMatrix left = maxplus_matmul(maxplus_matmul(a, b), c);
    TropMatrix right = maxplus_matmul(a, maxplus_matmul(b, c));
    for (Eigen::Index i = 0; i < left.rows(); ++i)
      for (Eigen::Index j = 0; j < left.cols(); ++j) CHECK(left(i, j) == right(i, j));
  }
}

TEST_CASE("max-plus matmul shape error") {
  TropMatrix a(2, 3), b(2, 2);
  a.setConstant(TropValue::zero());
  b.setConstant(TropValue::zero());
  CHECK_THROWS_AS(maxplus_matmul(a, b), ShapeError);
}

TEST_CASE("hilbert distance basics") {
  TropVector x = trop_vec({0, 1});
  TropVector y = trop_vec({2, 0});
  CHECK(hilbert_distance(x, x) == doctest::Approx(0.0));
  CHECK(hilbert_distance(x, y) == doctest::Approx(3.0));
  CHECK(hilbert_distance(y, x) == doctest::Approx(3.0));
}

TEST_CASE("hilbert distance projective invariance") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int rep = 0; rep < 200; ++rep) {
    Vec x(4), y(4);
    for (int i = 0; i < 4; ++i) {
      x(i) = u(rng);
      y(i) = u(rng);
    }
    const double c = u(rng);
    CHECK(hilbert_distance(Vec(x.array() + c), x) == doctest::Approx(0.0));
    CHECK(hilbert_distance(Vec(x.array() + c), Vec(y.array() + c)) ==
          doctest::Approx(hilbert_distance(x, y)));
  }
}

TEST_CASE("hilbert distance triangle inequality") {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int rep = 0; rep < 500; ++rep) {
    Vec x(5), y(5), z(5);
    for (int i = 0; i < 5; ++i) {
      x(i) = u(rng);
      y(i) = u(rng);
      z(i) = u(rng);
    }
    CHECK(hilbert_distance(x, z) <= hilbert_distance(x, y) + hilbert_distance(y, z) + 1e-12);
    CHECK(hilbert_distance(x, y) >= 0.0);
  }
}

TEST_CASE("hilbert distance domain and shape errors") {
  TropVector x(2), y(2);
  x(0) = TropValue(1);
  x(1) = TropValue::bottom();
  y(0) = TropValue(0);
  y(1) = TropValue(0);
  CHECK_THROWS_AS(hilbert_distance(x, y), DomainError);
  CHECK_THROWS_AS(hilbert_distance(trop_vec({1}), trop_vec({1, 2})), ShapeError);
}

TEST_CASE("non-expansiveness of max-plus maps") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  int checked = 0;
  for (int rep = 0; rep < 400; ++rep) {
    TropMatrix a = random_trop_matrix(rng, 4, 4, 0.35);
    TropVector z(4), zp(4);
    for (int i = 0; i < 4; ++i) {
      z(i) = TropValue(u(rng));
      zp(i) = TropValue(u(rng));
    }
    TropVector az = maxplus_apply(a, z);
    TropVector azp = maxplus_apply(a, zp);
    bool finite = true;
    for (int i = 0; i < 4; ++i) finite = finite && az(i).is_finite() && azp(i).is_finite();
    if (!finite) continue;  // metric undefined on bottom coordinates
    ++checked;
    CHECK(hilbert_distance(az, azp) <= hilbert_distance(z, zp) + 1e-12);
  }
  CHECK(checked > 50);
}

TEST_CASE("tropicalize") {
  Mat x1(1, 1);
  x1 << 1.0;
  Vec l1(1);
  l1 << 0.0;
  CHECK(tropicalize(x1, l1)(0, 0) == TropValue(0));

  Mat x2(1, 2);
  x2 << std::exp(1.0), std::exp(2.0);
  Vec l2(1);
  l2 << 1.0;
  TropMatrix z2 = tropicalize(x2, l2);
  CHECK(z2(0, 0).raw() == doctest::Approx(0.0));
  CHECK(z2(0, 1).raw() == doctest::Approx(1.0));

  Mat x3(1, 1);
  x3 << -3.0;
  CHECK(tropicalize(x3, l1)(0, 0).is_bottom());

  Vec bad(2);
  bad << 0.0, 0.0;
  CHECK_THROWS_AS(tropicalize(x1, bad), ShapeError);
}

TEST_CASE("devaluate") {
  TropMatrix z(1, 2);
  z(0, 0) = TropValue(0);
  z(0, 1) = TropValue::bottom();
  Mat out = devaluate(z);
  CHECK(out(0, 0) == doctest::Approx(1.0));
  CHECK(out(0, 1) == 0.0);
}

TEST_CASE("devaluate inverts tropicalize through relu") {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  Mat x(3, 4);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = u(rng);
  Mat round = devaluate(tropicalize(x, Vec::Zero(3)));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      CHECK(round(i, j) == doctest::Approx(std::max(x(i, j), 0.0)));
}

TEST_CASE("simplex normalization puts every row max at zero") {
  std::mt19937_64 rng(19);
  TropMatrix z = random_trop_matrix(rng, 5, 4, 0.2);
  for (Eigen::Index j = 0; j < 4; ++j) z(4, j) = TropValue::bottom();
  TropMatrix s = simplex_normalize(z);
  for (Eigen::Index i = 0; i < 4; ++i) {
    TropValue rowmax = TropValue::bottom();
    for (Eigen::Index j = 0; j < 4; ++j) rowmax = trop_add(rowmax, s(i, j));
    CHECK(rowmax == TropValue(0));
  }
  for (Eigen::Index j = 0; j < 4; ++j) CHECK(s(4, j).is_bottom());
}

TEST_CASE("log of a sum exceeds max of logs by at most log 2") {
  std::mt19937_64 rng(20);
  std::uniform_real_distribution<double> u(1e-6, 100.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const double a = u(rng), b = u(rng);
    CHECK(std::log(a + b) <= std::max(std::log(a), std::log(b)) + std::log(2.0) + 1e-12);
    CHECK(std::log(a + b) >= std::max(std::log(a), std::log(b)) - 1e-12);
  }
}

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracle.hpp"
#include "relmmd/kernels.hpp"

using namespace relmmd;
using Samples = SampleSet<double>;

namespace {

Samples column(std::initializer_list<double> values) {
  Samples s(Eigen::Index(values.size()), 1);
  Eigen::Index i = 0;
  for (double v : values) s(i++, 0) = v;
  return s;
}

}  // namespace

TEST_CASE("kernel_eval closed forms") {
  const Eigen::Vector2d a(3, 4);
  CHECK(kernel_eval(KernelSpec<double>::gaussian_rbf(1.0), a, a) == 1.0);
  CHECK(kernel_eval(KernelSpec<double>::linear(), Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 4)) == 11.0);
  CHECK(kernel_eval(KernelSpec<double>::gaussian_rbf(2.0), Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 0)) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
}

TEST_CASE("kernel_eval rejects bad arguments") {
  const auto rbf = KernelSpec<double>::gaussian_rbf(1.0);
  CHECK_THROWS_AS(kernel_eval(rbf, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)), Error);
  const Eigen::Vector2d bad(std::numeric_limits<double>::quiet_NaN(), 0);
  try {
    kernel_eval(rbf, bad, Eigen::Vector2d(0, 0));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::non_finite);
  }
  CHECK_THROWS_AS(KernelSpec<double>::gaussian_rbf(0.0), Error);
  CHECK_THROWS_AS(KernelSpec<double>::gaussian_rbf(-1.0), Error);
  CHECK_THROWS_AS(KernelSpec<double>::gaussian_rbf(std::numeric_limits<double>::infinity()), Error);
}

TEST_CASE("gram_bundle with a linear kernel on a hand example") {
  const Samples x = column({1, 0, 2});
  const auto b = gram_bundle(KernelSpec<double>::linear(), x, x, x);
  Eigen::Matrix3d expected;
  expected << 0, 0, 2, 0, 0, 0, 2, 0, 0;
  CHECK(b.ktil_xx() == expected);
  CHECK(b.ktil_yy() == expected);
  Eigen::Matrix3d full;
  full << 1, 0, 2, 0, 0, 0, 2, 0, 4;
  CHECK(b.k_xy() == full);
  CHECK(b.m() == 3);
  CHECK(b.n() == 3);
  CHECK(b.r() == 3);
}

TEST_CASE("gram_bundle zeroes self diagonals and keeps duplicates at one") {
  std::mt19937_64 rng(7);
  Samples x = oracle::random_samples(rng, 6, 3);
  x.row(1) = x.row(0);
  const auto b = gram_bundle(KernelSpec<double>::gaussian_rbf(1.3), x, oracle::random_samples(rng, 5, 3),
                             oracle::random_samples(rng, 4, 3));
  CHECK(b.ktil_xx().diagonal().isZero(0.0));
  CHECK(b.ktil_yy().diagonal().isZero(0.0));
  CHECK(b.ktil_zz().diagonal().isZero(0.0));
  CHECK(b.ktil_xx()(0, 1) == 1.0);
  CHECK(b.k_xy().rows() == 6);
  CHECK(b.k_xy().cols() == 5);
  CHECK(b.k_xz().cols() == 4);
}

TEST_CASE("gram_bundle errors") {
  std::mt19937_64 rng(3);
  const Samples x = oracle::random_samples(rng, 5, 2);
  const auto rbf = KernelSpec<double>::gaussian_rbf(1.0);
  try {
    gram_bundle(rbf, x, oracle::random_samples(rng, 5, 3), x);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::dimension_mismatch);
  }
  try {
    gram_bundle(rbf, x, x, oracle::random_samples(rng, 2, 2));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::sample_too_small);
  }
}

TEST_CASE("GramBundle::from_matrices validates structure") {
  const Eigen::MatrixXd z3 = Eigen::MatrixXd::Zero(3, 3);
  Eigen::MatrixXd diag = z3;
  diag(1, 1) = 0.5;
  CHECK_THROWS_AS(GramBundle<double>::from_matrices(diag, z3, z3, z3, z3), Error);
  Eigen::MatrixXd asym = z3;
  asym(0, 1) = 1.0;
  CHECK_THROWS_AS(GramBundle<double>::from_matrices(asym, z3, z3, z3, z3), Error);
  CHECK_THROWS_AS(GramBundle<double>::from_matrices(z3, z3, z3, Eigen::MatrixXd::Zero(3, 4), z3), Error);
  CHECK_NOTHROW(GramBundle<double>::from_matrices(z3, z3, z3, z3, z3));
}

TEST_CASE("median_heuristic hand examples") {
  CHECK(median_heuristic(column({0}), column({0, 1, 3})) == 1.0);
  Samples a(1, 2), b(1, 2);
  a << 0, 0;
  b << 3, 4;
  CHECK(median_heuristic(a, b) == 5.0);
  // even count: mean of the two central distances
  CHECK(median_heuristic(column({0}), column({1, 3})) == 2.0);
  // zero median falls back to the smallest nonzero distance
  CHECK(median_heuristic(column({0}), column({0, 0, 0, 2, 5})) == 2.0);
  try {
    median_heuristic(column({1, 1}), column({1, 1, 1}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_data);
  }
}

TEST_CASE("relative_bandwidth averages the two medians") {
  CHECK(relative_bandwidth(column({0}), column({2}), column({4})) == 3.0);
  CHECK(relative_bandwidth(column({0}), column({1, 3}), column({2})) == 2.0);
  std::mt19937_64 rng(11);
  const Samples x = oracle::random_samples(rng, 9, 2);
  const Samples y = oracle::random_samples(rng, 7, 2, 1.0);
  CHECK(relative_bandwidth(x, y, y) == median_heuristic(x, y));
}

TEST_CASE("median_heuristic properties on random data") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> rows(1, 25), dims(1, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index d = dims(rng);
    const Samples a = oracle::random_samples(rng, rows(rng), d);
    const Samples b = oracle::random_samples(rng, rows(rng), d, 0.5);
    const double med = median_heuristic(a, b);
    CHECK(med > 0.0);
    CHECK(med == median_heuristic(b, a));
    // power-of-two scaling is exact in binary floating point
    CHECK(median_heuristic(Samples(2.0 * a), Samples(2.0 * b)) == 2.0 * med);
    CHECK(median_heuristic(Samples(0.25 * a), Samples(0.25 * b)) == 0.25 * med);
    CHECK(median_heuristic(Samples(3.0 * a), Samples(3.0 * b)) == doctest::Approx(3.0 * med).epsilon(1e-14));
  }
}

TEST_CASE("Gram blocks are bitwise symmetric and bounded for rbf") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const Samples x = oracle::random_samples(rng, 3 + trial % 20, 1 + trial % 4);
    const Samples y = oracle::random_samples(rng, 3 + trial % 7, 1 + trial % 4, 2.0);
    const auto b = gram_bundle(KernelSpec<double>::gaussian_rbf(0.5 + 0.1 * trial), x, y, y);
    for (const auto* k : {&b.ktil_xx(), &b.ktil_yy(), &b.ktil_zz()}) {
      CHECK(*k == k->transpose());
      CHECK(k->minCoeff() >= 0.0);
      CHECK(k->maxCoeff() <= 1.0);
    }
    CHECK(b.k_xy().minCoeff() >= 0.0);
    CHECK(b.k_xy().maxCoeff() <= 1.0);
    // every entry matches a direct evaluation
    const auto k = oracle::from_spec(KernelSpec<double>::gaussian_rbf(0.5 + 0.1 * trial));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < y.rows(); ++j)
        CHECK(b.k_xy()(i, j) == doctest::Approx(k(x, i, y, j)).epsilon(1e-14));
  }
}

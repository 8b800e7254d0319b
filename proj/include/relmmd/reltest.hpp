#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "relmmd/estimators.hpp"
#include "relmmd/kernels.hpp"

namespace relmmd {

/// Outcome of the one-sided test of H0: MMD(x,y) <= MMD(x,z).
enum class Decision {
  favor_z,       // Z is significantly closer to X (p <= alpha)
  favor_y,       // Y is significantly closer to X (p >= 1 - alpha)
  inconclusive,
};

inline const char* to_string(Decision d) {
  switch (d) {
    case Decision::favor_z:
      return "favor-z";
    case Decision::favor_y:
      return "favor-y";
    default:
      return "inconclusive";
  }
}

/// Floor applied to the projected variance before taking its square root.
inline constexpr double kProjectedVarianceFloor = 1e-12;

template <typename Scalar = double>
struct TestResult {
  Scalar mmd_xy{};
  Scalar mmd_xz{};
  Scalar statistic{};     // mmd_xy - mmd_xz
  Scalar projected_sd{};  // sqrt(max(var_xy + var_xz - 2 cov, floor))
  Scalar p_value{};
  Scalar alpha{};
  Decision decision = Decision::inconclusive;
  bool degenerate_variance = false;
};

/// Phi(t) through the complementary error function, which keeps full relative
/// precision in the lower tail.
template <typename Scalar>
Scalar std_normal_cdf(Scalar t) {
  using std::erfc;
  using std::sqrt;
  return Scalar(0.5) * erfc(-t / sqrt(Scalar(2)));
}

template <typename Scalar>
Decision decide(Scalar p_value, Scalar alpha) {
  if (p_value <= alpha) return Decision::favor_z;
  if (p_value >= Scalar(1) - alpha) return Decision::favor_y;
  return Decision::inconclusive;
}

/// Projects the joint Gaussian of the two estimates onto the difference axis
/// and reports p = Phi(-(mmd_xy - mmd_xz) / sqrt(var_xy + var_xz - 2 cov)).
template <typename Scalar>
TestResult<Scalar> relative_test(const JointMmdEstimate<Scalar>& joint, Scalar alpha) {
  if (!(alpha > Scalar(0) && alpha < Scalar(1))) {
    throw Error(Errc::invalid_argument, "alpha must lie in (0, 1), got " + std::to_string(double(alpha)));
  }
  TestResult<Scalar> res;
  res.mmd_xy = joint.mmd_xy.value;
  res.mmd_xz = joint.mmd_xz.value;
  res.statistic = res.mmd_xy - res.mmd_xz;
  Scalar projected = joint.projected_variance();
  const Scalar floor = Scalar(kProjectedVarianceFloor);
  if (!(projected >= floor)) {
    projected = floor;
    res.degenerate_variance = true;
  }
  res.projected_sd = std::sqrt(projected);
  res.p_value = std::clamp(std_normal_cdf(-res.statistic / res.projected_sd), Scalar(0), Scalar(1));
  res.alpha = alpha;
  res.decision = decide(res.p_value, alpha);
  return res;
}

/// Disjoint halves of X after a seeded shuffle: shuffled even positions go to
/// the first half, odd positions to the second.
template <typename Scalar>
std::pair<SampleSet<Scalar>, SampleSet<Scalar>> split_reference(const SampleSet<Scalar>& x, std::uint64_t seed) {
  std::vector<Eigen::Index> order(std::size_t(x.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const Eigen::Index first = (x.rows() + 1) / 2;
  SampleSet<Scalar> a(first, x.cols()), b(x.rows() - first, x.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k % 2 == 0)
      a.row(Eigen::Index(k / 2)) = x.row(order[k]);
    else
      b.row(Eigen::Index(k / 2)) = x.row(order[k]);
  }
  return {std::move(a), std::move(b)};
}

/// Baseline that compares MMD^2(X1, Y) with MMD^2(X2, Z) on disjoint halves of
/// X, so the two estimates are independent and the covariance is zero.
template <typename Scalar>
TestResult<Scalar> split_test(const SampleSet<Scalar>& x, const SampleSet<Scalar>& y, const SampleSet<Scalar>& z,
                              const KernelSpec<Scalar>& spec, Scalar alpha, std::uint64_t seed,
                              VarianceScaling scaling = VarianceScaling::exact_ustat) {
  if (x.rows() < 6) {
    throw Error(Errc::sample_too_small,
                "split test needs at least 6 reference rows, got " + std::to_string(x.rows()));
  }
  detail::require_same_dim(x, z, "X", "Z");
  detail::require_rows(z, 3, "Z");
  const auto [x1, x2] = split_reference(x, seed);
  const GramPair<Scalar> gy = gram_pair(spec, x1, y, 3);
  const GramPair<Scalar> gz = gram_pair(spec, x2, z, 3);

  JointMmdEstimate<Scalar> j;
  j.mmd_xy = mmd2_general(gy.view());
  j.mmd_xz = mmd2_general(gz.view());
  j.var_xy = std::max(Scalar(0), variance_scale<Scalar>(x1.rows(), scaling) * variance_zeta1(gy.view()));
  j.var_xz = std::max(Scalar(0), variance_scale<Scalar>(x2.rows(), scaling) * variance_zeta1(gz.view()));
  j.cov_xyxz = Scalar(0);
  j.m = x.rows();
  j.n = y.rows();
  j.r = z.rows();
  return relative_test(j, alpha);
}

}  // namespace relmmd

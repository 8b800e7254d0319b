#pragma once

#include <Eigen/Dense>

#include <string>

#include "relmmd/error.hpp"
#include "relmmd/kernels.hpp"

// Unbiased MMD^2 estimators and plug-in estimates of the leading variance
// component zeta_1 of a second-order U-statistic. The O(m^-2) zeta_2 term is
// not estimated; every variance here is leading order in 1/m.
//
// All contractions e^T A B e are evaluated as dot products of row/column sums,
// so every estimator is O(m^2) in the Gram entries.

namespace relmmd {

enum class EstimatorForm { general, paired_ustat };

template <typename Scalar = double>
struct MmdEstimate {
  Scalar value{};
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  EstimatorForm form = EstimatorForm::general;
};

/// Prefactor applied to zeta_1 when turning it into a variance of the
/// statistic: 4(m-2)/(m(m-1)) for the U-statistic, or its limit 4/m.
enum class VarianceScaling { exact_ustat, leading_order };

/// Which mean product closes a centred cross-moment bracket. `matched` pairs
/// each bracket with the means of the same two embeddings; `legacy` reproduces
/// an older transcription in which one bracket borrows the other candidate's
/// mean. Only `matched` agrees with direct evaluation of the expectations.
enum class MeanPairing { matched, legacy };

template <typename Scalar = double>
struct JointMmdEstimate {
  MmdEstimate<Scalar> mmd_xy;
  MmdEstimate<Scalar> mmd_xz;
  Scalar var_xy{};
  Scalar var_xz{};
  Scalar cov_xyxz{};
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  Eigen::Index r = 0;
  /// Set when a negative plug-in variance was clipped to zero.
  bool variance_clipped = false;

  Scalar projected_variance() const { return var_xy + var_xz - Scalar(2) * cov_xyxz; }
};

namespace detail {

template <typename Scalar>
Scalar as_scalar(Eigen::Index i) {
  return static_cast<Scalar>(i);
}

inline void require_min(Eigen::Index size, Eigen::Index min, const char* what) {
  if (size < min) {
    throw Error(Errc::sample_too_small,
                std::string(what) + " = " + std::to_string(size) + ", at least " + std::to_string(min) + " required");
  }
}

/// Row/column sums of one pair's Gram blocks and their normalized means.
template <typename Scalar>
struct PairSums {
  Vector<Scalar> row_xx;  // K~xx e
  Vector<Scalar> row_yy;  // K~yy e
  Vector<Scalar> row_xy;  // Kxy e    (length m)
  Vector<Scalar> col_xy;  // Kxy^T e  (length n)
  Scalar u_xx, u_yy, u_xy;  // within-x, within-y and cross means
  Scalar m, n;

  explicit PairSums(const GramPairView<Scalar>& g)
      : row_xx(g.ktil_xx.rowwise().sum()),
        row_yy(g.ktil_yy.rowwise().sum()),
        row_xy(g.k_xy.rowwise().sum()),
        col_xy(g.k_xy.colwise().sum().transpose()),
        m(as_scalar<Scalar>(g.m())),
        n(as_scalar<Scalar>(g.n())) {
    u_xx = row_xx.sum() / (m * (m - 1));
    u_yy = row_yy.sum() / (n * (n - 1));
    u_xy = row_xy.sum() / (m * n);
  }
};

}  // namespace detail

/// Unbiased estimate with within-sample U-statistics and the full cross
/// average; allows m != n.
template <typename Scalar>
MmdEstimate<Scalar> mmd2_general(const GramPairView<Scalar>& g) {
  detail::require_min(g.m(), 2, "m");
  detail::require_min(g.n(), 2, "n");
  const Scalar m = detail::as_scalar<Scalar>(g.m());
  const Scalar n = detail::as_scalar<Scalar>(g.n());
  const Scalar value =
      g.ktil_xx.sum() / (m * (m - 1)) + g.ktil_yy.sum() / (n * (n - 1)) - Scalar(2) * g.k_xy.sum() / (m * n);
  return {value, g.m(), g.n(), EstimatorForm::general};
}

/// Paired U-statistic (1/(m(m-1))) sum_{i!=j} h(v_i, v_j) with
/// h = k(x_i,x_j) + k(y_i,y_j) - k(x_i,y_j) - k(x_j,y_i). Needs m == n.
template <typename Scalar>
MmdEstimate<Scalar> mmd2_paired(const GramPairView<Scalar>& g) {
  if (g.m() != g.n()) {
    throw Error(Errc::dimension_mismatch, "paired estimator needs m == n, got m = " + std::to_string(g.m()) +
                                              ", n = " + std::to_string(g.n()));
  }
  detail::require_min(g.m(), 2, "m");
  const Scalar m = detail::as_scalar<Scalar>(g.m());
  const Scalar off_diag_cross = g.k_xy.sum() - g.k_xy.trace();
  const Scalar value = (g.ktil_xx.sum() + g.ktil_yy.sum() - Scalar(2) * off_diag_cross) / (m * (m - 1));
  return {value, g.m(), g.m(), EstimatorForm::paired_ustat};
}

/// Plug-in zeta_1 for Var(MMD_u^2[X, Y]):
///   Var<phi(x),mu_x> - 2 Cov_x(<phi(x),mu_x>, <phi(x),mu_y>)
/// + Var<phi(y),mu_y> - 2 Cov_y(<phi(y),mu_y>, <phi(y),mu_x>)
/// + Var<phi(x),mu_y> + Var<phi(y),mu_x>
/// with leave-one-out means for the within-sample embeddings.
template <typename Scalar>
Scalar variance_zeta1(const GramPairView<Scalar>& g) {
  detail::require_min(g.m(), 3, "m");
  detail::require_min(g.n(), 3, "n");
  const detail::PairSums<Scalar> s(g);
  const Scalar m = s.m, n = s.n;

  const Scalar x_self = s.row_xx.squaredNorm() / (m * (m - 1) * (m - 1)) - s.u_xx * s.u_xx;
  const Scalar x_mixed = s.row_xx.dot(s.row_xy) / (m * (m - 1) * n) - s.u_xx * s.u_xy;
  const Scalar y_self = s.row_yy.squaredNorm() / (n * (n - 1) * (n - 1)) - s.u_yy * s.u_yy;
  const Scalar y_mixed = s.row_yy.dot(s.col_xy) / (n * (n - 1) * m) - s.u_yy * s.u_xy;
  const Scalar cross = s.row_xy.squaredNorm() / (n * n * m) - Scalar(2) * s.u_xy * s.u_xy +
                       s.col_xy.squaredNorm() / (m * m * n);
  return x_self - Scalar(2) * x_mixed + y_self - Scalar(2) * y_mixed + cross;
}

/// Plug-in zeta_1 for Cov(MMD_u^2[X, Y], MMD_u^2[X, Z]); only the shared X
/// sample contributes:
///   Var<phi(x),mu_x> - Cov(<phi(x),mu_x>, <phi(x),mu_z>)
/// - Cov(<phi(x),mu_x>, <phi(x),mu_y>) + Cov(<phi(x),mu_y>, <phi(x),mu_z>).
template <typename Scalar>
Scalar covariance_zeta1(const GramBundle<Scalar>& b, MeanPairing pairing = MeanPairing::matched) {
  detail::require_min(b.m(), 3, "m");
  detail::require_min(b.n(), 3, "n");
  detail::require_min(b.r(), 3, "r");
  const Scalar m = detail::as_scalar<Scalar>(b.m());
  const Scalar n = detail::as_scalar<Scalar>(b.n());
  const Scalar r = detail::as_scalar<Scalar>(b.r());

  const Vector<Scalar> row_xx = b.ktil_xx().rowwise().sum();
  const Vector<Scalar> row_xy = b.k_xy().rowwise().sum();
  const Vector<Scalar> row_xz = b.k_xz().rowwise().sum();
  const Scalar sum_xx = row_xx.sum(), sum_xy = row_xy.sum(), sum_xz = row_xz.sum();
  const Scalar u_xx = sum_xx / (m * (m - 1));
  const Scalar u_xy = sum_xy / (m * n);
  const Scalar u_xz = sum_xz / (m * r);

  const Scalar x_self = row_xx.squaredNorm() / (m * (m - 1) * (m - 1)) - u_xx * u_xx;
  const Scalar with_z = row_xx.dot(row_xz) / (m * (m - 1) * r) - u_xx * u_xz;
  const Scalar y_mean_product = pairing == MeanPairing::matched ? u_xx * u_xy : sum_xx * sum_xz / (m * m * (m - 1) * n);
  const Scalar with_y = row_xx.dot(row_xy) / (m * (m - 1) * n) - y_mean_product;
  const Scalar y_with_z = row_xy.dot(row_xz) / (m * n * r) - u_xy * u_xz;
  return x_self - with_z - with_y + y_with_z;
}

/// Plug-in zeta_1 of the difference statistic MMD_u^2[X,Y] - MMD_u^2[X,Z],
/// treated as one U-statistic over joint draws d = (x, y, z); needs m = n = r.
template <typename Scalar>
Scalar diff_variance_direct(const GramBundle<Scalar>& b, MeanPairing pairing = MeanPairing::matched) {
  if (b.m() != b.n() || b.m() != b.r()) {
    throw Error(Errc::dimension_mismatch, "difference variance needs m == n == r, got " + std::to_string(b.m()) +
                                              ", " + std::to_string(b.n()) + ", " + std::to_string(b.r()));
  }
  detail::require_min(b.m(), 3, "m");
  const detail::PairSums<Scalar> y(b.xy());
  const detail::PairSums<Scalar> z(b.xz());
  const Scalar m = y.m, n = y.n, r = z.n;

  Scalar t = y.row_yy.squaredNorm() / (n * (n - 1) * (n - 1)) - y.u_yy * y.u_yy;
  t += y.row_xy.squaredNorm() / (n * n * m) - y.u_xy * y.u_xy;
  t += y.col_xy.squaredNorm() / (n * m * m) - y.u_xy * y.u_xy;
  t += z.row_yy.squaredNorm() / (r * (r - 1) * (r - 1)) - z.u_yy * z.u_yy;
  t += z.col_xy.squaredNorm() / (r * m * m) - z.u_xy * z.u_xy;
  t += z.row_xy.squaredNorm() / (r * r * m) - z.u_xy * z.u_xy;

  t -= Scalar(2) * (y.row_yy.dot(y.col_xy) / (n * (n - 1) * m) - y.u_yy * y.u_xy);
  t -= Scalar(2) * (y.row_xy.dot(z.row_xy) / (n * m * r) - y.u_xy * z.u_xy);
  const Scalar z_mean_product = pairing == MeanPairing::matched ? z.u_yy * z.u_xy : y.u_yy * y.u_xy;
  t -= Scalar(2) * (z.row_yy.dot(z.col_xy) / (r * (r - 1) * m) - z_mean_product);
  return t;
}

template <typename Scalar>
Scalar variance_scale(Eigen::Index m, VarianceScaling scaling) {
  const Scalar mm = detail::as_scalar<Scalar>(m);
  return scaling == VarianceScaling::exact_ustat ? Scalar(4) * (mm - 2) / (mm * (mm - 1)) : Scalar(4) / mm;
}

/// Both MMD^2 estimates with their variances and covariance. Every entry uses
/// the prefactor of the shared reference size m, also when n or r differ.
template <typename Scalar>
JointMmdEstimate<Scalar> joint_estimate(const GramBundle<Scalar>& b,
                                        VarianceScaling scaling = VarianceScaling::exact_ustat,
                                        MeanPairing pairing = MeanPairing::matched) {
  detail::require_min(b.m(), 3, "m");
  detail::require_min(b.n(), 3, "n");
  detail::require_min(b.r(), 3, "r");
  const Scalar c = variance_scale<Scalar>(b.m(), scaling);

  JointMmdEstimate<Scalar> j;
  j.mmd_xy = mmd2_general(b.xy());
  j.mmd_xz = mmd2_general(b.xz());
  j.var_xy = c * variance_zeta1(b.xy());
  j.var_xz = c * variance_zeta1(b.xz());
  j.cov_xyxz = c * covariance_zeta1(b, pairing);
  j.m = b.m();
  j.n = b.n();
  j.r = b.r();
  if (j.var_xy < Scalar(0)) {
    j.var_xy = Scalar(0);
    j.variance_clipped = true;
  }
  if (j.var_xz < Scalar(0)) {
    j.var_xz = Scalar(0);
    j.variance_clipped = true;
  }
  if (!std::isfinite(j.mmd_xy.value) || !std::isfinite(j.mmd_xz.value) || !std::isfinite(j.var_xy) ||
      !std::isfinite(j.var_xz) || !std::isfinite(j.cov_xyxz)) {
    throw Error(Errc::non_finite, "joint estimate produced a non-finite value");
  }
  return j;
}

}  // namespace relmmd

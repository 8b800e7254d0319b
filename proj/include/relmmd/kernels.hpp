#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "relmmd/error.hpp"

namespace relmmd {

/// Observations stored one per row.
template <typename Scalar>
using SampleSet = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class KernelFamily { gaussian_rbf, linear };

inline const char* to_string(KernelFamily family) {
  return family == KernelFamily::gaussian_rbf ? "rbf" : "linear";
}

/// k(u,v) = exp(-|u-v|^2 / (2 bandwidth^2)) for the Gaussian family,
/// <u,v> for the linear one. The bandwidth is in distance units of the data.
template <typename Scalar = double>
class KernelSpec {
 public:
  static KernelSpec gaussian_rbf(Scalar bandwidth) {
    if (!(bandwidth > Scalar(0)) || !std::isfinite(bandwidth)) {
      throw Error(Errc::invalid_argument,
                  "rbf bandwidth must be positive and finite, got " + std::to_string(double(bandwidth)));
    }
    return KernelSpec(KernelFamily::gaussian_rbf, bandwidth);
  }

  static KernelSpec linear() { return KernelSpec(KernelFamily::linear, Scalar(0)); }

  KernelFamily family() const noexcept { return family_; }
  Scalar bandwidth() const noexcept { return bandwidth_; }

  /// Kernel value for two rows/vectors; no argument checking.
  template <typename DerivedU, typename DerivedV>
  Scalar operator()(const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v) const {
    if (family_ == KernelFamily::linear) return u.dot(v);
    return std::exp(-(u - v).squaredNorm() * neg_half_inv_bw2_);
  }

 private:
  KernelSpec(KernelFamily family, Scalar bandwidth)
      : family_(family),
        bandwidth_(bandwidth),
        neg_half_inv_bw2_(family == KernelFamily::gaussian_rbf ? Scalar(1) / (Scalar(2) * bandwidth * bandwidth)
                                                               : Scalar(0)) {}

  KernelFamily family_;
  Scalar bandwidth_;
  Scalar neg_half_inv_bw2_;
};

/// Checked single evaluation.
template <typename Scalar, typename DerivedU, typename DerivedV>
Scalar kernel_eval(const KernelSpec<Scalar>& spec, const Eigen::MatrixBase<DerivedU>& u,
                   const Eigen::MatrixBase<DerivedV>& v) {
  if (u.size() != v.size()) {
    throw Error(Errc::dimension_mismatch, "kernel arguments differ in dimension: " + std::to_string(u.size()) +
                                              " vs " + std::to_string(v.size()));
  }
  if (!u.allFinite() || !v.allFinite()) throw Error(Errc::non_finite, "kernel argument contains a non-finite entry");
  return spec(u, v);
}

/// Gram matrix of a set with itself, diagonal set to zero. Each unordered pair
/// is evaluated once and mirrored, so the result is bitwise symmetric.
template <typename Scalar>
Matrix<Scalar> self_gram_zero_diag(const KernelSpec<Scalar>& spec, const SampleSet<Scalar>& a) {
  const Eigen::Index count = a.rows();
  Matrix<Scalar> gram(count, count);
  for (Eigen::Index j = 0; j < count; ++j) {
    gram(j, j) = Scalar(0);
    for (Eigen::Index i = j + 1; i < count; ++i) {
      const Scalar value = spec(a.row(i), a.row(j));
      gram(i, j) = value;
      gram(j, i) = value;
    }
  }
  return gram;
}

template <typename Scalar>
Matrix<Scalar> cross_gram(const KernelSpec<Scalar>& spec, const SampleSet<Scalar>& a, const SampleSet<Scalar>& b) {
  Matrix<Scalar> gram(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) gram(i, j) = spec(a.row(i), b.row(j));
  return gram;
}

namespace detail {

template <typename Scalar>
void require_finite(const SampleSet<Scalar>& s, const char* name) {
  if (!s.allFinite()) throw Error(Errc::non_finite, std::string(name) + " contains a non-finite entry");
}

template <typename Scalar>
void require_same_dim(const SampleSet<Scalar>& a, const SampleSet<Scalar>& b, const char* an, const char* bn) {
  if (a.cols() != b.cols()) {
    throw Error(Errc::dimension_mismatch, std::string("feature dimension of ") + an + " (" +
                                              std::to_string(a.cols()) + ") differs from " + bn + " (" +
                                              std::to_string(b.cols()) + ")");
  }
}

template <typename Scalar>
void require_rows(const SampleSet<Scalar>& s, Eigen::Index min_rows, const char* name) {
  if (s.rows() < min_rows) {
    throw Error(Errc::sample_too_small, std::string(name) + " has " + std::to_string(s.rows()) +
                                            " rows, at least " + std::to_string(min_rows) + " required");
  }
}

template <typename Scalar>
bool zero_diag_symmetric(const Matrix<Scalar>& k) {
  if (k.rows() != k.cols()) return false;
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    if (k(j, j) != Scalar(0)) return false;
    for (Eigen::Index i = j + 1; i < k.rows(); ++i)
      if (k(i, j) != k(j, i)) return false;
  }
  return true;
}

}  // namespace detail

/// Non-owning view of the three blocks needed for one reference/candidate pair.
template <typename Scalar>
struct GramPairView {
  const Matrix<Scalar>& ktil_xx;
  const Matrix<Scalar>& ktil_yy;
  const Matrix<Scalar>& k_xy;

  Eigen::Index m() const noexcept { return ktil_xx.rows(); }
  Eigen::Index n() const noexcept { return ktil_yy.rows(); }
};

/// Owning Gram blocks for a single pair (X, Y).
template <typename Scalar>
struct GramPair {
  Matrix<Scalar> ktil_xx;
  Matrix<Scalar> ktil_yy;
  Matrix<Scalar> k_xy;

  GramPairView<Scalar> view() const { return {ktil_xx, ktil_yy, k_xy}; }
};

template <typename Scalar>
GramPair<Scalar> gram_pair(const KernelSpec<Scalar>& spec, const SampleSet<Scalar>& x, const SampleSet<Scalar>& y,
                           Eigen::Index min_rows = 2) {
  detail::require_same_dim(x, y, "X", "Y");
  detail::require_rows(x, min_rows, "X");
  detail::require_rows(y, min_rows, "Y");
  detail::require_finite(x, "X");
  detail::require_finite(y, "Y");
  return {self_gram_zero_diag(spec, x), self_gram_zero_diag(spec, y), cross_gram(spec, x, y)};
}

/// Kernel matrices for a reference sample X and candidates Y, Z. Self-blocks
/// carry zeroed diagonals.
template <typename Scalar>
class GramBundle {
 public:
  /// Wraps precomputed blocks after validating shape, symmetry and finiteness.
  static GramBundle from_matrices(Matrix<Scalar> ktil_xx, Matrix<Scalar> ktil_yy, Matrix<Scalar> ktil_zz,
                                  Matrix<Scalar> k_xy, Matrix<Scalar> k_xz) {
    for (const auto* k : {&ktil_xx, &ktil_yy, &ktil_zz}) {
      if (!detail::zero_diag_symmetric(*k))
        throw Error(Errc::invalid_argument, "self Gram block must be square, symmetric, with zero diagonal");
    }
    if (k_xy.rows() != ktil_xx.rows() || k_xy.cols() != ktil_yy.rows() || k_xz.rows() != ktil_xx.rows() ||
        k_xz.cols() != ktil_zz.rows()) {
      throw Error(Errc::dimension_mismatch, "cross Gram block shape inconsistent with self blocks");
    }
    for (const auto* k : {&ktil_xx, &ktil_yy, &ktil_zz, &k_xy, &k_xz}) {
      if (!k->allFinite()) throw Error(Errc::non_finite, "Gram block contains a non-finite entry");
    }
    GramBundle b;
    b.ktil_xx_ = std::move(ktil_xx);
    b.ktil_yy_ = std::move(ktil_yy);
    b.ktil_zz_ = std::move(ktil_zz);
    b.k_xy_ = std::move(k_xy);
    b.k_xz_ = std::move(k_xz);
    return b;
  }

  const Matrix<Scalar>& ktil_xx() const noexcept { return ktil_xx_; }
  const Matrix<Scalar>& ktil_yy() const noexcept { return ktil_yy_; }
  const Matrix<Scalar>& ktil_zz() const noexcept { return ktil_zz_; }
  const Matrix<Scalar>& k_xy() const noexcept { return k_xy_; }
  const Matrix<Scalar>& k_xz() const noexcept { return k_xz_; }

  Eigen::Index m() const noexcept { return ktil_xx_.rows(); }
  Eigen::Index n() const noexcept { return ktil_yy_.rows(); }
  Eigen::Index r() const noexcept { return ktil_zz_.rows(); }

  GramPairView<Scalar> xy() const { return {ktil_xx_, ktil_yy_, k_xy_}; }
  GramPairView<Scalar> xz() const { return {ktil_xx_, ktil_zz_, k_xz_}; }

  /// The same bundle with the roles of Y and Z exchanged.
  GramBundle swapped_candidates() const {
    GramBundle b(*this);
    std::swap(b.ktil_yy_, b.ktil_zz_);
    std::swap(b.k_xy_, b.k_xz_);
    return b;
  }

 private:
  GramBundle() = default;

  template <typename S>
  friend GramBundle<S> gram_bundle(const KernelSpec<S>&, const SampleSet<S>&, const SampleSet<S>&,
                                   const SampleSet<S>&);

  Matrix<Scalar> ktil_xx_, ktil_yy_, ktil_zz_, k_xy_, k_xz_;
};

template <typename Scalar>
GramBundle<Scalar> gram_bundle(const KernelSpec<Scalar>& spec, const SampleSet<Scalar>& x, const SampleSet<Scalar>& y,
                               const SampleSet<Scalar>& z) {
  detail::require_same_dim(x, y, "X", "Y");
  detail::require_same_dim(x, z, "X", "Z");
  // The variance prefactor 4(m-2)/(m(m-1)) needs at least three rows.
  detail::require_rows(x, 3, "X");
  detail::require_rows(y, 3, "Y");
  detail::require_rows(z, 3, "Z");
  detail::require_finite(x, "X");
  detail::require_finite(y, "Y");
  detail::require_finite(z, "Z");

  GramBundle<Scalar> b;
  b.ktil_xx_ = self_gram_zero_diag(spec, x);
  b.ktil_yy_ = self_gram_zero_diag(spec, y);
  b.ktil_zz_ = self_gram_zero_diag(spec, z);
  b.k_xy_ = cross_gram(spec, x, y);
  b.k_xz_ = cross_gram(spec, x, z);
  return b;
}

/// Median of the Euclidean distances over all cross pairs (a_i, b_j). An even
/// count averages the two central values. A zero median falls back to the
/// smallest nonzero distance.
template <typename Scalar>
Scalar median_heuristic(const SampleSet<Scalar>& a, const SampleSet<Scalar>& b) {
  detail::require_same_dim(a, b, "A", "B");
  detail::require_rows(a, 1, "A");
  detail::require_rows(b, 1, "B");
  detail::require_finite(a, "A");
  detail::require_finite(b, "B");

  std::vector<Scalar> dist;
  dist.reserve(std::size_t(a.rows() * b.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) dist.push_back((a.row(i) - b.row(j)).norm());

  const std::size_t half = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + half, dist.end());
  Scalar median = dist[half];
  if (dist.size() % 2 == 0) {
    const Scalar lower = *std::max_element(dist.begin(), dist.begin() + half);
    median = (lower + median) / Scalar(2);
  }
  if (median > Scalar(0)) return median;

  Scalar smallest = std::numeric_limits<Scalar>::infinity();
  for (Scalar d : dist)
    if (d > Scalar(0)) smallest = std::min(smallest, d);
  if (!std::isfinite(smallest)) throw Error(Errc::degenerate_data, "all cross-pair distances are zero");
  return smallest;
}

/// Mean of the X-Y and X-Z median heuristics; one bandwidth shared by both MMDs.
template <typename Scalar>
Scalar relative_bandwidth(const SampleSet<Scalar>& x, const SampleSet<Scalar>& y, const SampleSet<Scalar>& z) {
  return (median_heuristic(x, y) + median_heuristic(x, z)) / Scalar(2);
}

}  // namespace relmmd

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "cdrgeo/error.hpp"

namespace cdrgeo {

/// Angle between two same-indexed vectors, in degrees within [0, 180].
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar cosine_degrees(const Eigen::MatrixBase<DerivedU>& u,
                                         const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  if (u.size() != v.size())
    throw std::invalid_argument("cosine_degrees: vectors differ in length");
  const Scalar nu = u.norm();
  const Scalar nv = v.norm();
  if (!(nu > Scalar(0)) || !(nv > Scalar(0)))
    throw std::invalid_argument("cosine_degrees: zero-norm vector");
  // 2 atan2(|û - v̂|, |û + v̂|) equals acos of the clamped cosine but keeps
  // full precision near 0° and 180°.
  const auto uh = (u / nu).eval();
  const auto vh = (v / nv).eval();
  const Scalar angle = Scalar(2) * std::atan2((uh - vh).norm(), (uh + vh).norm());
  return angle * Scalar(180) / std::numbers::pi_v<Scalar>;
}

enum class HotspotClass { cold = -1, neutral = 0, hot = 1 };

std::string_view to_string(HotspotClass c);

/// One-sided 5% per tail, i.e. the two-sided 90% interval.
inline constexpr double kDefaultZCrit = 1.645;

struct GiStarResult {
  Eigen::VectorXd z;
  std::vector<HotspotClass> cls;
  double z_crit = kDefaultZCrit;
};

inline HotspotClass classify(double z, double z_crit) {
  if (z >= z_crit) return HotspotClass::hot;
  if (z <= -z_crit) return HotspotClass::cold;
  return HotspotClass::neutral;
}

/// Getis-Ord G_i* z-scores. `w` holds the weights including the diagonal for
/// the star form:
///   z_i = (Σ_j w_ij x_j - X̄ Σ_j w_ij) /
///         (S sqrt[(n Σ_j w_ij² - (Σ_j w_ij)²) / (n - 1)])
/// with X̄ the mean and S the population standard deviation of x. The
/// numerator and S are evaluated on centred values, which is algebraically
/// the same and keeps z invariant to translations of x.
template <typename Derived, typename Scalar, int Options>
GiStarResult getis_ord_gi_star(const Eigen::MatrixBase<Derived>& x,
                               const Eigen::SparseMatrix<Scalar, Options>& w,
                               double z_crit = kDefaultZCrit) {
  const Eigen::Index n = x.size();
  if (n < 3) throw std::invalid_argument("getis_ord_gi_star: need at least 3 units");
  if (w.rows() != n || w.cols() != n)
    throw std::invalid_argument("getis_ord_gi_star: weights do not match values");

  const Eigen::VectorXd xv = x.template cast<double>();
  const double mean = xv.mean();
  const Eigen::VectorXd centred = xv.array() - mean;
  const double s = std::sqrt(centred.squaredNorm() / double(n));
  if (!(s > 0.0)) throw DegenerateField("all values equal");

  const Eigen::SparseMatrix<double, Options> wd = w.template cast<double>();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd lag = wd * centred;
  const Eigen::VectorXd wsum = wd * ones;
  const Eigen::VectorXd w2sum = wd.cwiseAbs2() * ones;

  GiStarResult out;
  out.z_crit = z_crit;
  out.z.resize(n);
  out.cls.resize(static_cast<std::size_t>(n));
  const double nd = double(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double var = (nd * w2sum[i] - wsum[i] * wsum[i]) / (nd - 1.0);
    // A unit whose weights cover every unit equally has no local contrast.
    out.z[i] = var > 0.0 ? lag[i] / (s * std::sqrt(var)) : 0.0;
    out.cls[static_cast<std::size_t>(i)] = classify(out.z[i], z_crit);
  }
  return out;
}

struct Correlation {
  double r = 0.0;
  std::size_t n = 0;
};

inline constexpr std::size_t kMinCorrelationPairs = 3;

/// Pearson product-moment correlation with pairwise deletion of NaNs.
/// Throws std::invalid_argument below 3 pairs and DegenerateField on zero
/// variance in either argument.
template <typename DerivedX, typename DerivedY>
Correlation pearson(const Eigen::MatrixBase<DerivedX>& x,
                    const Eigen::MatrixBase<DerivedY>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("pearson: vectors differ in length");
  std::vector<double> xs, ys;
  xs.reserve(static_cast<std::size_t>(x.size()));
  ys.reserve(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = double(x(i));
    const double yi = double(y(i));
    if (std::isnan(xi) || std::isnan(yi)) continue;
    xs.push_back(xi);
    ys.push_back(yi);
  }
  const std::size_t n = xs.size();
  if (n < kMinCorrelationPairs)
    throw std::invalid_argument("pearson: fewer than 3 complete pairs");

  const Eigen::Map<const Eigen::VectorXd> xm(xs.data(), Eigen::Index(n));
  const Eigen::Map<const Eigen::VectorXd> ym(ys.data(), Eigen::Index(n));
  const Eigen::VectorXd dx = xm.array() - xm.mean();
  const Eigen::VectorXd dy = ym.array() - ym.mean();
  const double sxx = dx.squaredNorm();
  const double syy = dy.squaredNorm();
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DegenerateField("zero variance in pearson input");
  const double r = dx.dot(dy) / std::sqrt(sxx * syy);
  return {std::clamp(r, -1.0, 1.0), n};
}

struct HotspotAgreement {
  double hot_jaccard = 1.0;
  double cold_jaccard = 1.0;
  /// Rows: class in a, columns: class in b, ordered cold, neutral, hot.
  Eigen::Matrix3i confusion = Eigen::Matrix3i::Zero();
};

/// Jaccard index of hot sets and of cold sets (1 when both sets are empty)
/// plus the class confusion matrix.
HotspotAgreement hotspot_agreement(const GiStarResult& a, const GiStarResult& b);

}  // namespace cdrgeo

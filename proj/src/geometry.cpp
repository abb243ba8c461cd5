#include "disperse/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace disperse {

namespace detail {

void CheckSameDim(const VecRef& x, const VecRef& y, const char* op) {
  if (x.size() != y.size()) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
  }
}

}  // namespace detail

Vec NormalizedOrThrow(Vec v) {
  if (v.size() < 2) throw std::invalid_argument("unit vector needs dimension >= 2");
  const double n = v.norm();
  if (n <= kRenormThreshold) throw std::invalid_argument("cannot normalize near-zero vector");
  v /= n;
  return v;
}

void RenormalizeInPlace(Eigen::Ref<Eigen::VectorXd> v) {
  const double n = v.norm();
  if (std::abs(n - 1.0) > kRenormThreshold) v /= n;
}

bool IsUnit(const VecRef& v, double tol) { return std::abs(v.norm() - 1.0) <= tol; }

UnitVector::UnitVector(Vec coords) : coords_(std::move(coords)) {
  if (coords_.size() < 2) throw std::invalid_argument("UnitVector: dimension must be >= 2");
  if (!IsUnit(coords_)) throw std::invalid_argument("UnitVector: input is not unit norm");
  RenormalizeInPlace(coords_);
}

TangentVector::TangentVector(UnitVector base_in, Vec direction_in)
    : base(std::move(base_in)), direction(std::move(direction_in)) {
  if (base.dim() != direction.size()) throw std::invalid_argument("TangentVector: dimension mismatch");
  const double dn = direction.norm();
  if (std::abs(base.coords().dot(direction)) > kTangentTol * std::max(dn, 1e-300)) {
    throw std::invalid_argument("TangentVector: direction not orthogonal to base");
  }
}

Configuration::Configuration(Mat points) : points_(std::move(points)) {
  if (points_.cols() < 1) throw std::invalid_argument("Configuration: needs at least one point");
  if (points_.rows() < 2) throw std::invalid_argument("Configuration: dimension must be >= 2");
  for (Index i = 0; i < points_.cols(); ++i) {
    if (!IsUnit(points_.col(i))) {
      throw std::invalid_argument("Configuration: point " + std::to_string(i) + " is not unit norm");
    }
    RenormalizeInPlace(points_.col(i));
  }
}

void Configuration::set_point(Index i, const VecRef& p) {
  detail::CheckSameDim(points_.col(i), p, "Configuration::set_point");
  if (p.norm() <= kRenormThreshold) {
    throw std::invalid_argument("Configuration::set_point: near-zero point");
  }
  points_.col(i) = p;
  RenormalizeInPlace(points_.col(i));
}

Configuration Configuration::Subset(const std::vector<Index>& indices) const {
  Mat sub(dim(), static_cast<Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) sub.col(static_cast<Index>(k)) = points_.col(indices[k]);
  return Configuration(std::move(sub));
}

GreatCircle::GreatCircle(Vec p, Vec q) : p_(std::move(p)), q_(std::move(q)) {
  detail::CheckSameDim(p_, q_, "GreatCircle");
  if (!IsUnit(p_) || !IsUnit(q_)) throw std::invalid_argument("GreatCircle: p, q must be unit vectors");
  RenormalizeInPlace(p_);
  RenormalizeInPlace(q_);
  if (std::abs(p_.dot(q_)) > 1e-8) throw std::invalid_argument("GreatCircle: p, q must be orthogonal");
}

double GeodesicDistance(const VecRef& x, const VecRef& y) {
  detail::CheckSameDim(x, y, "GeodesicDistance");
  // Dot products of unit vectors can exceed [-1,1] by ~1e-16.
  const double t = std::clamp(x.dot(y), -1.0, 1.0);
  return std::acos(t);
}

double ChordalDistance(const VecRef& x, const VecRef& y) {
  detail::CheckSameDim(x, y, "ChordalDistance");
  return (x - y).norm();
}

Vec TangentProject(const VecRef& x, const VecRef& g) {
  detail::CheckSameDim(x, g, "TangentProject");
  return g - x.dot(g) * x;
}

Vec RetractExp(const VecRef& x, const VecRef& v) {
  detail::CheckSameDim(x, v, "RetractExp");
  const double norm = v.norm();
  if (norm < 1e-12) return x;
  Vec out = std::cos(norm) * x + (std::sin(norm) / norm) * v;
  RenormalizeInPlace(out);
  return out;
}

Vec RetractProj(const VecRef& x, const VecRef& v) {
  detail::CheckSameDim(x, v, "RetractProj");
  Vec out = x + v;
  const double norm = out.norm();
  if (norm <= 1e-12) {
    throw DegenerateProjectionError("RetractProj: ||x+v|| <= 1e-12, projection undefined near origin");
  }
  out /= norm;
  return out;
}

Vec LogMap(const VecRef& x, const VecRef& y) {
  detail::CheckSameDim(x, y, "LogMap");
  const double t = std::clamp(x.dot(y), -1.0, 1.0);
  const double theta = std::acos(t);
  if (theta > kPi - kAntipodalTol) {
    throw AntipodalError("LogMap: antipodal input, direction not unique");
  }
  Vec u = y - t * x;  // unnormalized tangent direction, ||u|| = sin(theta)
  u -= x.dot(u) * x;  // scrub the rounding residual so tangency holds relative to ||u||
  const double un = u.norm();
  if (un < 1e-15) return Vec::Zero(x.size());
  return (theta / un) * u;
}

double ProjectGreatCircle(const VecRef& x, const GreatCircle& c, bool* degenerate) {
  detail::CheckSameDim(x, c.p(), "ProjectGreatCircle");
  const double a = x.dot(c.p());
  const double b = x.dot(c.q());
  if (degenerate != nullptr) *degenerate = false;
  if (a * a + b * b < 1e-24) {
    if (degenerate != nullptr) *degenerate = true;
    return 0.0;
  }
  double theta = std::atan2(b, a);
  if (theta >= kPi) theta -= 2.0 * kPi;  // atan2 may return exactly +pi
  return theta;
}

Vec CirclePoint(const GreatCircle& c, double theta) {
  return std::cos(theta) * c.p() + std::sin(theta) * c.q();
}

Configuration SampleUniform(Index n, Index m, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("SampleUniform: n must be >= 1");
  if (m < 2) throw std::invalid_argument("SampleUniform: m must be >= 2");
  Mat pts(m, n);
  for (Index i = 0; i < n; ++i) {
    double norm2;
    do {
      for (Index d = 0; d < m; ++d) pts(d, i) = rng.Gaussian();
      norm2 = pts.col(i).squaredNorm();
    } while (norm2 < 1e-24);
    pts.col(i) /= std::sqrt(norm2);
  }
  return Configuration(std::move(pts));
}

Configuration SamplePowerSpherical(Index n, Index m, const VecRef& mu, double kappa, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("SamplePowerSpherical: n must be >= 1");
  if (mu.size() != m) throw std::invalid_argument("SamplePowerSpherical: mu dimension mismatch");
  if (kappa < 0.0) throw std::invalid_argument("SamplePowerSpherical: kappa must be >= 0");
  if (!IsUnit(mu)) throw std::invalid_argument("SamplePowerSpherical: mu must be unit norm");

  const double alpha = (static_cast<double>(m) - 1.0) / 2.0 + kappa;
  const double beta = (static_cast<double>(m) - 1.0) / 2.0;

  // Householder reflection mapping e1 to mu (identity when mu ~ e1).
  Vec u = -mu;
  u(0) += 1.0;
  const double un = u.norm();
  const bool reflect = un > 1e-12;
  if (reflect) u /= un;

  Mat pts(m, n);
  Vec y(m);
  for (Index i = 0; i < n; ++i) {
    const double z = rng.Beta(alpha, beta);
    const double t = std::clamp(2.0 * z - 1.0, -1.0, 1.0);
    // Uniform direction on the sphere orthogonal complement (dimension m-1).
    double norm2;
    do {
      for (Index d = 1; d < m; ++d) y(d) = rng.Gaussian();
      norm2 = y.tail(m - 1).squaredNorm();
    } while (norm2 < 1e-24);
    y.tail(m - 1) *= std::sqrt(std::max(0.0, 1.0 - t * t) / norm2);
    y(0) = t;
    if (reflect) {
      pts.col(i) = y - 2.0 * u.dot(y) * u;
    } else {
      pts.col(i) = y;
    }
    RenormalizeInPlace(pts.col(i));
  }
  return Configuration(std::move(pts));
}

GreatCircle SampleGreatCircle(Index m, CircleMode mode, RngStream& rng) {
  if (m < 2) throw std::invalid_argument("SampleGreatCircle: m must be >= 2");
  if (mode == CircleMode::kAxisAligned) {
    const Index i = static_cast<Index>(rng.Below(static_cast<std::uint64_t>(m)));
    Index j = static_cast<Index>(rng.Below(static_cast<std::uint64_t>(m - 1)));
    if (j >= i) ++j;
    Vec p = Vec::Zero(m);
    Vec q = Vec::Zero(m);
    p(i) = 1.0;
    q(j) = 1.0;
    return GreatCircle(std::move(p), std::move(q));
  }
  // Gram-Schmidt on two standard-normal vectors.
  for (;;) {
    Vec p(m);
    Vec q(m);
    for (Index d = 0; d < m; ++d) p(d) = rng.Gaussian();
    for (Index d = 0; d < m; ++d) q(d) = rng.Gaussian();
    const double pn = p.norm();
    if (pn < 1e-12) continue;
    p /= pn;
    q -= p.dot(q) * p;
    const double qn = q.norm();
    if (qn < 1e-12) continue;
    q /= qn;
    q -= p.dot(q) * p;  // second pass for strict orthogonality
    q.normalize();
    return GreatCircle(std::move(p), std::move(q));
  }
}

}  // namespace disperse

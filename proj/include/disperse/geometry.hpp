#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

#include "disperse/rng.hpp"

namespace disperse {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;
using VecRef = Eigen::Ref<const Eigen::VectorXd>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Norm drift beyond this is repaired by renormalization.
inline constexpr double kRenormThreshold = 1e-12;
// Points further from unit norm than this are rejected as invalid input.
inline constexpr double kUnitNormTol = 1e-6;
// Tangency tolerance, relative to the direction norm.
inline constexpr double kTangentTol = 1e-8;
// log_map refuses inputs with geodesic distance beyond pi - this.
inline constexpr double kAntipodalTol = 1e-6;

struct AntipodalError : std::domain_error {
  explicit AntipodalError(const std::string& what) : std::domain_error(what) {}
};

struct DegenerateProjectionError : std::domain_error {
  explicit DegenerateProjectionError(const std::string& what) : std::domain_error(what) {}
};

namespace detail {
void CheckSameDim(const VecRef& x, const VecRef& y, const char* op);
}  // namespace detail

// Returns v normalized to unit length; throws if ||v|| <= kRenormThreshold
// or dim(v) < 2.
Vec NormalizedOrThrow(Vec v);

// Repairs tiny norm drift in place; leaves exactly-unit vectors untouched.
void RenormalizeInPlace(Eigen::Ref<Eigen::VectorXd> v);

bool IsUnit(const VecRef& v, double tol = kUnitNormTol);

// A point on the unit hypersphere S_m. Construction validates (and repairs
// small drift of) the unit-norm invariant.
class UnitVector {
 public:
  explicit UnitVector(Vec coords);
  // Normalizes an arbitrary nonzero vector.
  static UnitVector Normalized(Vec coords) { return UnitVector(NormalizedOrThrow(std::move(coords))); }

  const Vec& coords() const { return coords_; }
  Index dim() const { return coords_.size(); }

 private:
  Vec coords_;
};

// A vector in the tangent space at `base`, i.e. orthogonal to it.
struct TangentVector {
  TangentVector(UnitVector base_in, Vec direction_in);
  UnitVector base;
  Vec direction;
};

// Ordered collection of n unit vectors sharing dimension m, stored as the
// columns of an m x n matrix.
class Configuration {
 public:
  // Validates every column; repairs drift above kRenormThreshold.
  explicit Configuration(Mat points);

  Index dim() const { return points_.rows(); }
  Index size() const { return points_.cols(); }

  const Mat& points() const { return points_; }
  Mat& mutable_points() { return points_; }

  Eigen::Ref<const Eigen::VectorXd> point(Index i) const { return points_.col(i); }
  void set_point(Index i, const VecRef& p);

  Configuration Subset(const std::vector<Index>& indices) const;

 private:
  Mat points_;
};

// Orthonormal pair (p, q) identifying a great circle.
class GreatCircle {
 public:
  GreatCircle(Vec p, Vec q);
  const Vec& p() const { return p_; }
  const Vec& q() const { return q_; }
  Index dim() const { return p_.size(); }

 private:
  Vec p_;
  Vec q_;
};

enum class CircleMode { kUniform, kAxisAligned };

// arccos(clamp(<x,y>, -1, 1)), in [0, pi].
double GeodesicDistance(const VecRef& x, const VecRef& y);

// ||x - y||, in [0, 2] for unit inputs.
double ChordalDistance(const VecRef& x, const VecRef& y);

// (I - x x^T) g.
Vec TangentProject(const VecRef& x, const VecRef& g);

// Exponential-map retraction cos(||v||) x + sin(||v||) v/||v||.
// Returns x for ||v|| < 1e-12.
Vec RetractExp(const VecRef& x, const VecRef& v);

// Projection retraction (x+v)/||x+v||; throws DegenerateProjectionError when
// ||x+v|| <= 1e-12.
Vec RetractProj(const VecRef& x, const VecRef& v);

// Riemannian log: tangent vector at x of length d(x,y) pointing toward y.
// Throws AntipodalError when d(x,y) > pi - kAntipodalTol.
Vec LogMap(const VecRef& x, const VecRef& y);

// Angle of the point of the circle closest to x, in [-pi, pi). When x is
// (numerically) orthogonal to span(p,q) the projection is undefined; theta=0
// is returned and *degenerate (if given) is set.
double ProjectGreatCircle(const VecRef& x, const GreatCircle& c, bool* degenerate = nullptr);

// Embeds a circle angle back into R^m: cos(theta) p + sin(theta) q.
Vec CirclePoint(const GreatCircle& c, double theta);

// n i.i.d. uniform points on S_m (Gaussian-normalize construction).
Configuration SampleUniform(Index n, Index m, RngStream& rng);

// n i.i.d. draws from the power spherical distribution with density
// proportional to (1 + <mu, x>)^kappa. kappa = 0 reduces to uniform.
// Uses the marginal-Beta + Householder construction (no rejection loop).
Configuration SamplePowerSpherical(Index n, Index m, const VecRef& mu, double kappa, RngStream& rng);

GreatCircle SampleGreatCircle(Index m, CircleMode mode, RngStream& rng);

}  // namespace disperse

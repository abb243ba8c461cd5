#pragma once

#include <string>

#include "disperse/geometry.hpp"

namespace disperse {

enum class KernelFamily { kRbf, kLaplace, kRiesz };
enum class SphereMetric { kGeodesic, kChordal };

// Geodesic distances are clamped below this (radians) before inversion in the
// singular Riesz kernels, so coincident points stay finite during
// optimization.
inline constexpr double kRieszSingularEps = 1e-7;

// Rotation-invariant kernel k(x,y) = f(<x,y>), one of six families:
//   rbf-chordal        exp(gamma t)
//   rbf-geodesic       exp(-gamma arccos(t)^2)
//   laplace-chordal    exp(-gamma sqrt(2 - t))
//   laplace-geodesic   exp(-gamma arccos(t))
//   riesz-geodesic     arccos(t)^-s         (s = 0: -log arccos(t))
//   riesz-chordal      (2 - t)^(-s/2)       (s = 0: -1/2 log(2 - t))
// param is gamma > 0 for RBF/Laplace and s >= 0 for Riesz.
struct Kernel {
  KernelFamily family = KernelFamily::kRbf;
  SphereMetric metric = SphereMetric::kChordal;
  double param = 1.0;

  // Parses "family-metric:param", e.g. "rbf-chordal:1.0", "riesz-geodesic:1".
  static Kernel Parse(const std::string& spec);
  std::string ToString() const;

  // Positive-definiteness annotation for S_m, as recorded in the literature.
  // Not enforced numerically; surfaced in CLI docs.
  std::string PositiveDefiniteNote() const;

  // True for kernels whose f is unbounded as t -> 1 (clamping applies).
  bool SingularAtCoincidence() const;
};

// Validates the (family, param) combination; throws std::invalid_argument.
void ValidateKernel(const Kernel& k);

// f(t) with t = <x,y> in [-1, 1]. Singular Riesz kernels are evaluated with
// the geodesic distance clamped at kRieszSingularEps; *clamped (if given)
// flags when that happened.
double KernelEval(const Kernel& k, double t, bool* clamped = nullptr);

// df/dt for t strictly inside (-1, 1); throws std::domain_error at the
// endpoints where the arccos derivative is singular. Inside the Riesz clamp
// region the (flat) clamped kernel has derivative zero.
double KernelDcos(const Kernel& k, double t);

// The constant c = B(1/2,(m-1)/2)^{-1} Integral_{-1}^{1} f(t)(1-t^2)^{(m-3)/2} dt,
// i.e. E[k(z, Y)] for Y uniform on S_m. Computed by adaptive Gauss-Legendre
// quadrature after the substitution t = sin(u) (which removes the endpoint
// weight singularity for m = 2), refined to relative 1e-8.
// Throws for non-integrable Riesz-geodesic parameterizations (s >= m-1).
double MmdConstant(const Kernel& k, Index m, int max_panels = 20000);

// log Beta(a, b).
double LogBeta(double a, double b);

}  // namespace disperse

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "disperse/geometry.hpp"
#include "disperse/kernels.hpp"
#include "disperse/metrics.hpp"

namespace disperse {

enum class RegKind { kMm, kKoleo, kMhe, kWi, kLloyd, kSliced, kSsw };

// Per-point per-circle gradient contributions of the sliced objectives are
// clipped at this norm; the projection Jacobian blows up near the poles.
inline constexpr double kSlicedClipMax = 1e3;

// A dispersion objective together with its stochastic-gradient recipe.
// Spelled in CLI/config as `kind[:distance|kernel][:count]`, e.g.
// `mm:geodesic`, `mhe:rbf-chordal:1.0`, `lloyd:300`, `sliced:axis:13`,
// `ssw:uniform:50`.
struct RegularizerSpec {
  RegKind kind = RegKind::kMm;
  PairDistance distance = PairDistance::kGeodesic;  // MM / KoLeo
  std::optional<Kernel> kernel;                     // MHE / WI
  int lloyd_samples = 300;
  int circles_per_step = 1;
  CircleMode circle_mode = CircleMode::kUniform;
  int minibatch = 0;  // 0 = full batch
  bool mhe_unnormalized = false;

  static RegularizerSpec Parse(const std::string& spec);
  std::string ToString() const;
};

std::string RegKindName(RegKind kind);

// Stochastic gradient over a subset of points: `tangents` column k is a
// tangent vector at point `indices[k]`.
struct GradientBatch {
  std::vector<Index> indices;
  Mat tangents;
};

struct LloydGradStats {
  long skipped_antipodal = 0;
};

struct SlicedGradStats {
  long degenerate_projections = 0;
  long clipped_contributions = 0;
};

// ---- Pairwise objectives ----------------------------------------------------

// Max-min loss -(1/n) sum_i min_{j != i} d(x_i, x_j). Requires n >= 2.
double LossMm(const Configuration& X, PairDistance d);

// Kozachenko-Leonenko loss -(1/n) sum_i log min_{j != i} d(x_i, x_j).
// Throws on coincident points (log 0).
double LossKoleo(const Configuration& X, PairDistance d);

// Hyperspherical energy (1/(n(n-1))) sum_{i != j} k(x_i, x_j), both ordered
// pairs counted. `unnormalized` drops the 1/(n(n-1)) factor.
double LossMhe(const Configuration& X, const Kernel& k, bool unnormalized = false);

// log (1/n^2) sum_i sum_j k(x_i, x_j), diagonal included.
double LossWi(const Configuration& X, const Kernel& k);

// Unbiased MMD^2 estimate against Uniform(S_m): LossMhe - MmdConstant.
double LossMmdEstimate(const Configuration& X, const Kernel& k);

// Euclidean gradient of the pairwise loss named by `spec.kind`, restricted to
// the minibatch `batch` (the loss is evaluated on the sub-configuration).
// Columns follow `batch` order.
Mat GradPairwiseEuclidean(const Configuration& X, const RegularizerSpec& spec,
                          const std::vector<Index>& batch);

// Tangent-projected version of the above; `batch` empty means full batch.
// `euclidean_out`, if given, receives the pre-projection gradient.
GradientBatch GradPairwise(const Configuration& X, const RegularizerSpec& spec,
                           const std::vector<Index>& batch = {}, Mat* euclidean_out = nullptr);

// ---- Lloyd quantization ------------------------------------------------------

// Mean over samples y of min_j 1/2 d_S(y, x_j)^2; assignment ties go to the
// lowest index. Throws on an empty sample set.
double LossLloyd(const Configuration& X, const Configuration& samples);

// Nearest-center index per sample (lowest index wins ties).
std::vector<Index> LloydAssignment(const Configuration& X, const Configuration& samples);

// LossLloyd with a frozen assignment (fixed-Voronoi evaluation, used by
// finite-difference checks).
double LossLloydAssigned(const Configuration& X, const Configuration& samples,
                         const std::vector<Index>& assignment);

// Stochastic Riemannian gradient of LossLloyd: center i receives
// -(1/|samples|) sum_{assigned y} Log_{x_i}(y). Antipodal sample-center pairs
// are skipped and counted. `euclidean_out`, if given, receives the ambient
// gradient -(1/|samples|) sum (theta/sin theta) y, whose tangent projection
// is the Riemannian one.
GradientBatch GradLloyd(const Configuration& X, const Configuration& samples,
                        LloydGradStats* stats = nullptr, Mat* euclidean_out = nullptr);

// ---- Sliced dispersion -------------------------------------------------------

// Projection of an angle multiset onto the optimally-dispersed set: returns
// (targets, tau) with targets_i = tau + phi_{rank(i)},
// phi_k = -pi (n+1)/n + 2 pi k / n and tau the mean angle. Targets are not
// wrapped into [-pi, pi).
std::pair<std::vector<double>, double> ProjectCircularDispersed(const std::vector<double>& thetas);

// Angles of the points of X projected onto circle c; degenerate poles project
// to 0 and are flagged.
std::vector<double> ProjectConfiguration(const Configuration& X, const GreatCircle& c,
                                         std::vector<bool>* degenerate = nullptr);

// Mean over circles of sum_i 1/2 (theta_i - target_i)^2.
double LossSliced(const Configuration& X, const std::vector<GreatCircle>& circles);

// LossSliced with frozen per-circle targets (fixed sort and tau).
double LossSlicedWithTargets(const Configuration& X, const std::vector<GreatCircle>& circles,
                             const std::vector<std::vector<double>>& targets);

GradientBatch GradSliced(const Configuration& X, const std::vector<GreatCircle>& circles,
                         SlicedGradStats* stats = nullptr);

// ---- Spherical sliced Wasserstein --------------------------------------------

// Squared circular W2 of sorted unit-interval coordinates against
// Uniform[0,1): (1/n) sum t_i^2 - mean(t)^2
//             + (1/n^2) sum (n+1-2i) t_(i) + 1/12, ascending order.
double CircularW2Uniform(const std::vector<double>& unit_coords);

// Mean over circles of CircularW2Uniform of the projected angles mapped to
// [0,1) by t = (theta + pi) / (2 pi).
double LossSsw(const Configuration& X, const std::vector<GreatCircle>& circles);

// LossSsw with frozen ascending ranks per circle (fixed-sort evaluation).
double LossSswWithRanks(const Configuration& X, const std::vector<GreatCircle>& circles,
                        const std::vector<std::vector<Index>>& ranks);

GradientBatch GradSsw(const Configuration& X, const std::vector<GreatCircle>& circles,
                      SlicedGradStats* stats = nullptr);

// ---- Dispatch used by the harness ---------------------------------------------

// Loss of `spec` on the full configuration; stochastic ingredients (Lloyd
// samples, circles) are drawn from `rng`.
double EvalLoss(const Configuration& X, const RegularizerSpec& spec, RngStream& rng);

// One stochastic gradient step worth of tangents. `batch` restricts pairwise
// and Lloyd objectives to a sub-configuration; sliced objectives always use
// every point. `euclidean_out`, if given, receives the pre-projection ambient
// gradient (equal to the tangent one for Lloyd/Sliced/SSW).
GradientBatch EvalGradient(const Configuration& X, const RegularizerSpec& spec,
                           const std::vector<Index>& batch, RngStream& rng,
                           Mat* euclidean_out = nullptr);

// Draws `k` distinct indices from [0, n) without replacement.
std::vector<Index> SampleIndices(Index n, Index k, RngStream& rng);

}  // namespace disperse

#pragma once

#include <string>

#include "disperse/geometry.hpp"
#include "disperse/regularizers.hpp"

namespace disperse {

enum class OptMethod { kRsgd, kRadam, kProjectedAdam };
enum class Retraction { kExp, kProj };

OptMethod ParseOptMethod(const std::string& s);
std::string OptMethodName(OptMethod m);

struct OptimizerOptions {
  OptMethod method = OptMethod::kRadam;
  double lr = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Retraction retraction = Retraction::kExp;
  // Riemannian Adam second moments: per-point squared tangent norms by
  // default (rotation equivariant); per-coordinate mode exists for strict
  // parity with the Euclidean baseline.
  bool per_coordinate_m2 = false;
};

// First/second-moment accumulators for Adam variants, sized lazily on the
// first step. For radam, m1 columns are kept tangent at their base points by
// re-projection after each retraction.
class OptimizerState {
 public:
  explicit OptimizerState(OptimizerOptions opts) : opts_(opts) {}

  const OptimizerOptions& options() const { return opts_; }
  long step_count() const { return step_count_; }

  // x_i <- retract(x_i, -lr g_i) for every batch index. Throws if a gradient
  // column is not tangent at its base point.
  Configuration StepRsgd(const Configuration& X, const GradientBatch& grads);

  // Riemannian Adam (tangent momenta, re-projected transport, standard bias
  // correction).
  Configuration StepRadam(const Configuration& X, const GradientBatch& grads);

  // Euclidean Adam step on the ambient points followed by renormalization.
  // Throws if an iterate lands within 1e-12 of the origin.
  Configuration StepProjectedAdam(const Configuration& X, const std::vector<Index>& indices,
                                  const Mat& euclid_grads);

  // Dispatches on options().method; `euclid_grads` feeds the projected
  // baseline, the tangent batch feeds the Riemannian methods.
  Configuration Step(const Configuration& X, const GradientBatch& grads, const Mat& euclid_grads);

 private:
  void EnsureMoments(Index dim, Index n);
  void CheckTangent(const Configuration& X, const GradientBatch& grads) const;

  OptimizerOptions opts_;
  long step_count_ = 0;
  Mat m1_;         // m x n first moments
  Mat m2_coord_;   // m x n per-coordinate second moments (per-coordinate mode)
  Vec m2_point_;   // n per-point second moments (default mode)
  Vec step_of_point_;  // per-point step counter for bias correction
};

}  // namespace disperse

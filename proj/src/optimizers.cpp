#include "disperse/optimizers.hpp"

#include <cmath>
#include <stdexcept>

namespace disperse {

OptMethod ParseOptMethod(const std::string& s) {
  if (s == "rsgd") return OptMethod::kRsgd;
  if (s == "radam") return OptMethod::kRadam;
  if (s == "projected-adam") return OptMethod::kProjectedAdam;
  throw std::invalid_argument("optimizer: unknown method '" + s + "'");
}

std::string OptMethodName(OptMethod m) {
  switch (m) {
    case OptMethod::kRsgd:
      return "rsgd";
    case OptMethod::kRadam:
      return "radam";
    case OptMethod::kProjectedAdam:
      return "projected-adam";
  }
  return "?";
}

void OptimizerState::EnsureMoments(Index dim, Index n) {
  if (m1_.size() == 0) {
    m1_ = Mat::Zero(dim, n);
    m2_coord_ = Mat::Zero(dim, n);
    m2_point_ = Vec::Zero(n);
    step_of_point_ = Vec::Zero(n);
  }
}

void OptimizerState::CheckTangent(const Configuration& X, const GradientBatch& grads) const {
  for (std::size_t c = 0; c < grads.indices.size(); ++c) {
    const auto g = grads.tangents.col(static_cast<Index>(c));
    const auto x = X.point(grads.indices[c]);
    if (std::abs(x.dot(g)) > kTangentTol * std::max(g.norm(), 1e-300)) {
      throw std::invalid_argument("optimizer: gradient is not tangent at point " +
                                  std::to_string(grads.indices[c]));
    }
  }
}

Configuration OptimizerState::StepRsgd(const Configuration& X, const GradientBatch& grads) {
  CheckTangent(X, grads);
  Configuration out = X;
  for (std::size_t c = 0; c < grads.indices.size(); ++c) {
    const Index i = grads.indices[c];
    const Vec v = -opts_.lr * grads.tangents.col(static_cast<Index>(c));
    const Vec x = opts_.retraction == Retraction::kExp ? RetractExp(X.point(i), v) : RetractProj(X.point(i), v);
    out.set_point(i, x);
  }
  ++step_count_;
  return out;
}

Configuration OptimizerState::StepRadam(const Configuration& X, const GradientBatch& grads) {
  CheckTangent(X, grads);
  EnsureMoments(X.dim(), X.size());
  Configuration out = X;
  for (std::size_t c = 0; c < grads.indices.size(); ++c) {
    const Index i = grads.indices[c];
    const auto g = grads.tangents.col(static_cast<Index>(c));
    const double t = (step_of_point_(i) += 1.0);

    m1_.col(i) = opts_.beta1 * m1_.col(i) + (1.0 - opts_.beta1) * g;
    const double bc1 = 1.0 - std::pow(opts_.beta1, t);
    const double bc2 = 1.0 - std::pow(opts_.beta2, t);

    Vec v(X.dim());
    if (opts_.per_coordinate_m2) {
      m2_coord_.col(i) = opts_.beta2 * m2_coord_.col(i) + (1.0 - opts_.beta2) * g.cwiseProduct(g);
      const Vec denom = (m2_coord_.col(i) / bc2).cwiseSqrt().array() + opts_.eps;
      v = -opts_.lr * (m1_.col(i) / bc1).cwiseQuotient(denom);
    } else {
      m2_point_(i) = opts_.beta2 * m2_point_(i) + (1.0 - opts_.beta2) * g.squaredNorm();
      const double denom = std::sqrt(m2_point_(i) / bc2) + opts_.eps;
      v = -opts_.lr / denom * (m1_.col(i) / bc1);
    }
    // The update direction must be tangent; per-point scaling preserves
    // tangency, per-coordinate scaling does not, so re-project.
    v -= X.point(i).dot(v) * X.point(i);

    const Vec x = opts_.retraction == Retraction::kExp ? RetractExp(X.point(i), v) : RetractProj(X.point(i), v);
    out.set_point(i, x);
    // Transport the first moment by re-projection onto the new tangent space.
    m1_.col(i) -= out.point(i).dot(m1_.col(i)) * out.point(i);
  }
  ++step_count_;
  return out;
}

Configuration OptimizerState::StepProjectedAdam(const Configuration& X, const std::vector<Index>& indices,
                                                const Mat& euclid_grads) {
  EnsureMoments(X.dim(), X.size());
  Configuration out = X;
  for (std::size_t c = 0; c < indices.size(); ++c) {
    const Index i = indices[c];
    const auto g = euclid_grads.col(static_cast<Index>(c));
    const double t = (step_of_point_(i) += 1.0);

    m1_.col(i) = opts_.beta1 * m1_.col(i) + (1.0 - opts_.beta1) * g;
    m2_coord_.col(i) = opts_.beta2 * m2_coord_.col(i) + (1.0 - opts_.beta2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(opts_.beta1, t);
    const double bc2 = 1.0 - std::pow(opts_.beta2, t);
    const Vec denom = (m2_coord_.col(i) / bc2).cwiseSqrt().array() + opts_.eps;
    const Vec x = X.point(i) - opts_.lr * (m1_.col(i) / bc1).cwiseQuotient(denom);

    if (x.norm() <= 1e-12) {
      throw DegenerateProjectionError("StepProjectedAdam: iterate reached the origin, projection undefined");
    }
    out.set_point(i, x);  // set_point renormalizes when drift exceeds the repair threshold
  }
  ++step_count_;
  return out;
}

Configuration OptimizerState::Step(const Configuration& X, const GradientBatch& grads,
                                   const Mat& euclid_grads) {
  switch (opts_.method) {
    case OptMethod::kRsgd:
      return StepRsgd(X, grads);
    case OptMethod::kRadam:
      return StepRadam(X, grads);
    case OptMethod::kProjectedAdam:
      return StepProjectedAdam(X, grads.indices, euclid_grads);
  }
  throw std::logic_error("OptimizerState::Step: unreachable");
}

}  // namespace disperse
